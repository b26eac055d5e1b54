use rand::Rng;

use super::{Matrix, SpectralFilterBank};
use crate::conv::conv_full;
use crate::engine::{EngineKind, OnlineConvEngine};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::{Filter, Signal};

/// Projection parameters of an STU layer.
#[derive(Debug, Clone, PartialEq)]
pub enum StuParams<T = f64> {
    /// One `d_out x d_in` matrix per filter:
    /// `y_t = sum_i M_i [u * phi_i]_t`, taking `k * d_in` convolutions per step.
    Full { projections: Vec<Matrix<T>> },
    /// Rank-factored form with `m1: k x d` and `m2: d x d`. Inputs are
    /// projected by `m2` and coordinate `c` is convolved with the single
    /// filter `sum_i m1[i, c] phi_i`: `d` convolutions per step.
    Tensordot { m1: Matrix<T>, m2: Matrix<T> },
}

/// Spectral filters plus projections.
#[derive(Debug, Clone, PartialEq)]
pub struct StuModel<T = f64> {
    bank: SpectralFilterBank<T>,
    d_in: usize,
    d_out: usize,
    params: StuParams<T>,
}

impl<T: Scalar> StuModel<T> {
    pub fn full(bank: SpectralFilterBank<T>, projections: Vec<Matrix<T>>) -> Result<Self> {
        if projections.len() != bank.k() {
            return Err(Error::Dimension(format!(
                "{} projections for {} filters",
                projections.len(),
                bank.k()
            )));
        }
        let (d_out, d_in) = (projections[0].rows(), projections[0].cols());
        if projections.iter().any(|m| m.rows() != d_out || m.cols() != d_in) {
            return Err(Error::Dimension("projection matrices differ in shape".into()));
        }
        Ok(Self { bank, d_in, d_out, params: StuParams::Full { projections } })
    }

    pub fn tensordot(bank: SpectralFilterBank<T>, m1: Matrix<T>, m2: Matrix<T>) -> Result<Self> {
        let d = m2.rows();
        if m2.cols() != d {
            return Err(Error::Dimension(format!("m2 must be square, got {}x{}", m2.rows(), m2.cols())));
        }
        if m1.rows() != bank.k() || m1.cols() != d {
            return Err(Error::Dimension(format!(
                "m1 must be {}x{d}, got {}x{}",
                bank.k(),
                m1.rows(),
                m1.cols()
            )));
        }
        Ok(Self { bank, d_in: d, d_out: d, params: StuParams::Tensordot { m1, m2 } })
    }

    /// Full-mode model with i.i.d. uniform `[-scale, scale]` entries.
    pub fn random_full<R: Rng + ?Sized>(
        bank: SpectralFilterBank<T>,
        d_in: usize,
        d_out: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let projections = (0..bank.k())
            .map(|_| Matrix::from_fn(d_out, d_in, |_, _| T::from_f64_lossy(rng.random_range(-scale..=scale))))
            .collect();
        Self::full(bank, projections)
    }

    /// Full-mode model with all projections zero.
    pub fn zeros_full(bank: SpectralFilterBank<T>, d_in: usize, d_out: usize) -> Result<Self> {
        let projections = (0..bank.k()).map(|_| Matrix::zeros(d_out, d_in)).collect();
        Self::full(bank, projections)
    }

    pub fn bank(&self) -> &SpectralFilterBank<T> {
        &self.bank
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn params(&self) -> &StuParams<T> {
        &self.params
    }

    pub fn projections(&self) -> Option<&[Matrix<T>]> {
        match &self.params {
            StuParams::Full { projections } => Some(projections),
            StuParams::Tensordot { .. } => None,
        }
    }

    pub fn projections_mut(&mut self) -> Option<&mut [Matrix<T>]> {
        match &mut self.params {
            StuParams::Full { projections } => Some(projections),
            StuParams::Tensordot { .. } => None,
        }
    }

    /// Per-dimension filters of the tensordot form, `M_filters[:, c] = sum_i m1[i, c] phi_i`.
    pub fn tensordot_filters(&self) -> Option<Vec<Vec<T>>> {
        let StuParams::Tensordot { m1, .. } = &self.params else {
            return None;
        };
        let filters = (0..self.d_in)
            .map(|c| {
                (0..self.bank.len())
                    .map(|pos| (0..self.bank.k()).map(|i| m1.get(i, c) * self.bank.filter(i)[pos]).sum())
                    .collect()
            })
            .collect();
        Some(filters)
    }

    /// The full-mode model computing the same map as this tensordot model:
    /// `M_i[c, j] = m1[i, c] * m2[c, j]`.
    pub fn expand_tensordot(&self) -> Result<Self> {
        let StuParams::Tensordot { m1, m2 } = &self.params else {
            return Err(Error::Config("model is not in tensordot mode".into()));
        };
        let projections = (0..self.bank.k())
            .map(|i| Matrix::from_fn(self.d_out, self.d_in, |c, j| m1.get(i, c) * m2.get(c, j)))
            .collect();
        Self::full(self.bank.clone(), projections)
    }

    /// `sum_i M_i F_i` for per-filter feature vectors `F_i` (full mode only).
    pub fn predict_from_features(&self, features: &[Vec<T>]) -> Result<Vec<T>> {
        let projections = self.full_projections()?;
        if features.len() != projections.len() || features.iter().any(|f| f.len() != self.d_in) {
            return Err(Error::Dimension(format!(
                "expected {} feature vectors of length {}",
                projections.len(),
                self.d_in
            )));
        }
        let mut out = vec![T::zero(); self.d_out];
        for (m, f) in projections.iter().zip(features) {
            m.mul_vec_acc(f, &mut out);
        }
        Ok(out)
    }

    /// Gradient of `||y - y_hat||^2` with respect to each `M_i`:
    /// `2 (y_hat - y) F_i^T`.
    pub fn loss_gradients(&self, features: &[Vec<T>], prediction: &[T], target: &[T]) -> Result<Vec<Matrix<T>>> {
        let projections = self.full_projections()?;
        if target.len() != self.d_out || prediction.len() != self.d_out {
            return Err(Error::Dimension(format!("target must have length {}", self.d_out)));
        }
        let two = T::one() + T::one();
        let residual: Vec<T> = prediction.iter().zip(target).map(|(&p, &y)| two * (p - y)).collect();
        Ok(features
            .iter()
            .take(projections.len())
            .map(|f| Matrix::from_fn(self.d_out, self.d_in, |r, c| residual[r] * f[c]))
            .collect())
    }

    /// Offline reference: every filter convolved with every input
    /// coordinate over the whole stream by FFT, then projected.
    pub fn forward_batch(&self, inputs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
        let steps = inputs.len();
        if inputs.iter().any(|u| u.len() != self.d_in) {
            return Err(Error::Dimension(format!("inputs must have length {}", self.d_in)));
        }
        let column = |c: usize, proj: Option<&Matrix<T>>| -> Signal<T> {
            let col = inputs
                .iter()
                .map(|u| match proj {
                    Some(m) => crate::scalar::dot(m.row(c), u),
                    None => u[c],
                })
                .collect();
            Signal::new(col).expect("finite inputs")
        };
        let mut out = vec![vec![T::zero(); self.d_out]; steps];
        match &self.params {
            StuParams::Full { projections } => {
                for (i, m) in projections.iter().enumerate() {
                    let phi = Signal::new(self.bank.filter(i).to_vec())?;
                    for j in 0..self.d_in {
                        let conv = conv_full(&column(j, None), &phi);
                        for (t, row) in out.iter_mut().enumerate() {
                            for (r, o) in row.iter_mut().enumerate() {
                                *o += m.get(r, j) * conv[t];
                            }
                        }
                    }
                }
            }
            StuParams::Tensordot { m2, .. } => {
                let filters = self.tensordot_filters().expect("tensordot mode");
                for (c, f) in filters.into_iter().enumerate() {
                    let conv = conv_full(&column(c, Some(m2)), &Signal::new(f)?);
                    for (t, row) in out.iter_mut().enumerate() {
                        row[c] = conv[t];
                    }
                }
            }
        }
        Ok(out)
    }

    fn full_projections(&self) -> Result<&[Matrix<T>]> {
        self.projections()
            .ok_or_else(|| Error::Config("operation needs a full-mode model".into()))
    }
}

/// A model bound to one online engine per convolution channel.
///
/// Full mode runs `k * d_in` engines (filter-major); tensordot mode runs
/// `d` engines, one per projected coordinate.
pub struct StuSession<T: Scalar> {
    model: StuModel<T>,
    engines: Vec<Box<dyn OnlineConvEngine<T>>>,
    features: Vec<Vec<T>>,
    scratch: Vec<T>,
}

impl<T: Scalar> StuSession<T> {
    pub fn new(model: StuModel<T>, kind: EngineKind, horizon: usize) -> Result<Self> {
        let filters: Vec<Filter<T>> = match &model.params {
            StuParams::Full { .. } => {
                let mut v = Vec::with_capacity(model.bank.k() * model.d_in);
                for i in 0..model.bank.k() {
                    let f = model.bank.as_filter(i);
                    v.extend(std::iter::repeat_n(f, model.d_in));
                }
                v
            }
            StuParams::Tensordot { .. } => model
                .tensordot_filters()
                .expect("tensordot mode")
                .into_iter()
                .map(Filter::from_taps)
                .collect::<Result<_>>()?,
        };
        let engines = filters
            .iter()
            .map(|f| kind.build(f, horizon))
            .collect::<Result<Vec<_>>>()?;
        let features = match model.params {
            StuParams::Full { .. } => vec![vec![T::zero(); model.d_in]; model.bank.k()],
            StuParams::Tensordot { .. } => Vec::new(),
        };
        Ok(Self { model, engines, features, scratch: Vec::new() })
    }

    pub fn model(&self) -> &StuModel<T> {
        &self.model
    }

    pub fn into_model(self) -> StuModel<T> {
        self.model
    }

    pub fn engines(&self) -> &[Box<dyn OnlineConvEngine<T>>] {
        &self.engines
    }

    /// Feature vectors `F_i = ([u_c * phi_i]_t)_c` from the last full-mode step.
    pub fn features(&self) -> &[Vec<T>] {
        &self.features
    }

    /// Pushes `u_t` through every channel engine and returns `y_hat_t`.
    pub fn step(&mut self, u: &[T]) -> Result<Vec<T>> {
        if u.len() != self.model.d_in {
            return Err(Error::Dimension(format!(
                "input has length {}, model expects {}",
                u.len(),
                self.model.d_in
            )));
        }
        match &self.model.params {
            StuParams::Full { .. } => {
                let d_in = self.model.d_in;
                for (i, feat) in self.features.iter_mut().enumerate() {
                    for (c, f) in feat.iter_mut().enumerate() {
                        *f = self.engines[i * d_in + c].push(u[c]);
                    }
                }
                self.model.predict_from_features(&self.features)
            }
            StuParams::Tensordot { m2, .. } => {
                self.scratch.clear();
                self.scratch.resize(self.model.d_in, T::zero());
                m2.mul_vec_acc(u, &mut self.scratch);
                Ok(self
                    .scratch
                    .iter()
                    .zip(self.engines.iter_mut())
                    .map(|(&v, e)| e.push(v))
                    .collect())
            }
        }
    }

    /// Predicts `y_hat_t`, then takes one gradient step
    /// `M_i <- M_i - lr * 2 (y_hat_t - y_t) F_i^T` on the squared loss.
    ///
    /// Returns the prediction and the loss it suffered.
    pub fn ogd_step(&mut self, u: &[T], target: &[T], lr: f64) -> Result<(Vec<T>, T)> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        if self.model.projections().is_none() {
            return Err(Error::Config("online gradient updates need a full-mode model".into()));
        }
        if target.len() != self.model.d_out {
            return Err(Error::Dimension(format!("target must have length {}", self.model.d_out)));
        }
        let prediction = self.step(u)?;
        let loss = prediction.iter().zip(target).map(|(&p, &y)| (y - p) * (y - p)).sum();
        let two_lr = T::from_f64_lossy(2.0 * lr);
        let residual: Vec<T> = prediction.iter().zip(target).map(|(&p, &y)| p - y).collect();
        let features = &self.features;
        let projections = self.model.projections_mut().expect("checked above");
        for (m, f) in projections.iter_mut().zip(features) {
            m.sub_outer(two_lr, &residual, f);
        }
        Ok((prediction, loss))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn copy_kernel_identity_projection_echoes_input() {
        let mut taps = vec![0.0; 8];
        taps[0] = 1.0;
        let bank = SpectralFilterBank::from_filters(8, vec![taps]).unwrap();
        let model = StuModel::full(bank, vec![Matrix::identity(2)]).unwrap();
        let mut s = StuSession::new(model, EngineKind::Continuous, 8).unwrap();
        for t in 0..8 {
            let u = [t as f64, -(t as f64) * 0.5];
            let y = s.step(&u).unwrap();
            assert!((y[0] - u[0]).abs() < 1e-12 && (y[1] - u[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_errors() {
        let bank = SpectralFilterBank::<f64>::hankel(8, 2).unwrap();
        assert!(StuModel::full(bank.clone(), vec![Matrix::zeros(2, 2)]).is_err());
        assert!(StuModel::full(bank.clone(), vec![Matrix::zeros(2, 2), Matrix::zeros(2, 3)]).is_err());
        assert!(StuModel::tensordot(bank.clone(), Matrix::zeros(3, 2), Matrix::zeros(2, 2)).is_err());
        let model = StuModel::zeros_full(bank, 3, 2).unwrap();
        let mut s = StuSession::new(model, EngineKind::Naive, 8).unwrap();
        assert!(matches!(s.step(&[1.0, 2.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn ogd_rejects_bad_step_and_tensordot() {
        let bank = SpectralFilterBank::<f64>::hankel(8, 2).unwrap();
        let model = StuModel::zeros_full(bank.clone(), 2, 2).unwrap();
        let mut s = StuSession::new(model, EngineKind::Naive, 8).unwrap();
        assert!(s.ogd_step(&[1.0, 1.0], &[0.0, 0.0], 0.0).is_err());
        assert!(s.ogd_step(&[1.0, 1.0], &[0.0, 0.0], -1.0).is_err());

        let td = StuModel::tensordot(bank, Matrix::zeros(2, 2), Matrix::identity(2)).unwrap();
        let mut s = StuSession::new(td, EngineKind::Naive, 8).unwrap();
        assert!(s.ogd_step(&[1.0, 1.0], &[0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn exact_prediction_leaves_model_unchanged() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let bank = SpectralFilterBank::<f64>::hankel(16, 2).unwrap();
        let model = StuModel::random_full(bank, 2, 2, 1.0, &mut rng).unwrap();
        let mut probe = StuSession::new(model.clone(), EngineKind::Naive, 16).unwrap();
        let mut s = StuSession::new(model.clone(), EngineKind::Naive, 16).unwrap();
        for t in 0..16 {
            let u = [(t as f64).sin(), (t as f64).cos()];
            let y = probe.step(&u).unwrap();
            let (pred, loss) = s.ogd_step(&u, &y, 0.5).unwrap();
            assert_eq!(pred, y);
            assert_eq!(loss, 0.0);
        }
        assert_eq!(s.model(), &model);
    }
}
