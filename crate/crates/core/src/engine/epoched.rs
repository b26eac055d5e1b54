use super::meter::transform_cost;
use super::{CostMeter, OnlineConvEngine};
use crate::conv::FftConvolver;
use crate::error::{Error, Result};
use crate::scalar::{dot_reversed, Scalar};
use crate::signal::Filter;

/// Epoched FutureFill: direct sums inside an epoch of `K` steps, plus a
/// `K`-slot cache of the contribution of all earlier epochs.
///
/// At step `t` with epoch phase `tau` the output is
/// `sum_{j=1}^{tau} u_{t+1-j} phi_j + C_tau`. When `tau` reaches `K` the
/// cache is rebuilt as the first `K` entries of `FutureFill(u_{1:t}, phi_{1:t+K})`.
///
/// A rebuild uses one FFT convolution unless the direct product
/// (`K * t` multiply-adds) is cheaper than the transform (`n log2 n`); the
/// meter charges whichever path ran.
pub struct EpochedEngine<T: Scalar> {
    taps: Vec<T>,
    horizon: usize,
    epoch: usize,
    tau: usize,
    inputs: Vec<T>,
    cache: Vec<T>,
    conv: FftConvolver<T>,
    meter: CostMeter,
}

impl<T: Scalar> EpochedEngine<T> {
    pub fn new(filter: &Filter<T>, horizon: usize, epoch: usize) -> Result<Self> {
        if epoch == 0 || epoch > horizon {
            return Err(Error::Config(format!(
                "epoch length {epoch} must lie in 1..={horizon}"
            )));
        }
        let mut meter = CostMeter::default();
        meter.observe_aux(epoch as u64);
        Ok(Self {
            taps: filter.head(horizon).to_vec(),
            horizon,
            epoch,
            tau: 1,
            inputs: Vec::with_capacity(horizon),
            cache: vec![T::zero(); epoch],
            conv: FftConvolver::new(),
            meter,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Current FutureFill cache, slot `j` at index `j - 1`.
    pub fn cache(&self) -> &[T] {
        &self.cache
    }

    fn rebuild(&mut self) {
        let t = self.inputs.len();
        let k = self.epoch;
        let phi = &self.taps[..(t + k).min(self.taps.len())];
        let n = FftConvolver::<T>::window_transform_len(t, phi.len().max(1), t, k);
        let direct = (k * t) as u64;
        if direct <= transform_cost(n) {
            self.meter.add_macs(direct);
            for (j, slot) in self.cache.iter_mut().enumerate() {
                // C_{j+1} = sum_{i} u_i phi_{t+j+2-i}, stored phi index t+j+1-i
                let lo = (t + j + 1).saturating_sub(phi.len());
                *slot = if lo >= t {
                    T::zero()
                } else {
                    let len = t - lo;
                    dot_reversed(&self.inputs[lo..t], &phi[j + 1..j + 1 + len])
                };
            }
        } else {
            let used = self.conv.window_into(&self.inputs, phi, t, &mut self.cache);
            self.meter.record_transform(used, true);
        }
        self.meter.add_rebuild();
    }
}

impl<T: Scalar> OnlineConvEngine<T> for EpochedEngine<T> {
    fn push(&mut self, sample: T) -> T {
        assert!(self.inputs.len() < self.horizon, "push beyond horizon {}", self.horizon);
        self.inputs.push(sample);
        let t = self.inputs.len();
        let tau = self.tau;
        self.meter.add_macs(tau as u64);
        let m = tau.min(self.taps.len());
        let y = dot_reversed(&self.inputs[t - m..], &self.taps[..m]) + self.cache[tau - 1];
        if tau == self.epoch {
            self.rebuild();
            self.tau = 1;
        } else {
            self.tau += 1;
        }
        y
    }

    fn reset(&mut self) {
        self.inputs.clear();
        self.cache.fill(T::zero());
        self.tau = 1;
        self.meter = CostMeter::default();
        self.meter.observe_aux(self.epoch as u64);
    }

    fn meter(&self) -> &CostMeter {
        &self.meter
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn steps(&self) -> usize {
        self.inputs.len()
    }

    fn name(&self) -> &'static str {
        "epoched"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> Filter<f64> {
        Filter::from_taps(vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn hand_trace_with_epoch_two() {
        let mut e = EpochedEngine::new(&ramp(), 4, 2).unwrap();
        assert_eq!(e.push(1.0), 1.0);
        assert_eq!(e.push(1.0), 3.0);
        // FF(u_{1:2}, phi_{1:4})_{1,2} = [u2 phi2 + u1 phi3, u2 phi3 + u1 phi4]
        assert_eq!(e.cache(), &[5.0, 7.0]);
        assert_eq!(e.push(1.0), 6.0);
        assert_eq!(e.push(1.0), 10.0);
        assert_eq!(e.meter().cache_rebuilds(), 2);
    }

    #[test]
    fn epoch_one_rebuilds_every_step() {
        let mut e = EpochedEngine::new(&ramp(), 4, 1).unwrap();
        let out: Vec<f64> = [1.0, -1.0, 2.0, 0.5].iter().map(|&x| e.push(x)).collect();
        // y4 = 0.5*1 + 2*2 - 1*3 + 1*4
        assert_eq!(out, vec![1.0, 1.0, 3.0, 5.5]);
        assert_eq!(e.meter().cache_rebuilds(), 4);
    }

    #[test]
    fn full_epoch_behaves_like_naive() {
        let mut e = EpochedEngine::new(&ramp(), 4, 4).unwrap();
        let out: Vec<f64> = (0..4).map(|_| e.push(1.0)).collect();
        assert_eq!(out, vec![1.0, 3.0, 6.0, 10.0]);
        assert_eq!(e.meter().cache_rebuilds(), 1);
    }

    #[test]
    fn fft_rebuild_path_matches_direct_path() {
        // large epoch forces the transform path; epoch 1 forces direct
        let taps: Vec<f64> = (0..600).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let f = Filter::from_taps(taps).unwrap();
        let mut fast = EpochedEngine::new(&f, 600, 200).unwrap();
        let mut slow = EpochedEngine::new(&f, 600, 1).unwrap();
        for t in 0..600 {
            let x = ((t * 31) % 17) as f64 - 8.0;
            let (a, b) = (fast.push(x), slow.push(x));
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "t={t}: {a} vs {b}");
        }
        assert!(fast.meter().transforms() > 0);
        assert_eq!(slow.meter().transforms(), 0);
    }

    #[test]
    fn rejects_bad_epoch() {
        assert!(EpochedEngine::new(&ramp(), 4, 0).is_err());
        assert!(EpochedEngine::new(&ramp(), 4, 5).is_err());
    }
}
