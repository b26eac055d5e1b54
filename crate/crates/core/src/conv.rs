//! Stateless convolution primitives.
//!
//! All contracts use 1-based positions: the causal convolution is
//! `[u * phi](s) = sum_{i=1}^{s} u_i * phi_{s+1-i}` and the full convolution
//! of `a` (length `t1`) and `b` (length `t2`) has positions `1..=t1+t2-1`.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::scalar::Scalar;
use crate::signal::{Filter, Signal};

struct Plan<T: Scalar> {
    forward: Arc<dyn RealToComplex<T>>,
    inverse: Arc<dyn ComplexToReal<T>>,
}

/// Reusable FFT convolution workspace.
///
/// Transform lengths are always powers of two. Plans are cached per length
/// and buffers are reused between calls, so one convolver per engine keeps
/// the per-step overhead low.
pub struct FftConvolver<T: Scalar> {
    planner: RealFftPlanner<T>,
    plans: Vec<Option<Plan<T>>>,
    time_a: Vec<T>,
    time_b: Vec<T>,
    spec_a: Vec<Complex<T>>,
    spec_b: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    convolutions: u64,
}

impl<T: Scalar> Default for FftConvolver<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> std::fmt::Debug for FftConvolver<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftConvolver").field("convolutions", &self.convolutions).finish()
    }
}

impl<T: Scalar> FftConvolver<T> {
    pub fn new() -> Self {
        Self {
            planner: RealFftPlanner::new(),
            plans: Vec::new(),
            time_a: Vec::new(),
            time_b: Vec::new(),
            spec_a: Vec::new(),
            spec_b: Vec::new(),
            scratch: Vec::new(),
            convolutions: 0,
        }
    }

    /// Number of fast convolutions performed so far.
    pub fn convolutions(&self) -> u64 {
        self.convolutions
    }

    /// Transform length needed to read `len` entries of `a * b` starting at
    /// 0-based index `start` from a cyclic convolution without aliasing.
    ///
    /// The window must fit (`n >= start + len`) and every linear index
    /// `q >= n` must fold below the window (`q - n < start`).
    pub fn window_transform_len(a_len: usize, b_len: usize, start: usize, len: usize) -> usize {
        let full = a_len + b_len - 1;
        let need = (start + len).max(full.saturating_sub(start));
        need.max(2).next_power_of_two()
    }

    /// Writes `out[i] = (a * b)[start + i]` using 0-based indices of the
    /// full linear convolution, with one cyclic FFT convolution. Entries
    /// past the end of the full convolution are zero.
    ///
    /// Returns the transform length used, or 0 if either operand is empty.
    pub fn window_into(&mut self, a: &[T], b: &[T], start: usize, out: &mut [T]) -> usize {
        if a.is_empty() || b.is_empty() || out.is_empty() {
            out.fill(T::zero());
            return 0;
        }
        let n = Self::window_transform_len(a.len(), b.len(), start, out.len());
        self.convolve_cyclic(a, b, n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.time_a[start + i];
        }
        n
    }

    /// Full linear convolution `a * b`, length `a.len() + b.len() - 1`.
    pub fn full(&mut self, a: &[T], b: &[T]) -> Vec<T> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![T::zero(); a.len() + b.len() - 1];
        self.window_into(a, b, 0, &mut out);
        out
    }

    /// Cyclic convolution of the inputs folded modulo `n`; result left in `time_a`.
    fn convolve_cyclic(&mut self, a: &[T], b: &[T], n: usize) {
        debug_assert!(n.is_power_of_two());
        let level = n.trailing_zeros() as usize;
        if self.plans.len() <= level {
            self.plans.resize_with(level + 1, || None);
        }
        if self.plans[level].is_none() {
            self.plans[level] = Some(Plan {
                forward: self.planner.plan_fft_forward(n),
                inverse: self.planner.plan_fft_inverse(n),
            });
        }
        let plan = self.plans[level].as_ref().expect("plan cached above");

        fold_into(&mut self.time_a, a, n);
        fold_into(&mut self.time_b, b, n);
        let bins = n / 2 + 1;
        self.spec_a.resize(bins, Complex::default());
        self.spec_b.resize(bins, Complex::default());
        let scratch_len = plan
            .forward
            .get_scratch_len()
            .max(plan.inverse.get_scratch_len());
        self.scratch.resize(scratch_len, Complex::default());

        plan.forward
            .process_with_scratch(&mut self.time_a, &mut self.spec_a, &mut self.scratch)
            .expect("buffer lengths match the plan");
        plan.forward
            .process_with_scratch(&mut self.time_b, &mut self.spec_b, &mut self.scratch)
            .expect("buffer lengths match the plan");

        let scale = T::one() / T::from_usize(n).expect("transform length fits the scalar");
        for (x, y) in self.spec_a.iter_mut().zip(&self.spec_b) {
            *x = *x * *y * scale;
        }
        // The DC and Nyquist bins of a real signal's spectrum are real.
        self.spec_a[0].im = T::zero();
        self.spec_a[bins - 1].im = T::zero();

        self.time_a.resize(n, T::zero());
        plan.inverse
            .process_with_scratch(&mut self.spec_a, &mut self.time_a, &mut self.scratch)
            .expect("buffer lengths match the plan");
        self.convolutions += 1;
    }
}

fn fold_into<T: Scalar>(buf: &mut Vec<T>, x: &[T], n: usize) {
    buf.clear();
    buf.resize(n, T::zero());
    for chunk in x.chunks(n) {
        for (b, &v) in buf.iter_mut().zip(chunk) {
            *b += v;
        }
    }
}

/// Direct-summation causal convolution, the ground truth for every fast path.
///
/// Output position `s` is `sum_{i=1}^{s} u_i * phi_{s+1-i}`; costs
/// `len(u)^2 / 2` multiply-adds.
pub fn conv_causal_reference<T: Scalar>(u: &Signal<T>, phi: &Filter<T>) -> Signal<T> {
    let out = (1..=u.len() as isize)
        .map(|s| {
            let mut acc = T::zero();
            for i in 1..=s {
                acc += u.at(i) * phi.tap(s + 1 - i);
            }
            acc
        })
        .collect();
    Signal::from_vec_unchecked(out)
}

/// Full linear convolution through one power-of-two FFT.
///
/// Returns an empty signal when either operand is empty.
pub fn conv_full<T: Scalar>(a: &Signal<T>, b: &Signal<T>) -> Signal<T> {
    Signal::from_vec_unchecked(FftConvolver::new().full(a, b))
}

/// Contribution of all of `v` to the positions of `v * w` strictly after `v` ends.
///
/// `[FutureFill(v, w)]_s = sum_{i=1}^{t2-s} v_{t1-i+1} * w_{s+i}` for
/// `s in 1..t2`, which is the slice `t1+1 ..= t1+t2-1` of the full
/// convolution. Computed as one full FFT convolution followed by that slice.
pub fn futurefill<T: Scalar>(v: &Signal<T>, w: &Signal<T>) -> Signal<T> {
    let out_len = w.len().saturating_sub(1);
    if v.is_empty() || out_len == 0 {
        return Signal::zeros(out_len);
    }
    let full = FftConvolver::new().full(v, w);
    Signal::from_vec_unchecked(full[v.len()..v.len() + out_len].to_vec())
}

/// Scaled disagreement `max |x - reference| / (1 + max |reference|)`.
///
/// Lengths must match; a length mismatch is reported as infinite error.
pub fn agreement_error<T: Scalar>(x: &[T], reference: &[T]) -> f64 {
    if x.len() != reference.len() {
        return f64::INFINITY;
    }
    let scale = reference.iter().fold(0.0f64, |m, r| m.max(r.to_f64_lossy().abs()));
    let worst = x
        .iter()
        .zip(reference)
        .fold(0.0f64, |m, (a, b)| m.max((a.to_f64_lossy() - b.to_f64_lossy()).abs()));
    if worst.is_nan() {
        return f64::INFINITY;
    }
    worst / (1.0 + scale)
}

/// Checks the split identity for `a * b` (both of length `t`) at split point `t1`.
///
/// Positions `s <= t1` must equal the convolution of the two prefixes; later
/// positions must equal the convolution of the tail of `a` with the head of
/// `b` plus `futurefill(a[..t1], b)`. Agreement uses `T::AGREEMENT_TOL`.
///
/// # Panics
/// If `a` and `b` differ in length or `t1` is outside `1..=len`.
pub fn split_check<T: Scalar>(a: &Signal<T>, b: &Signal<T>, t1: usize) -> bool {
    let t = a.len();
    assert_eq!(t, b.len(), "split_check needs equal-length operands");
    assert!((1..=t).contains(&t1), "split point {t1} outside 1..={t}");

    let as_filter = |x: &[T]| Filter::from_taps(x.to_vec()).expect("finite by construction");
    let whole = conv_causal_reference(a, &as_filter(b));

    let head_a = Signal::from_vec_unchecked(a[..t1].to_vec());
    let head = conv_causal_reference(&head_a, &as_filter(&b[..t1]));

    let tail_a = Signal::from_vec_unchecked(a[t1..].to_vec());
    let tail = conv_causal_reference(&tail_a, &as_filter(&b[..t - t1]));
    let ff = futurefill(&head_a, b);

    let mut stitched = head.into_vec();
    stitched.extend(tail.iter().zip(ff.iter()).map(|(&x, &y)| x + y));
    agreement_error(&stitched, &whole) <= T::AGREEMENT_TOL
}
