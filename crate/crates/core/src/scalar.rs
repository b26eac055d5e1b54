use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use realfft::FftNum;

/// Real floating-point sample type shared by every convolution path.
///
/// Implemented for `f32` and `f64`. The fast transforms, the direct inner
/// products and the cost meters are all written against this trait.
pub trait Scalar:
    Float + FftNum + NumAssign + FromPrimitive + ToPrimitive + Default + Sum + Debug + Display
{
    /// Relative-plus-absolute tolerance for fast-versus-direct agreement:
    /// `max |fast - direct| <= TOL * (1 + max |direct|)`.
    const AGREEMENT_TOL: f64;

    /// Lossy conversion from `f64`, used for literals and for data produced in
    /// double precision (spectral filters, RNG draws).
    fn from_f64_lossy(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Scalar for f32 {
    const AGREEMENT_TOL: f64 = 1e-3;

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const AGREEMENT_TOL: f64 = 1e-9;

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Inner product with four independent accumulators.
///
/// Every direct-summation path of the engines goes through here so that the
/// naive baseline and the fast engines share the same inner loop.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Inner product of `a` with `b` read back to front: `sum_i a[i] * b[n-1-i]`.
///
/// With `a` the most recent `n` inputs (oldest first) and `b` the first `n`
/// filter taps this is one output of a causal convolution.
#[inline]
pub fn dot_reversed<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len().min(b.len());
    let mut acc = [T::zero(); 4];
    let mut i = 0;
    while i + 4 <= n {
        acc[0] += a[i] * b[n - 1 - i];
        acc[1] += a[i + 1] * b[n - 2 - i];
        acc[2] += a[i + 2] * b[n - 3 - i];
        acc[3] += a[i + 3] * b[n - 4 - i];
        i += 4;
    }
    let mut tail = T::zero();
    while i < n {
        tail += a[i] * b[n - 1 - i];
        i += 1;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
