#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Double-loop full convolution, 0-based.
pub fn full_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// FutureFill straight from its definition:
/// `[FF(v, w)]_s = sum_{i=1}^{t2-s} v_{t1-i+1} w_{s+i}`, 1-based, zero outside range.
pub fn futurefill_direct(v: &[f64], w: &[f64]) -> Vec<f64> {
    let (t1, t2) = (v.len() as isize, w.len() as isize);
    let at = |x: &[f64], p: isize| if p >= 1 && p <= x.len() as isize { x[p as usize - 1] } else { 0.0 };
    (1..t2)
        .map(|s| (1..=t2 - s).map(|i| at(v, t1 - i + 1) * at(w, s + i)).sum())
        .collect()
}

pub fn scaled_err(x: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(x.len(), reference.len());
    let scale = reference.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    x.iter().zip(reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / (1.0 + scale)
}
