use nalgebra::DMatrix;

/// Entry `(i, j)` (1-based) of `H_L = int_0^1 mu_a mu_a^T da` with
/// `mu_a = (a - 1) [1, a, .., a^(L-1)]`.
///
/// The integrand is `(a - 1)^2 a^(i+j-2)`; with `m = i + j` it integrates to
/// `1/(m+1) - 2/m + 1/(m-1) = 2 / (m^3 - m)`.
///
/// # Panics
/// If `i` or `j` is zero.
pub fn hankel_entry(i: usize, j: usize) -> f64 {
    assert!(i >= 1 && j >= 1, "Hankel indices are 1-based");
    let m = (i + j) as f64;
    2.0 / ((m * m - 1.0) * m)
}

pub fn hankel_matrix(len: usize) -> DMatrix<f64> {
    DMatrix::from_fn(len, len, |r, c| hankel_entry(r + 1, c + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_entries() {
        assert!((hankel_entry(1, 1) - 1.0 / 3.0).abs() < 1e-16);
        assert!((hankel_entry(1, 2) - 1.0 / 12.0).abs() < 1e-16);
        assert_eq!(hankel_entry(3, 5), hankel_entry(5, 3));
    }

    #[test]
    fn matrix_is_symmetric_and_positive() {
        let h = hankel_matrix(12);
        for r in 0..12 {
            for c in 0..12 {
                assert_eq!(h[(r, c)], h[(c, r)]);
                assert!(h[(r, c)] > 0.0);
            }
        }
    }
}
