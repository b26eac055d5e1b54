use std::io::{BufRead, Write};

use nalgebra::SymmetricEigen;
use rand::Rng;

use super::hankel::hankel_matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::Filter;

/// Largest `L` for which the dense Hankel eigendecomposition is attempted.
pub const EIGENSOLVE_CAP: usize = 4096;

/// `k` filters of length `L`, optionally with their Hankel eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFilterBank<T = f64> {
    len: usize,
    filters: Vec<Vec<T>>,
    eigenvalues: Option<Vec<f64>>,
}

impl<T: Scalar> SpectralFilterBank<T> {
    /// Top-`k` eigenvectors of `H_L`, eigenvalue-descending, unit norm, with
    /// the sign chosen so that the largest-magnitude coordinate is positive.
    ///
    /// The eigendecomposition runs in `f64` regardless of `T`. Eigenvalues
    /// that come out below zero through rounding are reported as zero.
    pub fn hankel(len: usize, k: usize) -> Result<Self> {
        check_shape(len, k)?;
        if len > EIGENSOLVE_CAP {
            return Err(Error::EigenCapExceeded { len, cap: EIGENSOLVE_CAP });
        }
        let eig = SymmetricEigen::try_new(hankel_matrix(len), f64::EPSILON, 1000 * len.max(8))
            .ok_or(Error::EigenNoConvergence(len))?;
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut filters = Vec::with_capacity(k);
        let mut eigenvalues = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let col = eig.eigenvectors.column(idx);
            let norm = col.norm();
            let pivot = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            filters.push(col.iter().map(|&x| T::from_f64_lossy(sign * x / norm)).collect());
            eigenvalues.push(eig.eigenvalues[idx].max(0.0));
        }
        Ok(Self { len, filters, eigenvalues: Some(eigenvalues) })
    }

    /// `k` filters with i.i.d. uniform `[-1, 1]` taps, each scaled to unit norm.
    pub fn random<R: Rng + ?Sized>(len: usize, k: usize, rng: &mut R) -> Result<Self> {
        check_shape(len, k)?;
        let filters = (0..k)
            .map(|_| {
                let raw: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                raw.iter().map(|x| T::from_f64_lossy(x / norm)).collect()
            })
            .collect();
        Ok(Self { len, filters, eigenvalues: None })
    }

    /// Wraps explicit filters, all of length `len`.
    pub fn from_filters(len: usize, filters: Vec<Vec<T>>) -> Result<Self> {
        check_shape(len, filters.len())?;
        if let Some(bad) = filters.iter().position(|f| f.len() != len) {
            return Err(Error::Dimension(format!(
                "filter {bad} has length {} but the bank has length {len}",
                filters[bad].len()
            )));
        }
        if filters.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Config("filter bank contains non-finite taps".into()));
        }
        Ok(Self { len, filters, eigenvalues: None })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn k(&self) -> usize {
        self.filters.len()
    }

    pub fn filter(&self, i: usize) -> &[T] {
        &self.filters[i]
    }

    pub fn filters(&self) -> &[Vec<T>] {
        &self.filters
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    /// Filter `i` as a [`Filter`] with context length `L`.
    pub fn as_filter(&self, i: usize) -> Filter<T> {
        Filter::from_taps(self.filters[i].clone()).expect("bank taps are finite")
    }

    /// `max_{i,j} |<phi_i, phi_j> - delta_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.filters.iter().enumerate() {
            for (j, b) in self.filters.iter().enumerate().skip(i) {
                let d: f64 = a.iter().zip(b).map(|(x, y)| x.to_f64_lossy() * y.to_f64_lossy()).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - want).abs());
            }
        }
        worst
    }

    /// CSV: a header line `L,k`, then `L` rows of `k` values (row `r` holds
    /// coordinate `r` of every filter), LF line endings, shortest
    /// round-trip decimal formatting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{},{}", self.len, self.k())?;
        let mut line = String::new();
        for r in 0..self.len {
            line.clear();
            for (i, f) in self.filters.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:?}", f[r]));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
        let header = header.map_err(|e| parse_err(1, e.to_string()))?;
        let (len, k) = header
            .trim()
            .split_once(',')
            .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
            .ok_or_else(|| parse_err(1, format!("expected `L,k` header, got `{header}`")))?;
        check_shape(len, k).map_err(|e| parse_err(1, e.to_string()))?;

        let mut filters = vec![Vec::with_capacity(len); k];
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            if filters[0].len() == len {
                return Err(parse_err(lineno, format!("more than {len} data rows")));
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != k {
                return Err(parse_err(lineno, format!("expected {k} values, found {}", fields.len())));
            }
            for (f, field) in filters.iter_mut().zip(fields) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("invalid number `{field}`")))?;
                if !v.is_finite() {
                    return Err(parse_err(lineno, format!("non-finite value `{field}`")));
                }
                f.push(T::from_f64_lossy(v));
            }
        }
        if filters[0].len() != len {
            return Err(parse_err(len + 1, format!("expected {len} data rows, found {}", filters[0].len())));
        }
        Self::from_filters(len, filters)
    }
}

fn check_shape(len: usize, k: usize) -> Result<()> {
    if k == 0 || len == 0 || k > len {
        return Err(Error::Config(format!("filter bank needs 1 <= k <= L, got L = {len}, k = {k}")));
    }
    Ok(())
}
