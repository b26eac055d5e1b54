//! Sequences and filters.
//!
//! Storage is 0-based. Operation contracts in this crate speak of
//! *positions* `1..=len`, with position `s` stored at index `s - 1`. Reads
//! at positions `<= 0` or `> len` yield zero.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A finite real-valued sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Signal<T = f64> {
    samples: Vec<T>,
}

impl<T: Scalar> Signal<T> {
    /// Rejects any NaN or infinite sample.
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { samples })
    }

    pub fn zeros(len: usize) -> Self {
        Self { samples: vec![T::zero(); len] }
    }

    /// Wraps samples that were produced internally from finite data.
    pub(crate) fn from_vec_unchecked(samples: Vec<T>) -> Self {
        Self { samples }
    }

    /// Zero-extended read at 1-based `position`.
    #[inline]
    pub fn at(&self, position: isize) -> T {
        if position < 1 || position as usize > self.samples.len() {
            T::zero()
        } else {
            self.samples[position as usize - 1]
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.samples
    }

    pub fn into_vec(self) -> Vec<T> {
        self.samples
    }
}

impl<T> Deref for Signal<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.samples
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for Signal<T> {
    type Error = Error;

    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

/// A convolution kernel with a declared context length `L`.
///
/// Only the stored taps are kept; any tap past them reads as zero, so a
/// filter can always be consulted up to an arbitrary position.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter<T = f64> {
    taps: Signal<T>,
    context_length: usize,
}

impl<T: Scalar> Filter<T> {
    pub fn new(taps: Signal<T>, context_length: usize) -> Result<Self> {
        if context_length == 0 {
            return Err(Error::EmptyContext);
        }
        if taps.len() > context_length {
            return Err(Error::FilterTooLong { taps: taps.len(), context_length });
        }
        Ok(Self { taps, context_length })
    }

    /// Filter whose context length is exactly its number of taps.
    pub fn from_taps(taps: Vec<T>) -> Result<Self> {
        let taps = Signal::new(taps)?;
        let len = taps.len().max(1);
        Self::new(taps, len)
    }

    pub fn context_length(&self) -> usize {
        self.context_length
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    /// Tap at 1-based position `j`, zero outside the stored range.
    #[inline]
    pub fn tap(&self, j: isize) -> T {
        self.taps.at(j)
    }

    /// Stored taps at positions `1..=n`, shortened when fewer are stored.
    pub fn head(&self, n: usize) -> &[T] {
        &self.taps[..n.min(self.taps.len())]
    }

    /// Copy of this filter keeping only positions `1..=n`, with context length `n`.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(Signal::from_vec_unchecked(self.head(n).to_vec()), n)
    }
}
