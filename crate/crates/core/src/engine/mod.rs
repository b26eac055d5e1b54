//! Streaming engines for the online convolution `y_t = [u * phi]_t`.
//!
//! Each engine receives one input per step and must release the output for
//! that step before seeing the next input. All three produce the same
//! outputs up to floating-point rounding; they differ in cost.

mod continuous;
mod epoched;
mod meter;
mod naive;

use std::fmt;
use std::str::FromStr;

pub use continuous::{CacheUpdate, ContinuousEngine};
pub use epoched::EpochedEngine;
pub use meter::CostMeter;
pub use naive::NaiveEngine;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::Filter;

/// A stateful online convolution with a fixed filter and horizon.
pub trait OnlineConvEngine<T: Scalar>: Send {
    /// Consumes `u_t` and returns `[u * phi]_t`.
    ///
    /// # Panics
    /// When called more than `horizon()` times since construction or reset.
    fn push(&mut self, sample: T) -> T;

    /// Clears inputs, cache and meter.
    fn reset(&mut self);

    fn meter(&self) -> &CostMeter;

    fn horizon(&self) -> usize;

    /// Number of samples pushed since construction or the last reset.
    fn steps(&self) -> usize;

    fn name(&self) -> &'static str;
}

impl<T: Scalar> fmt::Debug for dyn OnlineConvEngine<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct(self.name())
            .field("horizon", &self.horizon())
            .field("steps", &self.steps())
            .finish()
    }
}

/// Exponent of the largest power of two dividing `t`, capped at `b`.
///
/// # Panics
/// If `t == 0`.
pub fn k_of_t(t: usize, b: u32) -> u32 {
    assert!(t >= 1, "k(t) is defined for t >= 1");
    t.trailing_zeros().min(b)
}

/// Epoch length `round(sqrt(L * log2 L))` minimizing the epoched runtime.
///
/// # Panics
/// If `len < 2`.
pub fn optimal_epoch_length(len: usize) -> usize {
    assert!(len >= 2, "optimal epoch length needs L >= 2");
    let l = len as f64;
    ((l * l.log2()).sqrt().round() as usize).clamp(1, len)
}

/// Which engine to build, parsed from `naive`, `epoched`, `epoched:<K>` or `continuous`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineKind {
    Naive,
    /// `epoch: None` picks [`optimal_epoch_length`] for the horizon.
    Epoched { epoch: Option<usize> },
    Continuous,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] =
        [EngineKind::Naive, EngineKind::Epoched { epoch: None }, EngineKind::Continuous];

    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Naive => "naive",
            EngineKind::Epoched { .. } => "epoched",
            EngineKind::Continuous => "continuous",
        }
    }

    /// Epoch length this kind would use at `horizon`, if epoched.
    pub fn epoch_for(&self, horizon: usize) -> Option<usize> {
        match *self {
            EngineKind::Epoched { epoch: Some(k) } => Some(k),
            EngineKind::Epoched { epoch: None } => {
                Some(if horizon >= 2 { optimal_epoch_length(horizon) } else { 1 })
            }
            _ => None,
        }
    }

    pub fn build<T: Scalar>(
        &self,
        filter: &Filter<T>,
        horizon: usize,
    ) -> Result<Box<dyn OnlineConvEngine<T>>> {
        if horizon == 0 {
            return Err(Error::Config("engine horizon must be positive".into()));
        }
        Ok(match self {
            EngineKind::Naive => Box::new(NaiveEngine::new(filter, horizon)),
            EngineKind::Epoched { .. } => {
                let epoch = self.epoch_for(horizon).expect("epoched kind");
                Box::new(EpochedEngine::new(filter, horizon, epoch)?)
            }
            EngineKind::Continuous => Box::new(ContinuousEngine::new(filter, horizon)),
        })
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EngineKind::Epoched { epoch: Some(k) } => write!(f, "epoched:{k}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(EngineKind::Naive),
            "epoched" => Ok(EngineKind::Epoched { epoch: None }),
            "continuous" => Ok(EngineKind::Continuous),
            other => match other.strip_prefix("epoched:").map(str::parse::<usize>) {
                Some(Ok(k)) if k >= 1 => Ok(EngineKind::Epoched { epoch: Some(k) }),
                _ => Err(Error::UnknownEngine(s.to_string())),
            },
        }
    }
}
