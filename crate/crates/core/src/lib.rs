//! Exact online convolution for auto-regressive generation from
//! convolutional sequence models.
//!
//! The engines in [`engine`] compute `y_t = [u * phi]_t` one input at a
//! time. [`NaiveEngine`] does a direct inner product per step,
//! [`EpochedEngine`] amortizes the past through a periodically rebuilt
//! FutureFill cache, and [`ContinuousEngine`] schedules FutureFills of
//! doubling size for `O(L log^2 L)` total work. [`generate`] drives them for
//! generation from scratch and from a prompt; [`spectral`] builds Hankel
//! spectral filters and a small STU predictor on top of them.
//!
//! Everything is generic over [`Scalar`] (`f32`, `f64`); generic types
//! default to `f64`, and `*32` aliases below name the single-precision forms.
//!
//! ```
//! use futurefill::{EngineKind, Filter};
//!
//! let phi = Filter::from_taps(vec![1.0, 0.5, 0.25, 0.125]).unwrap();
//! let mut engine = EngineKind::Continuous.build(&phi, 4).unwrap();
//! let y: Vec<f64> = [1.0, 0.0, 0.0, 2.0].iter().map(|&u| engine.push(u)).collect();
//! for (got, want) in y.iter().zip([1.0, 0.5, 0.25, 2.125]) {
//!     assert!((got - want).abs() < 1e-12);
//! }
//! assert_eq!(engine.meter().ff_cost(), 4);
//! ```

pub mod conv;
pub mod engine;
pub mod error;
pub mod generate;
pub mod scalar;
pub mod signal;
pub mod spectral;

pub use conv::{agreement_error, conv_causal_reference, conv_full, futurefill, split_check, FftConvolver};
pub use engine::{
    k_of_t, optimal_epoch_length, ContinuousEngine, CostMeter, EngineKind, EpochedEngine,
    NaiveEngine, OnlineConvEngine,
};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use signal::{Filter, Signal};

pub type Signal32 = Signal<f32>;
pub type Filter32 = Filter<f32>;
pub type NaiveEngine64 = NaiveEngine<f64>;
pub type NaiveEngine32 = NaiveEngine<f32>;
pub type EpochedEngine64 = EpochedEngine<f64>;
pub type EpochedEngine32 = EpochedEngine<f32>;
pub type ContinuousEngine64 = ContinuousEngine<f64>;
pub type ContinuousEngine32 = ContinuousEngine<f32>;
pub type StuModel64 = spectral::StuModel<f64>;
pub type StuModel32 = spectral::StuModel<f32>;
