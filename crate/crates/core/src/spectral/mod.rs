//! Spectral filters from the Hankel matrix `H_L` and a small STU predictor
//! driven by the online engines.

mod bank;
mod hankel;
mod matrix;
mod stu;

pub use bank::{SpectralFilterBank, EIGENSOLVE_CAP};
pub use hankel::{hankel_entry, hankel_matrix};
pub use matrix::Matrix;
pub use stu::{StuModel, StuParams, StuSession};
