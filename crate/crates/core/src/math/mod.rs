//! Minimal dense linear algebra used by the encoder and heads.

mod matrix;
mod real;

pub use matrix::{softmax_vec, Mat};
pub use real::Real;
