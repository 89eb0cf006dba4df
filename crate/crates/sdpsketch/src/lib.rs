//! Dimensionality reduction for semidefinite programs and linear matrix
//! inequalities by conjugation with seeded random transforms.
//!
//! The pipeline: model a problem ([`model::SketchableSdp`] /
//! [`model::LmiProblem`]), draw a seeded transform ([`jlt`]), conjugate the
//! data down to a smaller dimension ([`sketch`]), solve the reduced problem
//! with the built-in interior-point solver ([`solver`]), and turn the result
//! into guarantees about the original problem ([`bounds`]) or an
//! infeasibility certificate ([`certify`]).

// Index loops are the working idiom in the dense numeric kernels.
#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod certify;
pub mod error;
pub mod jlt;
pub mod linalg;
pub mod model;
pub mod sketch;
pub mod solver;

pub use error::{Error, Result};
