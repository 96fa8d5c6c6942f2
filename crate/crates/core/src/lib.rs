//! Hypoelliptic random walks on compact models.
//!
//! [`lie`] is an exact kernel for free nilpotent Lie groups, generic over the
//! scalar type. [`models`], [`operator`], [`spectra`] and [`sampler`] work in
//! `f64` on the built-in torus models.

// `!(x > 0.0)` guards are deliberate: they reject NaN together with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fourier;
pub mod lie;
pub mod models;
pub mod operator;
pub mod sampler;
pub mod scalar;
pub mod spectra;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use lie::{build_free_nilpotent, GroupPoint, LieStructure};
pub use models::{Model, Point2};
pub use scalar::Scalar;

/// Group point in floating-point exponential coordinates.
pub type Point = GroupPoint<f64>;
/// Single-precision group point.
pub type Point32 = GroupPoint<f32>;
/// Group point with exact rational coordinates.
pub type ExactPoint = GroupPoint<num_rational::BigRational>;
