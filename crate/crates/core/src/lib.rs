//! Exact computations for linear cocycles over subshifts of finite type.
//!
//! The base system is a two-sided subshift of finite type restricted to
//! eventually periodic points, and cocycles are locally constant, so
//! holonomies, periodic exponents and regularity decisions are finite
//! computations rather than limits.

// Negated comparisons are used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod error;
pub mod fixtures;
pub mod holonomy;
pub mod linalg;
pub mod measure;
pub mod regularity;
pub mod shadow;
pub mod sft;
pub mod transfer;
pub mod zimmer;

pub use cocycle::LocallyConstantCocycle;
pub use error::{Error, Result};
pub use measure::MarkovMeasure;
pub use sft::{AgreementRadius, MetricParams, PeriodicPoint, Symbol, SymbolicPoint, TransitionMatrix, Word};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real vector.
pub type Vector = nalgebra::DVector<f64>;
