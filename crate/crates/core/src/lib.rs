//! Symbolic and numerical verification of Lp-Liouville hypotheses for
//! second-order operators `L = div(A∇) + <b, ∇>` that are left-invariant
//! on a Lie group structure of `R^n`.
//!
//! The crate is organized as one module per ingredient:
//!
//! - [`expr`]: expression kernel (parse, evaluate, differentiate, simplify)
//! - [`fields`]: vector fields, Lie brackets, Hörmander rank, operator application
//! - [`group`]: group laws, left-invariance and unimodularity
//! - [`dilation`]: dilations, homogeneous dimension, the critical exponent
//! - [`kolmogorov`]: constant-coefficient Kolmogorov operators
//! - [`lens`]: finite-difference representation measures on the lens domain
//! - [`liouville`]: fundamental solutions, convolutions, tail exponents, gadgets
//! - [`config`] and [`cli`]: fixtures, config parsing and the command pipeline

pub mod cli;
pub mod config;
pub mod dilation;
pub mod error;
pub mod expr;
pub mod fields;
pub mod group;
pub mod kolmogorov;
pub mod lens;
pub mod liouville;
pub mod quad;
pub mod report;
pub mod sparse;

pub use error::{Error, Result};
pub use expr::{Expr, Rational};
