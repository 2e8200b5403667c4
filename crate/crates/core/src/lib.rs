//! Time-dependent non-Hermitian two-level systems.
//!
//! The crate builds Hamiltonians `H(t)` from modulation functions written in a
//! small expression language ([`expr`]), maps them to a traceless effective
//! frame with balanced gain and loss ([`model`]), integrates both frames
//! ([`propagate`]), evaluates closed-form solutions for three families of
//! effective potentials ([`analytic`], [`specfun`]) and classifies PT phases
//! from Floquet monodromy ([`floquet`]). [`circuit`] packages the RLC
//! realisation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod circuit;
pub mod error;
pub mod expr;
pub mod floquet;
pub mod mat2;
pub mod model;
pub mod propagate;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use expr::{parse, Expr, ParamMap};
pub use mat2::{Eig2, Mat2, Vec2};
pub use model::ModelSpec;
pub use num_complex::Complex64 as C64;
