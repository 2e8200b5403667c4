use thiserror::Error;

use crate::expr::{EvalError, ParamError, ParseError};

/// Errors raised by the numerical layers.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("modulation {which} vanishes at t = {t}")]
    ModulationZero { which: &'static str, t: f64 },
    #[error("square-root branch of f1/f2 cannot be continued through t = {t}")]
    BranchTracking { t: f64 },
    #[error("matrix is singular (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {error:e})")]
    Quadrature { a: f64, b: f64, error: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({steps}) reached at t = {t}")]
    MaxSteps { t: f64, steps: usize },
    #[error("state norm exceeded the overflow guard at t = {t}")]
    Overflow { t: f64 },
    #[error("invalid integrator input: {0}")]
    InvalidIntegration(String),
    #[error("generator is not periodic with period {period} (deviation {deviation:e})")]
    NotPeriodic { period: f64, deviation: f64 },
    #[error("gamma function pole at {0}")]
    Pole(String),
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("basis solutions are degenerate (|W| = {wronskian:e})")]
    DegenerateBasis { wronskian: f64 },
    #[error("{frame} frame is at an exceptional point at t = {t}")]
    ExceptionalPoint { frame: &'static str, t: f64 },
    #[error("analytic solution does not match the model: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
