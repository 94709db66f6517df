use thiserror::Error;

use crate::scalar::SurdError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("word of length {len} is too short (need at least {needed} symbols)")]
    WordTooShort { len: usize, needed: usize },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("preimage tree of {nodes} nodes exceeds the node budget {budget}")]
    BudgetExceeded { nodes: u128, budget: u64 },

    #[error("QMF identity violated: deviation {deviation:e} at x = {at}")]
    QmfViolation { deviation: f64, at: String },

    #[error(
        "normalized Perron eigenvalue λ = {eigenvalue} is not 1 (ρ(K) = {weighted}, ρ(T) = {shift}); \
         rescale V ← V/{eigenvalue}"
    )]
    EigenvalueNotOne { eigenvalue: f64, weighted: f64, shift: f64 },

    #[error("Perron vector is not strictly positive ({0}); the transition matrix is not irreducible")]
    NotPositive(String),

    #[error("weight is negative: V({at}) = {value:e}")]
    NotNonnegative { at: String, value: f64 },

    #[error("integrand needs {needed} symbols but the measure holds cylinders of depth {available}")]
    DepthMismatch { needed: usize, available: usize },

    #[error("branch densities at {at} sum to {sum} (defect above 1e-9)")]
    NormalizationDefect { at: String, sum: f64 },

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("grid size {grid} is not divisible by the degree {degree}")]
    GridIncompatible { grid: usize, degree: usize },

    #[error("cannot drop the front coordinate of a depth-0 path")]
    EmptyPath,

    #[error("weight variant {variant} cannot be evaluated on {family} points")]
    WeightMismatch { variant: &'static str, family: &'static str },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Scalar(#[from] SurdError),
}
