use thiserror::Error;

use crate::jet::C64;
use crate::multi_index::MultiIndex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("jet truncation bounds differ")]
    TruncationMismatch,
    #[error("cannot raise a jet with constant term {constant} to the power {exponent}")]
    SingularPower { constant: C64, exponent: f64 },
    #[error("derivative of order {requested:?} exceeds jet truncation {available:?}")]
    InsufficientJetOrder {
        requested: MultiIndex,
        available: MultiIndex,
    },
    #[error("ambient dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("invalid defining function: {0}")]
    InvalidDefiningFunction(String),
    #[error("defining function is not strictly plurisubharmonic: Levi eigenvalue {eigenvalue:.3e} at {point:?}")]
    NotStrictlyPsh { point: Vec<C64>, eigenvalue: f64 },
    #[error("polarization positivity bound fails: sampled constant {constant:.3e}")]
    PolarizationPositivityFailure { constant: f64 },
    #[error("point {point:?} is not inside the domain (rho = {rho:.3e})")]
    OutsideDomain { point: Vec<C64>, rho: f64 },
    #[error("domain file: {0}")]
    File(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarietyError {
    #[error("invalid variety: {0}")]
    Invalid(String),
    #[error("unsupported hypersurface: {0}")]
    UnsupportedHypersurface(String),
    #[error("generator set expects ambient dimension {expected}, got {got}")]
    WrongAmbientShape { expected: usize, got: usize },
    #[error("representative cannot be reduced: {0}")]
    InconsistentRepresentative(String),
    #[error("variety file: {0}")]
    File(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("rejection efficiency {efficiency:.2e} is below 1%; bounding box too loose")]
    InefficientRegion { efficiency: f64 },
    #[error("weight exponent r = {r} makes the integral divergent (need r > -1)")]
    DivergentWeight { r: f64 },
    #[error("invalid quadrature request: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtensionError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Variety(#[from] VarietyError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("evaluation point within {distance:.3e} of the boundary")]
    NearBoundary { distance: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}
