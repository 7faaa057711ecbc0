//! Additive regraduation: a reparameterization ξ of amplitudes under which
//! combining setups becomes plain addition, ξ(φ(a ∨ a')) = ξ(φ(a)) + ξ(φ(a')).
//!
//! Two constructions are offered. [`solve_constraints`] treats ξ at sampled
//! amplitude values as unknowns and either finds a non-trivial solution or
//! certifies that ξ = 0 is the only one. [`regraduate_combinator`] builds ξ on
//! a real interval for a known associative, increasing combinator.
//!
//! ξ is only ever determined up to a constant factor; results are normalized
//! so that ξ(anchor) = 1.

mod combinator;
mod constraints;
mod xi;

pub use combinator::{regraduate_combinator, CombinatorOptions, ASSOCIATIVITY_PRECONDITION};
pub use constraints::{
    build_constraints, solve_constraints, ConstraintSet, Equation, SolveOptions, DEFAULT_MERGE_TOL,
};
pub use xi::{verify_additivity, AdditivityStats, IntervalTable, PointTable, Scaled, XiFunction, XiRule};

use num_complex::Complex64;
use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::theory::TheoryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegradError {
    #[error("constraint system leaves {null_dim} free directions; ξ is not determined up to scale")]
    SingularSystem { null_dim: usize },
    #[error("combinator is not associative (residual {max_residual:e})")]
    NotAssociative {
        max_residual: f64,
        worst_triple: [Complex64; 3],
    },
    #[error("monotonicity assumption violated: {0}")]
    NonMonotone(String),
    #[error("amplitude {0} lies outside the ξ table")]
    DomainEscape(Complex64),
    #[error("anchor {0} is not a point of the system")]
    UnknownAnchor(Complex64),
    #[error("best anchored fit leaves residual {residual:e} above tolerance {tol:e}")]
    Infeasible { residual: f64, tol: f64 },
    #[error(
        "neither a solution nor a triviality certificate: residual {constrained_residual:e}, \
         nearest exact solution has sup-norm {sup_norm:e}"
    )]
    Inconclusive { constrained_residual: f64, sup_norm: f64 },
    #[error("bad domain: {0}")]
    BadDomain(String),
    #[error("invalid ξ table: {0}")]
    InvalidTable(String),
    #[error("no states given")]
    NoStates,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegradStatus {
    Found,
    Trivial,
}

#[derive(Debug, Clone, PartialEq)]
pub enum XiTable {
    Interval(IntervalTable),
    Points(PointTable),
}

impl XiFunction for XiTable {
    fn eval(&self, t: Complex64) -> Result<Complex64, RegradError> {
        match self {
            XiTable::Interval(t2) => t2.eval(t),
            XiTable::Points(p) => p.eval(t),
        }
    }
}

/// Both halves of the claim that ξ = 0 is forced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrivialityCertificate {
    /// Residual of the best fit with ξ(anchor) = 1.
    pub constrained_residual: f64,
    /// Sup-norm of the nearest exact solution to that fit.
    pub unconstrained_sup_norm: f64,
    /// Dimension of the exact solution space.
    pub null_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegraduationResult {
    pub status: RegradStatus,
    pub xi: XiTable,
    /// Largest equation residual of the reported table.
    pub additivity_residual: f64,
    /// Point where ξ = 1.
    pub anchor: Complex64,
    pub certificate: Option<TrivialityCertificate>,
    pub equations: usize,
    pub unknowns: usize,
}
