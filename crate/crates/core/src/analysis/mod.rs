//! Functional analysis of an amplitude assignment.
//!
//! Three questions are asked of a theory, in order:
//!
//! 1. is the joint amplitude φ(a ∨ a') a function of φ(a) and φ(a') at all
//!    ([`check_representation`]),
//! 2. if so, what does that function S look like ([`fit_combinator`]),
//! 3. does S satisfy S(S(x, y), z) = S(x, S(y, z)) ([`check_associativity`]).
//!
//! A negative answer to (1) is established by a witness: two states whose
//! single-slit amplitudes agree but whose joint amplitudes do not. A positive
//! answer is only ever a sampling verdict.

mod associativity;
mod combinator;
mod representation;

pub use associativity::{
    check_associativity, evaluate_bracketing, grid_triples, AssociativityReport, ClosedForm, Combinator,
};
pub use combinator::{fit_combinator, identify_closed_form, CombinatorEntry, CombinatorTable, FitOutcome};
pub use representation::{
    check_representation, phase_probes, RepresentationStatus, RepresentationVerdict,
};

use num_complex::Complex64;
use thiserror::Error;

use crate::setup::{Configuration, SlitId};
use crate::theory::{phi, Theory, TheoryError, WaveState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
    #[error("sample count must be at least 1")]
    BadSampleCount,
    #[error("joint amplitude is not a function of the single-slit amplitudes: {0}")]
    NonFunctional(Box<Witness>),
    #[error("combinator table cannot evaluate S({x}, {y})")]
    EvaluationGap { x: Complex64, y: Complex64 },
    #[error("associativity grid is empty")]
    EmptyGrid,
    #[error("the two slits of a pair must differ")]
    DegeneratePair,
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// The two slits whose join is being analysed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlitPair {
    pub first: SlitId,
    pub second: SlitId,
}

impl SlitPair {
    pub fn new(first: SlitId, second: SlitId) -> Result<Self, AnalysisError> {
        if first == second {
            return Err(AnalysisError::DegeneratePair);
        }
        Ok(SlitPair { first, second })
    }

    pub fn ids(&self) -> [SlitId; 2] {
        [self.first.clone(), self.second.clone()]
    }

    pub fn first_only(&self) -> Configuration {
        Configuration::single(self.first.clone())
    }

    pub fn second_only(&self) -> Configuration {
        Configuration::single(self.second.clone())
    }

    pub fn both(&self) -> Configuration {
        self.first_only().union(&self.second_only())
    }

    pub fn state(&self, first: Complex64, second: Complex64) -> WaveState {
        WaveState::from_pairs(&self.ids(), &[first, second])
    }
}

/// φ(a), φ(a') and φ(a ∨ a') for one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairAmplitudes {
    pub first: Complex64,
    pub second: Complex64,
    pub joint: Complex64,
}

impl PairAmplitudes {
    pub fn evaluate(theory: &Theory, state: &WaveState, pair: &SlitPair) -> Result<Self, TheoryError> {
        Ok(PairAmplitudes {
            first: phi(theory, state, &pair.first_only())?,
            second: phi(theory, state, &pair.second_only())?,
            joint: phi(theory, state, &pair.both())?,
        })
    }
}

/// Where a witness came from.
#[derive(Debug, Clone, PartialEq)]
pub enum WitnessOrigin {
    /// `(α, α)` against `(α, ζα)` for a unit phase ζ.
    PhaseProbe { phase: Complex64 },
    RandomSearch { first_index: usize, second_index: usize },
}

/// Two states with matching single-slit amplitudes and different joint amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub first: WaveState,
    pub second: WaveState,
    pub first_phi: PairAmplitudes,
    pub second_phi: PairAmplitudes,
    pub origin: WitnessOrigin,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} and {} give joint amplitudes {} and {}",
            self.first,
            self.second,
            crate::theory::fmt_complex(self.first_phi.joint),
            crate::theory::fmt_complex(self.second_phi.joint)
        )
    }
}

/// Single-slit amplitudes agree within `tol` and joint amplitudes differ by more than `10·tol`.
pub fn is_witness(a: &PairAmplitudes, b: &PairAmplitudes, tol: f64) -> bool {
    (a.first - b.first).norm() <= tol
        && (a.second - b.second).norm() <= tol
        && (a.joint - b.joint).norm() > 10.0 * tol
}

pub(crate) fn check_tolerance(tol: f64) -> Result<(), AnalysisError> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(AnalysisError::BadTolerance(tol))
    }
}

/// Componentwise lattice cell of a key pair.
pub(crate) fn cell(x: Complex64, y: Complex64, tol: f64) -> [i64; 4] {
    [
        (x.re / tol).floor() as i64,
        (x.im / tol).floor() as i64,
        (y.re / tol).floor() as i64,
        (y.im / tol).floor() as i64,
    ]
}

/// The cell and its 80 neighbours, in a fixed order.
pub(crate) fn neighbourhood(c: [i64; 4]) -> impl Iterator<Item = [i64; 4]> {
    (0..81).map(move |k| {
        let mut out = c;
        let mut k = k;
        for slot in out.iter_mut() {
            *slot = slot.saturating_add(k % 3 - 1);
            k /= 3;
        }
        out
    })
}
