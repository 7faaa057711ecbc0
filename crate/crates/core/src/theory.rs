//! Amplitude-assignment theories.
//!
//! A theory turns a wavefunction over slits and a configuration of open slits
//! into a complex number φ. Closing a slit zeroes its coefficient; the detector
//! functional γ is then applied to what is left.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::setup::{Configuration, SetupError, SlitId};

/// Largest slit count for which every sub-configuration is materialized.
pub const MAX_ASSIGNMENT_SLITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("slit `{0}` is not part of the wave state")]
    UnknownSlit(String),
    #[error("user table has no entry for {0}")]
    TableMiss(String),
    #[error("full assignment over {0} slits exceeds the cap of {MAX_ASSIGNMENT_SLITS}")]
    TooManySlits(usize),
    #[error("bad sampling distribution: {0}")]
    BadDistribution(String),
    #[error("invalid theory: {0}")]
    InvalidTheory(String),
    #[error(transparent)]
    Setup(#[from] SetupError),
}

/// Detection point and time. Carried as labels only; nothing is propagated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detector {
    pub x_f: String,
    pub t_f: String,
}

impl Default for Detector {
    fn default() -> Self {
        Detector {
            x_f: "x_f".into(),
            t_f: "t_f".into(),
        }
    }
}

/// Coefficients of the wavefunction on each slit at the time it reaches the slits.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub coeffs: BTreeMap<SlitId, Complex64>,
    pub detector: Detector,
}

impl WaveState {
    pub fn new(coeffs: impl IntoIterator<Item = (SlitId, Complex64)>) -> Self {
        WaveState {
            coeffs: coeffs.into_iter().collect(),
            detector: Detector::default(),
        }
    }

    /// Pairs the slits with the given coefficients, in order.
    pub fn from_pairs(slits: &[SlitId], values: &[Complex64]) -> Self {
        WaveState::new(slits.iter().cloned().zip(values.iter().copied()))
    }

    pub fn coeff(&self, id: &SlitId) -> Option<Complex64> {
        self.coeffs.get(id).copied()
    }

    pub fn slit_ids(&self) -> impl Iterator<Item = &SlitId> {
        self.coeffs.keys()
    }

    pub fn full_configuration(&self) -> Result<Configuration, TheoryError> {
        Ok(Configuration::new(self.coeffs.keys().cloned())?)
    }
}

impl fmt::Display for WaveState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (id, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{id}={}", fmt_complex(*c))?;
        }
        write!(f, ")")
    }
}

/// Compact complex formatting: real numbers print without an imaginary part.
pub fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

type CoeffKey = Vec<(SlitId, [u64; 2])>;

fn bits(x: f64) -> u64 {
    // +0.0 and -0.0 are the same key
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

fn coeff_key<'a>(coeffs: impl Iterator<Item = (&'a SlitId, &'a Complex64)>) -> CoeffKey {
    coeffs
        .filter(|(_, c)| **c != Complex64::new(0.0, 0.0))
        .map(|(id, c)| (id.clone(), [bits(c.re), bits(c.im)]))
        .collect()
}

/// One explicit sample of a tabulated theory: the projected coefficients, the
/// open slits, and the amplitude assigned to them.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub coeffs: BTreeMap<SlitId, Complex64>,
    pub open: Configuration,
    pub value: Complex64,
}

/// A theory given by explicit samples. Lookups match keys exactly.
#[derive(Debug, Clone)]
pub struct UserTable {
    entries: Vec<TableEntry>,
    index: HashMap<(CoeffKey, Configuration), Complex64>,
}

impl PartialEq for UserTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl UserTable {
    pub fn new(entries: Vec<TableEntry>) -> Result<Self, TheoryError> {
        let mut index = HashMap::with_capacity(entries.len());
        for entry in &entries {
            if let Some((id, _)) = entry
                .coeffs
                .iter()
                .find(|(id, c)| !entry.open.contains(id) && **c != Complex64::new(0.0, 0.0))
            {
                return Err(TheoryError::InvalidTheory(format!(
                    "table entry for {} has a nonzero coefficient on closed slit `{id}`",
                    entry.open
                )));
            }
            let key = (coeff_key(entry.coeffs.iter()), entry.open.clone());
            if let Some(previous) = index.insert(key, entry.value) {
                if previous != entry.value {
                    return Err(TheoryError::InvalidTheory(format!(
                        "conflicting table entries for {}",
                        entry.open
                    )));
                }
            }
        }
        Ok(UserTable { entries, index })
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn lookup(&self, projected: &WaveState, open: &Configuration) -> Result<Complex64, TheoryError> {
        let key = (coeff_key(projected.coeffs.iter()), open.clone());
        self.index
            .get(&key)
            .copied()
            .ok_or_else(|| TheoryError::TableMiss(format!("{projected} with {open} open")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Theory {
    /// γ is the sum of the coefficients.
    Linear,
    /// γ is the square of the sum.
    Quadratic,
    /// γ is the p-th power of the sum.
    Power(u32),
    UserTable(UserTable),
}

impl Theory {
    pub fn power(p: u32) -> Result<Self, TheoryError> {
        if p == 0 {
            return Err(TheoryError::InvalidTheory("power exponent must be positive".into()));
        }
        Ok(Theory::Power(p))
    }

    pub fn name(&self) -> String {
        match self {
            Theory::Linear => "linear".into(),
            Theory::Quadratic => "quadratic".into(),
            Theory::Power(p) => format!("power(p={p})"),
            Theory::UserTable(t) => format!("user_table({} entries)", t.entries().len()),
        }
    }

    fn exponent(&self) -> Option<u32> {
        match self {
            Theory::Linear => Some(1),
            Theory::Quadratic => Some(2),
            Theory::Power(p) => Some(*p),
            Theory::UserTable(_) => None,
        }
    }

    fn amplitude(&self, projected: &WaveState, open: &Configuration) -> Result<Complex64, TheoryError> {
        match (self, self.exponent()) {
            (Theory::UserTable(table), _) => table.lookup(projected, open),
            (_, Some(p)) => {
                let sum: Complex64 = projected.coeffs.values().sum();
                Ok(int_pow(sum, p))
            }
            (_, None) => unreachable!("only tables lack an exponent"),
        }
    }
}

/// Integer power by repeated multiplication.
fn int_pow(z: Complex64, p: u32) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..p {
        acc *= z;
    }
    acc
}

/// Zeroes the coefficients of every slit not in `open`.
pub fn project_closed(state: &WaveState, open: &Configuration) -> Result<WaveState, TheoryError> {
    if let Some(missing) = open.iter().find(|id| !state.coeffs.contains_key(*id)) {
        return Err(TheoryError::UnknownSlit(missing.to_string()));
    }
    Ok(WaveState {
        coeffs: state
            .coeffs
            .iter()
            .map(|(id, c)| {
                let c = if open.contains(id) { *c } else { Complex64::new(0.0, 0.0) };
                (id.clone(), c)
            })
            .collect(),
        detector: state.detector.clone(),
    })
}

/// γ for a state that reaches the detector with all of its slits open.
pub fn detector_amplitude(theory: &Theory, state: &WaveState) -> Result<Complex64, TheoryError> {
    theory.amplitude(state, &state.full_configuration()?)
}

/// The amplitude φ assigned to `config`.
pub fn phi(theory: &Theory, state: &WaveState, config: &Configuration) -> Result<Complex64, TheoryError> {
    let projected = project_closed(state, config)?;
    theory.amplitude(&projected, config)
}

/// φ on every non-empty sub-configuration of the state's slits.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeAssignment {
    pub values: BTreeMap<Configuration, Complex64>,
}

impl AmplitudeAssignment {
    pub fn get(&self, config: &Configuration) -> Option<Complex64> {
        self.values.get(config).copied()
    }
}

pub fn full_assignment(theory: &Theory, state: &WaveState) -> Result<AmplitudeAssignment, TheoryError> {
    let ids: Vec<&SlitId> = state.slit_ids().collect();
    if ids.len() > MAX_ASSIGNMENT_SLITS {
        return Err(TheoryError::TooManySlits(ids.len()));
    }
    let mut values = BTreeMap::new();
    for mask in 1u32..(1 << ids.len()) {
        let config = Configuration::new(
            ids.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, id)| (*id).clone()),
        )?;
        let value = phi(theory, state, &config)?;
        values.insert(config, value);
    }
    Ok(AmplitudeAssignment { values })
}
