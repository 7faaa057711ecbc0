use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{
    cell, check_tolerance, neighbourhood, phase_probes, AnalysisError, ClosedForm, Combinator,
    PairAmplitudes, SlitPair, Witness, WitnessOrigin,
};
use crate::sampling::{lane, sample_batch, Sampler};
use crate::theory::{Theory, TheoryError, WaveState};

/// One sample `S(x, y) = z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinatorEntry {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

/// A sampled combinator. Keys closer than `key_tol` (in each argument) are
/// treated as the same key and never map to values more than `10·key_tol` apart.
#[derive(Debug, Clone)]
pub struct CombinatorTable {
    entries: Vec<CombinatorEntry>,
    key_tol: f64,
    index: HashMap<[i64; 4], Vec<usize>>,
}

impl PartialEq for CombinatorTable {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries && self.key_tol == other.key_tol
    }
}

impl CombinatorTable {
    pub fn new(key_tol: f64) -> Result<Self, AnalysisError> {
        check_tolerance(key_tol)?;
        Ok(CombinatorTable {
            entries: Vec::new(),
            key_tol,
            index: HashMap::new(),
        })
    }

    pub fn entries(&self) -> &[CombinatorEntry] {
        &self.entries
    }

    pub fn key_tol(&self) -> f64 {
        self.key_tol
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn near(&self, x: Complex64, y: Complex64) -> impl Iterator<Item = usize> + '_ {
        neighbourhood(cell(x, y, self.key_tol))
            .filter_map(|c| self.index.get(&c))
            .flatten()
            .copied()
            .filter(move |&i| {
                let e = &self.entries[i];
                (e.x - x).norm() <= self.key_tol && (e.y - y).norm() <= self.key_tol
            })
    }

    /// The entry with the nearest key, if one lies within `key_tol`.
    pub fn nearest(&self, x: Complex64, y: Complex64) -> Option<&CombinatorEntry> {
        self.near(x, y)
            .min_by(|&i, &j| {
                let d = |k: usize| (self.entries[k].x - x).norm() + (self.entries[k].y - y).norm();
                d(i).total_cmp(&d(j)).then(i.cmp(&j))
            })
            .map(|i| &self.entries[i])
    }

    /// Adds a sample. Returns the index of a conflicting entry if the sample
    /// contradicts functionality, otherwise `Ok(true)` if it was stored and
    /// `Ok(false)` if an equivalent key was already present.
    pub fn insert(&mut self, entry: CombinatorEntry) -> Result<bool, usize> {
        let mut duplicate = false;
        for i in self.near(entry.x, entry.y) {
            if (self.entries[i].z - entry.z).norm() > 10.0 * self.key_tol {
                return Err(i);
            }
            duplicate = true;
        }
        if duplicate {
            return Ok(false);
        }
        let idx = self.entries.len();
        self.index
            .entry(cell(entry.x, entry.y, self.key_tol))
            .or_default()
            .push(idx);
        self.entries.push(entry);
        Ok(true)
    }
}

impl Combinator for CombinatorTable {
    fn combine(&self, x: Complex64, y: Complex64) -> Option<Complex64> {
        self.nearest(x, y).map(|e| e.z)
    }

    fn describe(&self) -> String {
        format!("sampled table ({} entries)", self.entries.len())
    }
}

/// What came out of fitting: the table, and how many samples were degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub table: CombinatorTable,
    pub samples_used: usize,
    /// States with φ(a) = φ(a') = 0, left out of the table.
    pub degenerate_skipped: usize,
}

/// Tabulates `(φ(a), φ(a')) → φ(a ∨ a')`, failing as soon as two samples with
/// the same key disagree on the joint value.
pub fn fit_combinator(
    theory: &Theory,
    pair: &SlitPair,
    sampler: &Sampler,
    seed: u64,
    n: usize,
    key_tol: f64,
) -> Result<FitOutcome, AnalysisError> {
    let mut table = CombinatorTable::new(key_tol)?;
    if n == 0 {
        return Err(AnalysisError::BadSampleCount);
    }
    sampler.validate()?;

    let mut states: Vec<WaveState> = Vec::new();
    let mut origins: Vec<Complex64> = Vec::new();
    let mut amps: Vec<PairAmplitudes> = Vec::new();
    for (s1, s2, phase) in phase_probes(pair, sampler) {
        for s in [s1, s2] {
            match PairAmplitudes::evaluate(theory, &s, pair) {
                Ok(a) => {
                    states.push(s);
                    amps.push(a);
                    origins.push(phase);
                }
                Err(TheoryError::TableMiss(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    let sampled = sample_batch(seed, lane::COMBINATOR, &pair.ids(), sampler, n)?;
    let sampled_amps = sampled
        .par_iter()
        .map(|s| PairAmplitudes::evaluate(theory, s, pair))
        .collect::<Result<Vec<_>, _>>()?;
    states.extend(sampled);
    amps.extend(sampled_amps);

    // table index -> sample index, to rebuild a witness on conflict
    let mut source: Vec<usize> = Vec::new();
    let mut degenerate = 0;
    for (k, a) in amps.iter().enumerate() {
        if a.first.norm() <= key_tol && a.second.norm() <= key_tol {
            degenerate += 1;
            continue;
        }
        match table.insert(CombinatorEntry {
            x: a.first,
            y: a.second,
            z: a.joint,
        }) {
            Ok(true) => source.push(k),
            Ok(false) => {}
            Err(conflict) => {
                let j = source[conflict];
                // probe conflicts keep the probe phase; indices count probes first
                let origin = match origins.get(k) {
                    Some(&phase) => WitnessOrigin::PhaseProbe { phase },
                    None => WitnessOrigin::RandomSearch {
                        first_index: j,
                        second_index: k,
                    },
                };
                return Err(AnalysisError::NonFunctional(Box::new(Witness {
                    first: states[j].clone(),
                    second: states[k].clone(),
                    first_phi: amps[j],
                    second_phi: *a,
                    origin,
                })));
            }
        }
    }
    Ok(FitOutcome {
        table,
        samples_used: amps.len(),
        degenerate_skipped: degenerate,
    })
}

/// The first built-in closed form that reproduces every table entry within `tol`,
/// together with its largest deviation.
pub fn identify_closed_form(table: &CombinatorTable, tol: f64) -> Option<(ClosedForm, f64)> {
    if table.is_empty() {
        return None;
    }
    ClosedForm::ALL.iter().find_map(|form| {
        let dev = table
            .entries()
            .iter()
            .map(|e| (form.apply(e.x, e.y) - e.z).norm())
            .fold(0.0, f64::max);
        (dev <= tol).then_some((*form, dev))
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::setup::{Configuration, SlitId};
    use crate::theory::{TableEntry, UserTable};

    fn pair() -> SlitPair {
        SlitPair::new(SlitId::new("a").unwrap(), SlitId::new("a'").unwrap()).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// φ(a) = x, φ(a') = y, φ(a ∨ a') = f(x, y) over a real grid.
    fn grid_theory(points: &[f64], f: impl Fn(f64, f64) -> f64) -> Theory {
        let p = pair();
        let mut entries = Vec::new();
        for &x in points {
            entries.push(TableEntry {
                coeffs: BTreeMap::from([(p.first.clone(), c(x))]),
                open: p.first_only(),
                value: c(x),
            });
            entries.push(TableEntry {
                coeffs: BTreeMap::from([(p.second.clone(), c(x))]),
                open: p.second_only(),
                value: c(x),
            });
            for &y in points {
                entries.push(TableEntry {
                    coeffs: BTreeMap::from([(p.first.clone(), c(x)), (p.second.clone(), c(y))]),
                    open: Configuration::new(p.ids()).unwrap(),
                    value: c(f(x, y)),
                });
            }
        }
        Theory::UserTable(UserTable::new(entries).unwrap())
    }

    #[test]
    fn linear_table_is_sum() {
        let fit = fit_combinator(
            &Theory::Linear,
            &pair(),
            &Sampler::ComplexGaussian { sigma: 1.0 },
            3,
            2000,
            1e-9,
        )
        .unwrap();
        for e in fit.table.entries() {
            assert!((e.z - (e.x + e.y)).norm() <= 1e-12);
        }
        let (form, dev) = identify_closed_form(&fit.table, 1e-8).unwrap();
        assert_eq!(form, ClosedForm::Sum);
        assert!(dev <= 1e-12);
    }

    #[test]
    fn quadratic_fit_fails_with_sign_flip() {
        let err = fit_combinator(
            &Theory::Quadratic,
            &pair(),
            &Sampler::ComplexGaussian { sigma: 1.0 },
            3,
            100,
            1e-9,
        )
        .unwrap_err();
        let AnalysisError::NonFunctional(w) = err else {
            panic!("expected NonFunctional, got {err:?}");
        };
        assert_eq!(w.first, pair().state(c(1.0), c(1.0)));
        assert_eq!(w.second, pair().state(c(1.0), c(-1.0)));
        assert_eq!(w.first_phi.joint, c(4.0));
        assert_eq!(w.second_phi.joint, c(0.0));
    }

    #[test]
    fn sum_plus_product_table_is_functional() {
        let pts = [0.1, 0.2, 0.3, 0.4, 0.5];
        let theory = grid_theory(&pts, |x, y| x + y + x * y);
        let sampler = Sampler::Grid {
            points: pts.iter().map(|&p| c(p)).collect(),
        };
        let fit = fit_combinator(&theory, &pair(), &sampler, 4, 2000, 1e-9).unwrap();
        // every grid pair is hit
        assert_eq!(fit.table.len(), pts.len() * pts.len());
        for &x in &pts {
            for &y in &pts {
                let z = fit.table.combine(c(x), c(y)).unwrap();
                assert_eq!(z, c(x + y + x * y));
            }
        }
        assert_eq!(
            identify_closed_form(&fit.table, 1e-8).map(|f| f.0),
            Some(ClosedForm::SumPlusProduct)
        );
    }

    #[test]
    fn degenerate_keys_skipped() {
        let pts = [0.0, 1.0];
        let theory = grid_theory(&pts, |x, y| x + y);
        let sampler = Sampler::Grid {
            points: pts.iter().map(|&p| c(p)).collect(),
        };
        let fit = fit_combinator(&theory, &pair(), &sampler, 4, 200, 1e-9).unwrap();
        assert!(fit.degenerate_skipped > 0);
        assert!(fit.table.nearest(c(0.0), c(0.0)).is_none());
    }

    #[test]
    fn nearest_respects_key_tol() {
        let mut t = CombinatorTable::new(1e-3).unwrap();
        assert_eq!(t.insert(CombinatorEntry { x: c(1.0), y: c(2.0), z: c(3.0) }), Ok(true));
        assert_eq!(t.insert(CombinatorEntry { x: c(1.0005), y: c(2.0), z: c(3.0005) }), Ok(false));
        assert_eq!(t.insert(CombinatorEntry { x: c(1.0005), y: c(2.0), z: c(3.5) }), Err(0));
        assert_eq!(t.combine(c(1.0009), c(1.9995)), Some(c(3.0)));
        assert_eq!(t.combine(c(1.002), c(2.0)), None);
    }
}
