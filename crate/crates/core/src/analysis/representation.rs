use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{
    cell, check_tolerance, is_witness, neighbourhood, AnalysisError, PairAmplitudes, SlitPair, Witness,
    WitnessOrigin,
};
use crate::sampling::{lane, sample_batch, Sampler};
use crate::theory::{Theory, TheoryError, WaveState};

/// Highest root-of-unity order tried by the phase probes.
const MAX_PROBE_ORDER: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepresentationStatus {
    Representation,
    NotRepresentation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationVerdict {
    pub status: RepresentationStatus,
    pub witness: Option<Witness>,
    pub agreement_tolerance: f64,
    /// Probe states plus random states that were evaluated.
    pub samples_used: usize,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Unit phases e^{2πik/q} for coprime k < q ≤ 8, starting with -1.
fn probe_phases() -> Vec<Complex64> {
    let mut out = vec![Complex64::new(-1.0, 0.0)];
    for q in 3..=MAX_PROBE_ORDER {
        for k in 1..q {
            if gcd(k, q) == 1 {
                out.push(Complex64::from_polar(1.0, TAU * k as f64 / q as f64));
            }
        }
    }
    out
}

fn probe_magnitudes(sampler: &Sampler) -> Vec<Complex64> {
    match sampler {
        Sampler::Grid { points } => points.iter().copied().filter(|p| p.norm() > 0.0).collect(),
        _ => [1.0, 0.5, 2.0].iter().map(|&a| Complex64::new(a, 0.0)).collect(),
    }
}

/// The deterministic probe family: `(α, α)` against `(α, ζα)`.
///
/// With ζ = -1 this is the relative-sign ambiguity; other roots of unity catch
/// higher powers, whose single-slit amplitudes cannot see a phase of order p.
pub fn phase_probes(pair: &SlitPair, sampler: &Sampler) -> Vec<(WaveState, WaveState, Complex64)> {
    let alphas = probe_magnitudes(sampler);
    let mut out = Vec::new();
    for zeta in probe_phases() {
        for &alpha in &alphas {
            out.push((pair.state(alpha, alpha), pair.state(alpha, zeta * alpha), zeta));
        }
    }
    out
}

fn skip_miss<T>(r: Result<T, TheoryError>) -> Result<Option<T>, TheoryError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(TheoryError::TableMiss(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Searches for a witness that φ(a ∨ a') is not determined by φ(a) and φ(a').
///
/// Phase probes run first; then `n` seeded states are bucketed by their
/// single-slit amplitudes on a `tol` lattice and every collision is checked
/// exactly. Probe states a tabulated theory cannot evaluate are skipped.
pub fn check_representation(
    theory: &Theory,
    pair: &SlitPair,
    sampler: &Sampler,
    seed: u64,
    n: usize,
    tol: f64,
) -> Result<RepresentationVerdict, AnalysisError> {
    check_tolerance(tol)?;
    if n == 0 {
        return Err(AnalysisError::BadSampleCount);
    }
    sampler.validate()?;

    let mut used = 0;
    for (s1, s2, phase) in phase_probes(pair, sampler) {
        let p1 = skip_miss(PairAmplitudes::evaluate(theory, &s1, pair))?;
        let p2 = skip_miss(PairAmplitudes::evaluate(theory, &s2, pair))?;
        let (Some(p1), Some(p2)) = (p1, p2) else {
            continue;
        };
        used += 2;
        if is_witness(&p1, &p2, tol) {
            return Ok(RepresentationVerdict {
                status: RepresentationStatus::NotRepresentation,
                witness: Some(Witness {
                    first: s1,
                    second: s2,
                    first_phi: p1,
                    second_phi: p2,
                    origin: WitnessOrigin::PhaseProbe { phase },
                }),
                agreement_tolerance: tol,
                samples_used: used,
            });
        }
    }

    let states = sample_batch(seed, lane::REPRESENTATION, &pair.ids(), sampler, n)?;
    let amps = states
        .par_iter()
        .map(|s| PairAmplitudes::evaluate(theory, s, pair))
        .collect::<Result<Vec<_>, _>>()?;
    used += n;

    let mut buckets: HashMap<[i64; 4], Vec<usize>> = HashMap::new();
    for (i, a) in amps.iter().enumerate() {
        let home = cell(a.first, a.second, tol);
        for c in neighbourhood(home) {
            let Some(members) = buckets.get(&c) else {
                continue;
            };
            if let Some(&j) = members.iter().find(|&&j| is_witness(&amps[j], a, tol)) {
                return Ok(RepresentationVerdict {
                    status: RepresentationStatus::NotRepresentation,
                    witness: Some(Witness {
                        first: states[j].clone(),
                        second: states[i].clone(),
                        first_phi: amps[j],
                        second_phi: *a,
                        origin: WitnessOrigin::RandomSearch {
                            first_index: j,
                            second_index: i,
                        },
                    }),
                    agreement_tolerance: tol,
                    samples_used: used,
                });
            }
        }
        buckets.entry(home).or_default().push(i);
    }

    Ok(RepresentationVerdict {
        status: RepresentationStatus::Representation,
        witness: None,
        agreement_tolerance: tol,
        samples_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::SlitId;

    fn pair() -> SlitPair {
        SlitPair::new(SlitId::new("a").unwrap(), SlitId::new("a'").unwrap()).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn quadratic_sign_flip_witness() {
        let v = check_representation(
            &Theory::Quadratic,
            &pair(),
            &Sampler::ComplexGaussian { sigma: 1.0 },
            1,
            100,
            1e-9,
        )
        .unwrap();
        assert_eq!(v.status, RepresentationStatus::NotRepresentation);
        let w = v.witness.unwrap();
        assert_eq!(w.first, pair().state(c(1.0), c(1.0)));
        assert_eq!(w.second, pair().state(c(1.0), c(-1.0)));
        assert_eq!((w.first_phi.first, w.first_phi.second), (c(1.0), c(1.0)));
        assert_eq!((w.second_phi.first, w.second_phi.second), (c(1.0), c(1.0)));
        assert_eq!(w.first_phi.joint, c(4.0));
        assert_eq!(w.second_phi.joint, c(0.0));
        assert_eq!(w.origin, WitnessOrigin::PhaseProbe { phase: c(-1.0) });
    }

    #[test]
    fn linear_is_representation() {
        let v = check_representation(
            &Theory::Linear,
            &pair(),
            &Sampler::ComplexGaussian { sigma: 1.0 },
            9,
            10_000,
            1e-9,
        )
        .unwrap();
        assert_eq!(v.status, RepresentationStatus::Representation);
        assert!(v.witness.is_none());
        assert!(v.samples_used >= 10_000);
    }

    #[test]
    fn cubic_caught_by_cube_root_probe() {
        let v = check_representation(
            &Theory::Power(3),
            &pair(),
            &Sampler::RealUniform { lo: -1.0, hi: 1.0 },
            2,
            100,
            1e-9,
        )
        .unwrap();
        assert_eq!(v.status, RepresentationStatus::NotRepresentation);
        match v.witness.unwrap().origin {
            WitnessOrigin::PhaseProbe { phase } => {
                assert!((phase.powu(3) - c(1.0)).norm() < 1e-12);
                assert!((phase - c(1.0)).norm() > 0.5);
            }
            other => panic!("unexpected origin {other:?}"),
        }
    }

    #[test]
    fn bad_inputs() {
        let s = Sampler::ComplexGaussian { sigma: 1.0 };
        assert_eq!(
            check_representation(&Theory::Linear, &pair(), &s, 0, 10, 0.0),
            Err(AnalysisError::BadTolerance(0.0))
        );
        assert!(matches!(
            check_representation(&Theory::Linear, &pair(), &s, 0, 10, f64::NAN),
            Err(AnalysisError::BadTolerance(_))
        ));
        assert_eq!(
            check_representation(&Theory::Linear, &pair(), &s, 0, 0, 1e-9),
            Err(AnalysisError::BadSampleCount)
        );
    }

    #[test]
    fn phases_are_distinct_roots_of_unity() {
        let phases = probe_phases();
        assert_eq!(phases[0], c(-1.0));
        // φ(1)+φ(2)+...+φ(8) minus the trivial root: 0+1+2+2+4+2+6+4 = 21
        assert_eq!(phases.len(), 21);
        for (i, p) in phases.iter().enumerate() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
            for q in &phases[..i] {
                assert!((p - q).norm() > 1e-6);
            }
        }
    }
}
