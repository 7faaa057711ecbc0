use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use regrad::sampling::{sample_batch, Sampler};
use regrad::setup::{slits, Configuration, SlitId};
use regrad::theory::{full_assignment, phi, project_closed, Theory, TheoryError, WaveState};

fn complex() -> impl Strategy<Value = Complex64> {
    (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn three_slits() -> Vec<SlitId> {
    slits(&["a", "a'", "a''"]).unwrap()
}

fn state() -> impl Strategy<Value = WaveState> {
    prop::collection::vec(complex(), 3).prop_map(|c| WaveState::from_pairs(&three_slits(), &c))
}

/// Non-empty subsets of the three slits, as bitmasks.
fn config(mask: u8) -> Configuration {
    let ids = three_slits();
    Configuration::new((0..3).filter(|i| mask & (1 << i) != 0).map(|i| ids[i].clone())).unwrap()
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-12 * 1f64.max(a.norm()).max(b.norm())
}

proptest! {
    #[test]
    fn linear_is_additive_on_disjoint_configurations(s in state(), m1 in 1u8..8, m2 in 1u8..8) {
        prop_assume!(m1 & m2 == 0);
        let joint = phi(&Theory::Linear, &s, &config(m1 | m2)).unwrap();
        let parts = phi(&Theory::Linear, &s, &config(m1)).unwrap() + phi(&Theory::Linear, &s, &config(m2)).unwrap();
        prop_assert!(close(joint, parts));
    }

    #[test]
    fn low_powers_match_named_theories(s in state(), m in 1u8..8) {
        let c = config(m);
        prop_assert_eq!(phi(&Theory::Power(1), &s, &c).unwrap(), phi(&Theory::Linear, &s, &c).unwrap());
        prop_assert_eq!(phi(&Theory::Power(2), &s, &c).unwrap(), phi(&Theory::Quadratic, &s, &c).unwrap());
    }

    #[test]
    fn closed_slits_do_not_matter(s in state(), m in 1u8..7, replacement in complex(), p in 1u32..5) {
        let c = config(m);
        let closed = three_slits().into_iter().find(|id| !c.contains(id)).unwrap();
        let mut changed = s.clone();
        changed.coeffs.insert(closed, replacement);
        prop_assert_eq!(phi(&Theory::Power(p), &s, &c).unwrap(), phi(&Theory::Power(p), &changed, &c).unwrap());
    }

    #[test]
    fn projection_is_idempotent(s in state(), m in 1u8..8) {
        let once = project_closed(&s, &config(m)).unwrap();
        prop_assert_eq!(project_closed(&once, &config(m)).unwrap(), once);
    }
}

#[test]
fn quadratic_assignment_values() {
    let ids = slits(&["a", "a'"]).unwrap();
    let alpha = Complex64::new(0.3, -1.1);
    let alpha2 = Complex64::new(-0.7, 0.4);
    let s = WaveState::from_pairs(&ids, &[alpha, alpha2]);
    let a = full_assignment(&Theory::Quadratic, &s).unwrap();
    assert_eq!(a.values.len(), 3);
    assert_eq!(a.get(&Configuration::single(ids[0].clone())), Some(alpha * alpha));
    assert_eq!(a.get(&Configuration::single(ids[1].clone())), Some(alpha2 * alpha2));
    assert_eq!(a.get(&Configuration::new(ids).unwrap()), Some((alpha + alpha2) * (alpha + alpha2)));
}

#[test]
fn linear_assignment_is_subset_sums() {
    let ids = three_slits();
    let coeffs = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.5), Complex64::new(-4.0, 1.0)];
    let a = full_assignment(&Theory::Linear, &WaveState::from_pairs(&ids, &coeffs)).unwrap();
    assert_eq!(a.values.len(), 7);
    for mask in 1u8..8 {
        let expected: Complex64 = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| coeffs[i]).sum();
        assert_eq!(a.get(&config(mask)), Some(expected));
    }
}

#[test]
fn thirteen_slits_exceed_the_cap() {
    let ids: Vec<SlitId> = (0..13).map(|i| SlitId::new(format!("s{i}")).unwrap()).collect();
    let s = WaveState::new(ids.into_iter().map(|id| (id, Complex64::new(1.0, 0.0))));
    assert_eq!(full_assignment(&Theory::Linear, &s), Err(TheoryError::TooManySlits(13)));
}

#[test]
fn complex_gaussian_mean_magnitude() {
    // |z| is Rayleigh with E|z| = σ√π/2 and Var|z| = σ²(1 - π/4)
    let sigma = 1.0;
    let n = 10_000;
    let ids = slits(&["a"]).unwrap();
    let draws = sample_batch(99, 0, &ids, &Sampler::ComplexGaussian { sigma }, n).unwrap();
    let mean = draws.iter().map(|s| s.coeff(&ids[0]).unwrap().norm()).sum::<f64>() / n as f64;
    let expected = sigma * std::f64::consts::PI.sqrt() / 2.0;
    let stderr = sigma * (1.0 - std::f64::consts::PI / 4.0).sqrt() / (n as f64).sqrt();
    assert!((mean - expected).abs() <= 5.0 * stderr, "mean {mean}, expected {expected} ± {stderr}");
}

#[test]
fn real_uniform_stays_in_range() {
    let ids = three_slits();
    for s in sample_batch(7, 0, &ids, &Sampler::RealUniform { lo: -1.0, hi: 1.0 }, 2000).unwrap() {
        for c in s.coeffs.values() {
            assert_eq!(c.im, 0.0);
            assert!((-1.0..=1.0).contains(&c.re));
        }
    }
}

#[test]
fn user_table_misses_are_reported() {
    let ids = slits(&["a", "a'"]).unwrap();
    let table = regrad::theory::UserTable::new(vec![regrad::theory::TableEntry {
        coeffs: BTreeMap::from([(ids[0].clone(), Complex64::new(1.0, 0.0))]),
        open: Configuration::single(ids[0].clone()),
        value: Complex64::new(3.0, 0.0),
    }])
    .unwrap();
    let theory = Theory::UserTable(table);
    let s = WaveState::from_pairs(&ids, &[Complex64::new(1.0, 0.0), Complex64::new(5.0, 0.0)]);
    assert_eq!(phi(&theory, &s, &Configuration::single(ids[0].clone())), Ok(Complex64::new(3.0, 0.0)));
    assert!(matches!(
        phi(&theory, &s, &Configuration::single(ids[1].clone())),
        Err(TheoryError::TableMiss(_))
    ));
}
