//! Re-checks the claims in a saved report without using the analysis code
//! that produced them.
//!
//! φ is recomputed straight from the scenario echo: the open coefficients are
//! summed and raised to the theory's power, or the user table is scanned
//! entry by entry.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::report::{AssociativityPayload, Payload, Report, StateRecord, WitnessRecord};
use crate::scenario::{Task, TheorySpec};

/// Recomputed and reported values may differ by this much, relative to max(1, |value|).
const AGREEMENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub task: Task,
    pub what: String,
    pub valid: bool,
    pub detail: String,
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= AGREEMENT * 1f64.max(a.norm()).max(b.norm())
}

/// φ for the given open slits, from first principles.
pub fn recompute_phi(
    theory: &TheorySpec,
    coeffs: &BTreeMap<String, Complex64>,
    open: &[&str],
) -> Result<Complex64, String> {
    for label in open {
        if !coeffs.contains_key(*label) {
            return Err(format!("state has no coefficient for slit `{label}`"));
        }
    }
    let sum = || open.iter().map(|l| coeffs[*l]).sum::<Complex64>();
    match theory {
        TheorySpec::Linear => Ok(sum()),
        TheorySpec::Quadratic => Ok(sum().powu(2)),
        TheorySpec::Power { p } => Ok(sum().powu(*p)),
        TheorySpec::UserTable { table } => {
            let open_set: BTreeSet<&str> = open.iter().copied().collect();
            let zero = Complex64::new(0.0, 0.0);
            let projected = |label: &str| {
                if open_set.contains(label) {
                    coeffs.get(label).copied().unwrap_or(zero)
                } else {
                    zero
                }
            };
            table
                .iter()
                .find(|e| {
                    let entry_open: BTreeSet<&str> = e.open.iter().map(String::as_str).collect();
                    if entry_open != open_set {
                        return false;
                    }
                    let labels: BTreeSet<&str> = e
                        .coeffs
                        .keys()
                        .map(String::as_str)
                        .chain(coeffs.keys().map(String::as_str))
                        .collect();
                    labels.into_iter().all(|l| {
                        let want = e.coeffs.get(l).map_or(zero, |&c| c.into());
                        projected(l) == want
                    })
                })
                .map(|e| e.value.into())
                .ok_or_else(|| format!("no table entry for {open:?} open"))
        }
    }
}

fn state_coeffs(s: &StateRecord) -> BTreeMap<String, Complex64> {
    s.coeffs.iter().map(|(k, v)| (k.clone(), (*v).into())).collect()
}

/// (φ(a), φ(a'), φ(a ∨ a')) recomputed, after confirming the reported values.
fn recheck_state(theory: &TheorySpec, slits: &[String; 2], s: &StateRecord) -> Result<[Complex64; 3], String> {
    let coeffs = state_coeffs(s);
    let [a, b] = slits;
    let got = [
        recompute_phi(theory, &coeffs, &[a])?,
        recompute_phi(theory, &coeffs, &[b])?,
        recompute_phi(theory, &coeffs, &[a, b])?,
    ];
    let reported = [s.phi.first, s.phi.second, s.phi.joint].map(Complex64::from);
    for (g, r) in got.iter().zip(reported) {
        if !close(*g, r) {
            return Err(format!("reported φ = {r} but recomputation gives {g}"));
        }
    }
    Ok(got)
}

pub fn check_witness(theory: &TheorySpec, w: &WitnessRecord) -> Result<String, String> {
    let p = recheck_state(theory, &w.slits, &w.first)?;
    let q = recheck_state(theory, &w.slits, &w.second)?;
    let tol = w.tolerance;
    for (i, name) in [(0, &w.slits[0]), (1, &w.slits[1])] {
        let d = (p[i] - q[i]).norm();
        if d > tol {
            return Err(format!("φ({name}) differs by {d:e} > {tol:e}"));
        }
    }
    let gap = (p[2] - q[2]).norm();
    if gap <= 10.0 * tol {
        return Err(format!("joint amplitudes differ by only {gap:e}"));
    }
    Ok(format!(
        "single-slit amplitudes agree within {tol:e}; joint amplitudes {} and {} differ by {gap}",
        p[2], q[2]
    ))
}

fn closed_form(key: &str) -> Option<fn(Complex64, Complex64) -> Complex64> {
    Some(match key {
        "sum" => |x, y| x + y,
        "product" => |x, y| x * y,
        "sum_plus_product" => |x, y| x + y + x * y,
        "sum_plus_square" => |x, y| x + y * y,
        _ => return None,
    })
}

/// Recomputes both bracketings at the reported worst triple.
pub fn check_worst_triple(p: &AssociativityPayload) -> Result<String, String> {
    let key = p.closed_form.as_deref().ok_or("the tested S is a sampled table")?;
    let s = closed_form(key).ok_or_else(|| format!("unknown closed form `{key}`"))?;
    let [x, y, z] = p.worst_triple.map(Complex64::from);
    let left = s(s(x, y), z);
    let right = s(x, s(y, z));
    let residual = (left - right).norm();
    if !close(left, p.worst_sides[0].into()) || !close(right, p.worst_sides[1].into()) {
        return Err(format!("reported sides differ from recomputed {left} and {right}"));
    }
    if (residual - p.max_residual).abs() > AGREEMENT * 1f64.max(residual) {
        return Err(format!("reported residual {:e}, recomputed {residual:e}", p.max_residual));
    }
    if p.passed != (residual <= p.tolerance) {
        return Err("pass flag disagrees with the recomputed residual".into());
    }
    Ok(format!("S(S(x,y),z) = {left}, S(x,S(y,z)) = {right}, residual {residual:e}"))
}

/// Every witness in the report, plus the worst associativity triple when S is a closed form.
pub fn verify_report(report: &Report) -> Vec<Check> {
    let theory = &report.scenario.theory;
    let mut out = Vec::new();
    for (task, w) in report.witnesses() {
        let r = check_witness(theory, w);
        out.push(Check {
            task,
            what: "witness".into(),
            valid: r.is_ok(),
            detail: r.unwrap_or_else(|e| e),
        });
    }
    for t in &report.tasks {
        if let Some(Payload::Associativity(p)) = &t.payload {
            if p.closed_form.is_some() {
                let r = check_worst_triple(p);
                out.push(Check {
                    task: t.task,
                    what: "worst triple".into(),
                    valid: r.is_ok(),
                    detail: r.unwrap_or_else(|e| e),
                });
            }
        }
    }
    out
}
