//! Regraduation of an associative combinator on a real interval.
//!
//! ξ is tabulated on a grid of knots. Every ordered pair of knots `(x, y)`
//! whose image `S(x, y)` stays inside the interval yields the linear equation
//! `ξ(S(x, y)) − ξ(x) − ξ(y) = 0`, where `ξ(S(x, y))` is read off the table by
//! piecewise-linear interpolation. The system is solved by least squares with
//! ξ(anchor) = 1 held fixed.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::xi::{locate, IntervalTable};
use super::{RegradError, RegradStatus, RegraduationResult, XiTable};
use crate::analysis::{check_associativity, grid_triples, AnalysisError, Combinator};

/// Precondition tolerance for associativity on the interval.
pub const ASSOCIATIVITY_PRECONDITION: f64 = 1e-9;
/// Points per axis of the associativity precondition grid.
const PRECONDITION_POINTS: usize = 11;
/// Points per axis of the monotonicity check.
const MONOTONE_POINTS: usize = 65;
const REAL_TOL: f64 = 1e-12;
/// Weight of the smoothness penalty, relative to the mean diagonal of the normal matrix.
const SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinatorOptions {
    /// Knot with ξ = 1. Defaults to the upper end of the interval.
    pub anchor: Option<f64>,
    /// Largest equation residual accepted.
    pub tol: f64,
}

impl Default for CombinatorOptions {
    fn default() -> Self {
        CombinatorOptions { anchor: None, tol: 1e-6 }
    }
}

fn real_value<S: Combinator + ?Sized>(s: &S, x: f64, y: f64) -> Result<f64, RegradError> {
    let z = s
        .combine(Complex64::new(x, 0.0), Complex64::new(y, 0.0))
        .ok_or(AnalysisError::EvaluationGap {
            x: Complex64::new(x, 0.0),
            y: Complex64::new(y, 0.0),
        })?;
    if z.im.abs() > REAL_TOL || !z.re.is_finite() {
        return Err(RegradError::NonMonotone(format!("S({x}, {y}) = {z} is not a finite real")));
    }
    Ok(z.re)
}

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| if i + 1 == m { hi } else { lo + (hi - lo) * i as f64 / (m - 1) as f64 })
        .collect()
}

fn check_monotone<S: Combinator + ?Sized>(s: &S, lo: f64, hi: f64) -> Result<(), RegradError> {
    let pts = linspace(lo, hi, MONOTONE_POINTS);
    for &k in &pts {
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if real_value(s, b, k)? <= real_value(s, a, k)? {
                return Err(RegradError::NonMonotone(format!(
                    "S(x, {k}) does not increase between x = {a} and x = {b}"
                )));
            }
            if real_value(s, k, b)? <= real_value(s, k, a)? {
                return Err(RegradError::NonMonotone(format!(
                    "S({k}, y) does not increase between y = {a} and y = {b}"
                )));
            }
        }
    }
    Ok(())
}

/// One equation row: (knot index, coefficient) pairs.
fn row(knots: &[f64], i: usize, k: usize, s: f64) -> Option<[(usize, f64); 4]> {
    let (j, w) = locate(knots, s)?;
    Some([(j, 1.0 - w), (j + 1, w), (i, -1.0), (k, -1.0)])
}

/// Builds ξ on `m` evenly spaced knots of `[lo, hi]` (plus the anchor, if it
/// is not a knot already).
pub fn regraduate_combinator<S: Combinator + ?Sized>(
    s: &S,
    domain: (f64, f64),
    m: usize,
    opts: CombinatorOptions,
) -> Result<RegraduationResult, RegradError> {
    let (lo, hi) = domain;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(RegradError::BadDomain(format!("[{lo}, {hi}]")));
    }
    if m < 3 {
        return Err(RegradError::BadDomain(format!("grid size {m} is below 3")));
    }
    let anchor = opts.anchor.unwrap_or(hi);
    if !(lo..=hi).contains(&anchor) {
        return Err(RegradError::UnknownAnchor(Complex64::new(anchor, 0.0)));
    }

    let pre = linspace(lo, hi, PRECONDITION_POINTS)
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect::<Vec<_>>();
    let report = check_associativity(s, &grid_triples(&pre), ASSOCIATIVITY_PRECONDITION)?;
    if !report.passed {
        return Err(RegradError::NotAssociative {
            max_residual: report.max_residual,
            worst_triple: report.worst_triple,
        });
    }
    check_monotone(s, lo, hi)?;

    let mut knots = linspace(lo, hi, m);
    if knots.iter().all(|k| (k - anchor).abs() > REAL_TOL * (1.0 + anchor.abs())) {
        knots.push(anchor);
        knots.sort_by(f64::total_cmp);
    }
    let n = knots.len();
    let anchor_idx = knots
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - anchor).abs().total_cmp(&(b.1 - anchor).abs()))
        .map(|(i, _)| i)
        .expect("non-empty knots");

    let mut images = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let z = real_value(s, knots[i], knots[k])?;
            if z >= lo && z <= hi {
                images.push((i, k, z));
            }
        }
    }
    if images.is_empty() {
        return Err(RegradError::SingularSystem { null_dim: n });
    }

    let mut normal = DMatrix::<f64>::zeros(n, n);
    for &(i, k, z) in &images {
        if let Some(r) = row(&knots, i, k, z) {
            for &(p, a) in &r {
                for &(q, b) in &r {
                    normal[(p, q)] += a * b;
                }
            }
        }
    }

    // A small second-difference penalty picks the smoothest of several
    // equally good solutions when the grid leaves ξ underdetermined.
    let scale = normal.trace() / n as f64;
    let lambda = SMOOTHING * scale;
    for j in 1..n - 1 {
        let d = [(j - 1, 1.0), (j, -2.0), (j + 1, 1.0)];
        for &(p, a) in &d {
            for &(q, b) in &d {
                normal[(p, q)] += lambda * a * b;
            }
        }
    }

    // fix ξ(anchor) = 1 and solve for the rest
    let rest: Vec<usize> = (0..n).filter(|&j| j != anchor_idx).collect();
    let reduced = DMatrix::from_fn(n - 1, n - 1, |p, q| normal[(rest[p], rest[q])]);
    let rhs = DVector::from_fn(n - 1, |p, _| -normal[(rest[p], anchor_idx)]);
    let sol = Cholesky::new(reduced)
        .ok_or(RegradError::SingularSystem { null_dim: 1 })?
        .solve(&rhs);
    let mut values = vec![0.0; n];
    values[anchor_idx] = 1.0;
    for (p, &j) in rest.iter().enumerate() {
        values[j] = sol[p];
    }

    let residual = images
        .iter()
        .filter_map(|&(i, k, z)| row(&knots, i, k, z))
        .map(|r| r.iter().map(|&(j, a)| a * values[j]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    if residual > opts.tol {
        return Err(RegradError::Infeasible { residual, tol: opts.tol });
    }
    let table = IntervalTable::new(knots, values)?;
    if !table.is_monotone() {
        return Err(RegradError::NonMonotone("fitted ξ is not monotone".into()));
    }
    let (vmin, vmax) = table
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if vmax - vmin <= 0.1 {
        return Err(RegradError::Inconclusive {
            constrained_residual: residual,
            sup_norm: vmax.abs().max(vmin.abs()),
        });
    }
    Ok(RegraduationResult {
        status: RegradStatus::Found,
        xi: XiTable::Interval(table),
        additivity_residual: residual,
        anchor: Complex64::new(anchor, 0.0),
        certificate: None,
        equations: images.len(),
        unknowns: n,
    })
}
