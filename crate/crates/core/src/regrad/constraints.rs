//! ξ as unknowns at sampled amplitude values.
//!
//! Each state contributes ξ(φ(a ∨ a')) = ξ(φ(a)) + ξ(φ(a')). Amplitude values
//! that coincide (within the merge tolerance) share one unknown, which is what
//! lets two such equations talk to each other.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use super::xi::PointTable;
use super::{RegradError, RegradStatus, RegraduationResult, TrivialityCertificate, XiTable};
use crate::analysis::{PairAmplitudes, SlitPair};
use crate::theory::{fmt_complex, Theory, WaveState};

/// Amplitude values closer than this are the same unknown.
pub const DEFAULT_MERGE_TOL: f64 = 1e-10;

/// `ξ(points[sum]) = ξ(points[left]) + ξ(points[right])`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Equation {
    pub sum: usize,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub points: Vec<Complex64>,
    pub equations: Vec<Equation>,
    pub merge_tol: f64,
}

impl ConstraintSet {
    pub fn point_index(&self, t: Complex64) -> Option<usize> {
        self.points.iter().position(|p| (p - t).norm() <= self.merge_tol)
    }

    /// `ξ(4) = 2ξ(1)` style rendering.
    pub fn render_equation(&self, eq: &Equation) -> String {
        let p = |i: usize| fmt_complex(self.points[i]);
        if eq.left == eq.right {
            format!("ξ({}) = 2ξ({})", p(eq.sum), p(eq.left))
        } else {
            format!("ξ({}) = ξ({}) + ξ({})", p(eq.sum), p(eq.left), p(eq.right))
        }
    }

    fn intern(&mut self, t: Complex64) -> usize {
        match self.point_index(t) {
            Some(i) => i,
            None => {
                self.points.push(t);
                self.points.len() - 1
            }
        }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.equations.len(), self.points.len());
        for (r, eq) in self.equations.iter().enumerate() {
            a[(r, eq.sum)] += 1.0;
            a[(r, eq.left)] -= 1.0;
            a[(r, eq.right)] -= 1.0;
        }
        a
    }
}

/// One additivity equation per state.
pub fn build_constraints(
    theory: &Theory,
    states: &[WaveState],
    pair: &SlitPair,
    merge_tol: f64,
) -> Result<ConstraintSet, RegradError> {
    if states.is_empty() {
        return Err(RegradError::NoStates);
    }
    let mut cs = ConstraintSet {
        points: Vec::new(),
        equations: Vec::with_capacity(states.len()),
        merge_tol,
    };
    for s in states {
        let p = PairAmplitudes::evaluate(theory, s, pair)?;
        let sum = cs.intern(p.joint);
        let left = cs.intern(p.first);
        let right = cs.intern(p.second);
        cs.equations.push(Equation { sum, left, right });
    }
    Ok(cs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Largest equation residual accepted for a non-trivial ξ.
    pub tol: f64,
    /// Sup-norm below which the nearest exact solution counts as ξ = 0.
    pub triviality: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-6,
            triviality: 1e-8,
        }
    }
}

/// Orthonormal basis of the numerical null space of `a`, as rows.
fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, n) = a.shape();
    let padded = if r < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (r, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma_max = svd.singular_values.max();
    let cutoff = 1e-10 * sigma_max.max(1.0);
    let rows: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    DMatrix::from_fn(rows.len(), n, |i, j| v_t[(rows[i], j)])
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves for ξ with ξ(anchor) = 1.
///
/// If the anchored least-squares fit satisfies every equation within `tol`,
/// the result is `Found`. Otherwise the fit is projected onto the exact
/// solution space; if that projection vanishes the only solution is ξ = 0 and
/// the result is `Trivial`, carrying both numbers as a certificate. More than
/// one free direction besides scale means the equations do not pin ξ down.
pub fn solve_constraints(
    cs: &ConstraintSet,
    anchor: Complex64,
    opts: SolveOptions,
) -> Result<RegraduationResult, RegradError> {
    let n = cs.points.len();
    if cs.equations.is_empty() || n == 0 {
        return Err(RegradError::SingularSystem { null_dim: n });
    }
    let anchor_idx = cs.point_index(anchor).ok_or(RegradError::UnknownAnchor(anchor))?;
    let a = cs.matrix();
    let null = null_space(&a);
    let null_dim = null.nrows();
    if null_dim >= 2 {
        return Err(RegradError::SingularSystem { null_dim });
    }

    let xi = if n == 1 {
        DVector::from_element(1, 1.0)
    } else {
        let rest: Vec<usize> = (0..n).filter(|&j| j != anchor_idx).collect();
        let reduced = a.select_columns(&rest);
        let rhs = -a.column(anchor_idx);
        let sol = SVD::new(reduced, true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| RegradError::InvalidTable(e.to_string()))?;
        let mut xi = DVector::zeros(n);
        xi[anchor_idx] = 1.0;
        for (k, &j) in rest.iter().enumerate() {
            xi[j] = sol[k];
        }
        xi
    };
    let residual = sup_norm(&(&a * &xi));

    let points = cs.points.clone();
    if residual <= opts.tol {
        let (lo, hi) = xi.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        if hi - lo <= 0.1 {
            return Err(RegradError::Inconclusive {
                constrained_residual: residual,
                sup_norm: sup_norm(&xi),
            });
        }
        return Ok(RegraduationResult {
            status: RegradStatus::Found,
            xi: XiTable::Points(PointTable {
                points,
                values: xi.iter().copied().collect(),
                merge_tol: cs.merge_tol,
            }),
            additivity_residual: residual,
            anchor,
            certificate: None,
            equations: cs.equations.len(),
            unknowns: n,
        });
    }

    let projected = if null_dim == 0 {
        DVector::zeros(n)
    } else {
        null.transpose() * (&null * &xi)
    };
    let sup = sup_norm(&projected);
    if sup > opts.triviality {
        return Err(RegradError::Inconclusive {
            constrained_residual: residual,
            sup_norm: sup,
        });
    }
    Ok(RegraduationResult {
        status: RegradStatus::Trivial,
        xi: XiTable::Points(PointTable {
            points,
            values: projected.iter().copied().collect(),
            merge_tol: cs.merge_tol,
        }),
        additivity_residual: residual,
        anchor,
        certificate: Some(TrivialityCertificate {
            constrained_residual: residual,
            unconstrained_sup_norm: sup,
            null_dim,
        }),
        equations: cs.equations.len(),
        unknowns: n,
    })
}
