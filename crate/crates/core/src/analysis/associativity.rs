use num_complex::Complex64;
use rayon::prelude::*;

use super::AnalysisError;
use crate::setup::{SetupExpr, SlitId};

/// A two-argument rule combining the amplitudes of disjoint setups.
pub trait Combinator: Sync {
    /// `None` when the rule has no value at `(x, y)`.
    fn combine(&self, x: Complex64, y: Complex64) -> Option<Complex64>;

    fn describe(&self) -> String;
}

/// Built-in combinators recognised when identifying a sampled table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClosedForm {
    Sum,
    Product,
    SumPlusProduct,
    SumPlusSquare,
}

impl ClosedForm {
    pub const ALL: [ClosedForm; 4] = [
        ClosedForm::Sum,
        ClosedForm::Product,
        ClosedForm::SumPlusProduct,
        ClosedForm::SumPlusSquare,
    ];

    pub fn apply(self, x: Complex64, y: Complex64) -> Complex64 {
        match self {
            ClosedForm::Sum => x + y,
            ClosedForm::Product => x * y,
            ClosedForm::SumPlusProduct => x + y + x * y,
            ClosedForm::SumPlusSquare => x + y * y,
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            ClosedForm::Sum => "x+y",
            ClosedForm::Product => "x·y",
            ClosedForm::SumPlusProduct => "x+y+x·y",
            ClosedForm::SumPlusSquare => "x+y²",
        }
    }

    /// Stable identifier used in files.
    pub fn key(self) -> &'static str {
        match self {
            ClosedForm::Sum => "sum",
            ClosedForm::Product => "product",
            ClosedForm::SumPlusProduct => "sum_plus_product",
            ClosedForm::SumPlusSquare => "sum_plus_square",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        ClosedForm::ALL.into_iter().find(|f| f.key() == key)
    }
}

impl Combinator for ClosedForm {
    fn combine(&self, x: Complex64, y: Complex64) -> Option<Complex64> {
        Some(self.apply(x, y))
    }

    fn describe(&self) -> String {
        format!("S(x,y) = {}", self.formula())
    }
}

impl<F> Combinator for F
where
    F: Fn(Complex64, Complex64) -> Complex64 + Sync,
{
    fn combine(&self, x: Complex64, y: Complex64) -> Option<Complex64> {
        Some(self(x, y))
    }

    fn describe(&self) -> String {
        "closure".into()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociativityReport {
    /// Largest |S(S(x,y),z) − S(x,S(y,z))| over the grid.
    pub max_residual: f64,
    /// Largest residual divided by max(1, |left|, |right|).
    pub max_relative_residual: f64,
    pub worst_triple: [Complex64; 3],
    /// Both sides at the worst triple: (left-nested, right-nested).
    pub worst_sides: [Complex64; 2],
    pub grid_size: usize,
    pub tolerance: f64,
    pub passed: bool,
}

fn both_sides<S: Combinator + ?Sized>(s: &S, [x, y, z]: [Complex64; 3]) -> Result<[Complex64; 2], AnalysisError> {
    let eval = |a: Complex64, b: Complex64| s.combine(a, b).ok_or(AnalysisError::EvaluationGap { x: a, y: b });
    let left = eval(eval(x, y)?, z)?;
    let right = eval(x, eval(y, z)?)?;
    Ok([left, right])
}

/// Evaluates both bracketings of every triple. The first triple (in grid
/// order) that cannot be evaluated is reported as an error.
pub fn check_associativity<S: Combinator + ?Sized>(
    s: &S,
    grid: &[[Complex64; 3]],
    tol: f64,
) -> Result<AssociativityReport, AnalysisError> {
    super::check_tolerance(tol)?;
    if grid.is_empty() {
        return Err(AnalysisError::EmptyGrid);
    }
    let sides = grid
        .par_iter()
        .map(|t| both_sides(s, *t))
        .collect::<Result<Vec<_>, _>>()?;

    let mut worst = 0;
    let mut max_residual = f64::NEG_INFINITY;
    let mut max_relative: f64 = 0.0;
    for (i, [l, r]) in sides.iter().enumerate() {
        let residual = (l - r).norm();
        if residual > max_residual {
            max_residual = residual;
            worst = i;
        }
        max_relative = max_relative.max(residual / 1f64.max(l.norm()).max(r.norm()));
    }
    Ok(AssociativityReport {
        max_residual,
        max_relative_residual: max_relative,
        worst_triple: grid[worst],
        worst_sides: sides[worst],
        grid_size: grid.len(),
        tolerance: tol,
        passed: max_residual <= tol,
    })
}

/// Every ordered triple drawn from `values`.
pub fn grid_triples(values: &[Complex64]) -> Vec<[Complex64; 3]> {
    let mut out = Vec::with_capacity(values.len().pow(3));
    for &x in values {
        for &y in values {
            for &z in values {
                out.push([x, y, z]);
            }
        }
    }
    out
}

/// Amplitude of a setup computed bracket by bracket: leaves come from
/// `leaf`, and every join is evaluated with `s`.
pub fn evaluate_bracketing<S, L>(expr: &SetupExpr, leaf: &L, s: &S) -> Result<Complex64, AnalysisError>
where
    S: Combinator + ?Sized,
    L: Fn(&SlitId) -> Result<Complex64, AnalysisError>,
{
    match expr {
        SetupExpr::Atom(id) => leaf(id),
        SetupExpr::Join(l, r) => {
            let x = evaluate_bracketing(l, leaf, s)?;
            let y = evaluate_bracketing(r, leaf, s)?;
            s.combine(x, y).ok_or(AnalysisError::EvaluationGap { x, y })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sum_and_product_associative() {
        let vals: Vec<Complex64> = (0..10).map(|i| Complex64::new(0.3 * i as f64 - 1.0, 0.1 * i as f64)).collect();
        let grid = grid_triples(&vals);
        assert_eq!(grid.len(), 1000);
        let sum = check_associativity(&ClosedForm::Sum, &grid, 1e-9).unwrap();
        assert!(sum.passed && sum.max_residual <= 1e-12);
        let prod = check_associativity(&ClosedForm::Product, &grid, 1e-9).unwrap();
        assert!(prod.passed && prod.max_relative_residual <= 1e-12);
    }

    #[test]
    fn sum_plus_square_fails() {
        let vals: Vec<Complex64> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|&v| c(v)).collect();
        let rep = check_associativity(&ClosedForm::SumPlusSquare, &grid_triples(&vals), 1e-9).unwrap();
        assert!(!rep.passed);
        assert!(rep.max_residual > 0.1);
        let [x, y, z] = rep.worst_triple;
        let f = ClosedForm::SumPlusSquare;
        let direct = (f.apply(f.apply(x, y), z) - f.apply(x, f.apply(y, z))).norm();
        assert_eq!(direct, rep.max_residual);
    }

    #[test]
    fn gaps_and_empty_grid() {
        let partial = |x: Complex64, y: Complex64| x + y;
        assert!(check_associativity(&partial, &[[c(1.0), c(2.0), c(3.0)]], 1e-9).is_ok());
        assert_eq!(
            check_associativity(&ClosedForm::Sum, &[], 1e-9),
            Err(AnalysisError::EmptyGrid)
        );
        struct Never;
        impl Combinator for Never {
            fn combine(&self, _: Complex64, _: Complex64) -> Option<Complex64> {
                None
            }
            fn describe(&self) -> String {
                "never".into()
            }
        }
        assert!(matches!(
            check_associativity(&Never, &[[c(1.0), c(2.0), c(3.0)]], 1e-9),
            Err(AnalysisError::EvaluationGap { .. })
        ));
    }

    #[test]
    fn closed_form_keys_round_trip() {
        for f in ClosedForm::ALL {
            assert_eq!(ClosedForm::from_key(f.key()), Some(f));
        }
        assert_eq!(ClosedForm::from_key("nope"), None);
    }
}
