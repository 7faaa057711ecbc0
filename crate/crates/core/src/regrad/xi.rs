//! Tabulated and closed-form regraduations ξ, and the additivity check.

use num_complex::Complex64;

use super::RegradError;
use crate::analysis::{PairAmplitudes, SlitPair};
use crate::theory::{Theory, WaveState};

/// Imaginary parts below this are treated as zero when a real table is queried.
const REAL_AXIS_TOL: f64 = 1e-12;

/// A candidate regraduation ξ.
pub trait XiFunction {
    fn eval(&self, t: Complex64) -> Result<Complex64, RegradError>;
}

/// ξ on a real interval, tabulated at increasing knots and interpolated
/// piecewise-linearly (monotone data stays monotone). No extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTable {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl IntervalTable {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, RegradError> {
        if knots.len() != values.len() || knots.len() < 2 {
            return Err(RegradError::InvalidTable("need at least two knots, one value each".into()));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(RegradError::InvalidTable("knots must be strictly increasing".into()));
        }
        Ok(IntervalTable { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Knot index `j` and weight `w` such that `t = (1-w)·knot[j] + w·knot[j+1]`.
    pub fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let (lo, hi) = self.domain();
        locate(&self.knots, t).filter(|_| t >= lo && t <= hi)
    }

    pub fn interpolate(&self, t: f64) -> Option<f64> {
        self.locate(t)
            .map(|(j, w)| (1.0 - w) * self.values[j] + w * self.values[j + 1])
    }

    /// Non-decreasing or non-increasing across all knots.
    pub fn is_monotone(&self) -> bool {
        let d: Vec<f64> = self.values.windows(2).map(|w| w[1] - w[0]).collect();
        d.iter().all(|&x| x >= 0.0) || d.iter().all(|&x| x <= 0.0)
    }
}

pub(crate) fn locate(knots: &[f64], t: f64) -> Option<(usize, f64)> {
    let n = knots.len();
    if n < 2 || !(t >= knots[0] && t <= knots[n - 1]) {
        return None;
    }
    let j = knots.partition_point(|&k| k <= t).clamp(1, n - 1) - 1;
    let w = (t - knots[j]) / (knots[j + 1] - knots[j]);
    Some((j, w.clamp(0.0, 1.0)))
}

impl XiFunction for IntervalTable {
    fn eval(&self, t: Complex64) -> Result<Complex64, RegradError> {
        if t.im.abs() > REAL_AXIS_TOL {
            return Err(RegradError::DomainEscape(t));
        }
        self.interpolate(t.re)
            .map(|v| Complex64::new(v, 0.0))
            .ok_or(RegradError::DomainEscape(t))
    }
}

/// ξ known only at isolated (possibly complex) points. Queries must hit a
/// point within `merge_tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    pub points: Vec<Complex64>,
    pub values: Vec<f64>,
    pub merge_tol: f64,
}

impl XiFunction for PointTable {
    fn eval(&self, t: Complex64) -> Result<Complex64, RegradError> {
        self.points
            .iter()
            .position(|p| (p - t).norm() <= self.merge_tol)
            .map(|i| Complex64::new(self.values[i], 0.0))
            .ok_or(RegradError::DomainEscape(t))
    }
}

/// Closed-form regraduations, for checking theories against a known answer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum XiRule {
    /// ξ(t) = c·t
    Linear(f64),
    /// ξ(t) = c·ln t, positive reals only
    Log(f64),
    /// ξ(t) = c·ln(1 + t), t > -1 real only
    LogOnePlus(f64),
}

impl XiFunction for XiRule {
    fn eval(&self, t: Complex64) -> Result<Complex64, RegradError> {
        let real = || (t.im.abs() <= REAL_AXIS_TOL).then_some(t.re);
        match *self {
            XiRule::Linear(c) => Ok(t * c),
            XiRule::Log(c) => real()
                .filter(|&x| x > 0.0)
                .map(|x| Complex64::new(c * x.ln(), 0.0))
                .ok_or(RegradError::DomainEscape(t)),
            XiRule::LogOnePlus(c) => real()
                .filter(|&x| x > -1.0)
                .map(|x| Complex64::new(c * x.ln_1p(), 0.0))
                .ok_or(RegradError::DomainEscape(t)),
        }
    }
}

/// ξ multiplied by a constant.
pub struct Scaled<'a, X: XiFunction + ?Sized> {
    pub inner: &'a X,
    pub factor: Complex64,
}

impl<X: XiFunction + ?Sized> XiFunction for Scaled<'_, X> {
    fn eval(&self, t: Complex64) -> Result<Complex64, RegradError> {
        Ok(self.inner.eval(t)? * self.factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditivityStats {
    pub max: f64,
    pub mean: f64,
    pub count: usize,
    /// Index of the state with the largest residual.
    pub worst: usize,
}

/// |ξ(φ(a ∨ a')) − ξ(φ(a)) − ξ(φ(a'))| over `states`.
pub fn verify_additivity<X: XiFunction + ?Sized>(
    xi: &X,
    theory: &Theory,
    states: &[WaveState],
    pair: &SlitPair,
) -> Result<AdditivityStats, RegradError> {
    if states.is_empty() {
        return Err(RegradError::NoStates);
    }
    let mut max = 0.0;
    let mut sum = 0.0;
    let mut worst = 0;
    for (i, s) in states.iter().enumerate() {
        let p = PairAmplitudes::evaluate(theory, s, pair)?;
        let r = (xi.eval(p.joint)? - xi.eval(p.first)? - xi.eval(p.second)?).norm();
        if r > max {
            max = r;
            worst = i;
        }
        sum += r;
    }
    Ok(AdditivityStats {
        max,
        mean: sum / states.len() as f64,
        count: states.len(),
        worst,
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
    fn interpolation_exact_at_knots_and_linear_between() {
        let t = IntervalTable::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.interpolate(1.0), Some(2.0));
        assert_eq!(t.interpolate(3.0), Some(3.0));
        assert_eq!(t.interpolate(0.5), Some(1.0));
        assert_eq!(t.interpolate(2.0), Some(2.5));
        assert_eq!(t.interpolate(3.01), None);
        assert_eq!(t.interpolate(-0.01), None);
        assert!(t.is_monotone());
        assert!(matches!(t.eval(Complex64::new(1.0, 0.5)), Err(RegradError::DomainEscape(_))));
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(IntervalTable::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(IntervalTable::new(vec![0.0], vec![1.0]).is_err());
        assert!(IntervalTable::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn linear_theory_identity_xi() {
        let states: Vec<WaveState> = (0..200)
            .map(|i| {
                let x = Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
                let y = Complex64::new((i as f64 * 0.73).cos(), -(i as f64 * 0.29).sin());
                pair().state(x, y)
            })
            .collect();
        let stats = verify_additivity(&XiRule::Linear(1.0), &Theory::Linear, &states, &pair()).unwrap();
        assert!(stats.max <= 1e-12);
        assert_eq!(stats.count, 200);
    }

    #[test]
    fn quadratic_fails_with_identity_on_sign_flips() {
        let states = vec![pair().state(c(1.0), c(1.0)), pair().state(c(1.0), c(-1.0))];
        let stats = verify_additivity(&XiRule::Linear(1.0), &Theory::Quadratic, &states, &pair()).unwrap();
        // ξ(4) − 2ξ(1) = 2 and ξ(0) − 2ξ(1) = −2
        assert_eq!(stats.max, 2.0);
    }

    #[test]
    fn domain_escape_is_reported() {
        let t = IntervalTable::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let states = vec![pair().state(c(0.6), c(0.6))];
        assert_eq!(
            verify_additivity(&t, &Theory::Linear, &states, &pair()),
            Err(RegradError::DomainEscape(c(1.2)))
        );
    }

    #[test]
    fn residual_scales_with_xi() {
        let states: Vec<WaveState> = [0.3, 0.7, 1.1]
            .iter()
            .map(|&x| pair().state(c(x), c(x * 0.5)))
            .collect();
        let base = verify_additivity(&XiRule::Log(1.0), &Theory::Quadratic, &states, &pair()).unwrap();
        let scaled = Scaled {
            inner: &XiRule::Log(1.0),
            factor: c(-3.0),
        };
        let s = verify_additivity(&scaled, &Theory::Quadratic, &states, &pair()).unwrap();
        assert!((s.max - 3.0 * base.max).abs() <= 1e-12 * s.max);
    }
}
