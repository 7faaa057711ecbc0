//! Seeded wave-state sampling.
//!
//! Every state in a batch is drawn from its own ChaCha stream, addressed by a
//! lane (which analysis asked for it) and the sample index. Batches can
//! therefore be generated in parallel and still come out bit-identical.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::setup::SlitId;
use crate::theory::{TheoryError, WaveState};

/// Independent sample lanes used by the pipeline.
pub mod lane {
    pub const REPRESENTATION: u64 = 0;
    pub const COMBINATOR: u64 = 1;
    pub const ASSOCIATIVITY: u64 = 2;
    pub const ADDITIVITY: u64 = 3;
    pub const REGRADUATION: u64 = 4;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    /// Circular complex normal with E|z|² = σ².
    ComplexGaussian { sigma: f64 },
    /// Real coefficients uniform on `[lo, hi]`.
    RealUniform { lo: f64, hi: f64 },
    /// Coefficients drawn uniformly from a finite list of points.
    Grid { points: Vec<Complex64> },
}

impl Sampler {
    pub fn validate(&self) -> Result<(), TheoryError> {
        match self {
            Sampler::ComplexGaussian { sigma } => {
                if !(sigma.is_finite() && *sigma > 0.0) {
                    return Err(TheoryError::BadDistribution(format!(
                        "complex-gaussian needs a positive finite sigma, got {sigma}"
                    )));
                }
            }
            Sampler::RealUniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(TheoryError::BadDistribution(format!(
                        "real-uniform needs finite lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            Sampler::Grid { points } => {
                if points.is_empty() {
                    return Err(TheoryError::BadDistribution("grid has no points".into()));
                }
                if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
                    return Err(TheoryError::BadDistribution("grid points must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Sampler::ComplexGaussian { .. } => "complex_gaussian",
            Sampler::RealUniform { .. } => "real_uniform",
            Sampler::Grid { .. } => "grid",
        }
    }

    /// True when every draw is a real number.
    pub fn is_real(&self) -> bool {
        match self {
            Sampler::ComplexGaussian { .. } => false,
            Sampler::RealUniform { .. } => true,
            Sampler::Grid { points } => points.iter().all(|p| p.im == 0.0),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Complex64 {
        match self {
            Sampler::ComplexGaussian { sigma } => {
                let normal = Normal::new(0.0, sigma / std::f64::consts::SQRT_2)
                    .expect("sigma validated");
                Complex64::new(normal.sample(rng), normal.sample(rng))
            }
            Sampler::RealUniform { lo, hi } => {
                let u: f64 = rng.random();
                Complex64::new(lo + (hi - lo) * u, 0.0)
            }
            Sampler::Grid { points } => points[rng.random_range(0..points.len())],
        }
    }
}

/// The generator for sample `index` on `lane`.
pub fn stream_rng(seed: u64, lane: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((lane << 40) | (index & ((1 << 40) - 1)));
    rng
}

fn draw_state(rng: &mut ChaCha8Rng, slits: &[SlitId], dist: &Sampler) -> WaveState {
    WaveState::new(slits.iter().map(|id| (id.clone(), dist.draw(rng))))
}

/// A single state, deterministic in `(seed, slits, dist)`.
pub fn sample_wavestate(seed: u64, slits: &[SlitId], dist: &Sampler) -> Result<WaveState, TheoryError> {
    dist.validate()?;
    Ok(draw_state(&mut stream_rng(seed, 0, 0), slits, dist))
}

/// `n` states on `lane`. The result does not depend on how rayon splits the work.
pub fn sample_batch(
    seed: u64,
    lane: u64,
    slits: &[SlitId],
    dist: &Sampler,
    n: usize,
) -> Result<Vec<WaveState>, TheoryError> {
    dist.validate()?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| draw_state(&mut stream_rng(seed, lane, i), slits, dist))
        .collect())
}

/// `n` raw coefficient draws on `lane`.
pub fn sample_values(seed: u64, lane: u64, dist: &Sampler, n: usize) -> Result<Vec<Complex64>, TheoryError> {
    dist.validate()?;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| dist.draw(&mut stream_rng(seed, lane, i)))
        .collect())
}
