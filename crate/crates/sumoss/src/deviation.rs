//! Stochastic drop deviation model.
//!
//! A sensor dropped at target position `t` lands at `t + e`, where `e`
//! is zero-mean Gaussian with covariance growing linearly in the flight
//! distance `d` from the loading position:
//!
//! ```text
//! Sigma_dev(d) = [ w1 d + gamma      gamma      ]
//!                [     gamma     w2 d + gamma   ]   (+ rho I)
//! ```
//!
//! The raw matrix is singular at `d = 0` (and whenever a weight is
//! zero), so a small regularization `rho` is added to the diagonal by
//! default; setting `rho = 0` disables it and degenerate distances
//! become hard errors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, Matrix2, U2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geom::Position;

/// Default diagonal regularization for the deviation covariance.
pub const DEFAULT_REGULARIZATION: f64 = 1e-6;

/// Distance-proportional landing deviation covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviationModel {
    /// Variance growth per meter of flight distance, x axis.
    pub w1: f64,
    /// Variance growth per meter of flight distance, y axis.
    pub w2: f64,
    /// Distance-independent covariance floor, also the x/y coupling.
    pub gamma: f64,
    /// Position the drone departs from on every drop.
    pub loading: Position,
    /// Diagonal lift `rho`; zero disables regularization.
    pub regularization: f64,
}

impl DeviationModel {
    pub fn new(w1: f64, w2: f64, gamma: f64, loading: Position) -> Result<Self> {
        let model = Self { w1, w2, gamma, loading, regularization: DEFAULT_REGULARIZATION };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let params = [self.w1, self.w2, self.gamma, self.regularization];
        if params.iter().any(|v| !v.is_finite()) || !self.loading.is_finite() {
            return Err(Error::NonFinite("deviation parameters".into()));
        }
        if self.w1 < 0.0 || self.w2 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "deviation weights must be nonnegative, got ({}, {})",
                self.w1, self.w2
            )));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "gamma must be strictly positive, got {}",
                self.gamma
            )));
        }
        if self.regularization < 0.0 {
            return Err(Error::InvalidInput(format!(
                "regularization must be nonnegative, got {}",
                self.regularization
            )));
        }
        Ok(())
    }
}

/// Landing covariance for a drop aimed at `target`.
///
/// Errors when the matrix is not positive definite, which with
/// regularization disabled happens at zero flight distance or zero
/// deviation weights.
pub fn sigma_dev(model: &DeviationModel, target: &Position) -> Result<Matrix2<f64>> {
    model.validate()?;
    let d = model.loading.distance(target);
    let rho = model.regularization;
    let m = Matrix2::new(
        model.w1 * d + model.gamma + rho,
        model.gamma,
        model.gamma,
        model.w2 * d + model.gamma + rho,
    );
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    if !(m[(0, 0)] > 0.0 && det > 0.0) {
        return Err(Error::DegenerateDeviation(format!(
            "singular landing covariance at distance {d} (det = {det:e}); \
             enable regularization or keep targets off the loading position"
        )));
    }
    Ok(m)
}

fn deviation_factor(model: &DeviationModel, target: &Position) -> Result<Cholesky<f64, U2>> {
    let m = sigma_dev(model, target)?;
    Cholesky::new(m).ok_or_else(|| {
        Error::DegenerateDeviation("landing covariance lost positive definiteness".into())
    })
}

/// Draw one landing position for a drop aimed at `target`.
///
/// Consumes exactly two standard normal draws (x then y) from `rng`.
pub fn sample_landing<R: Rng>(
    model: &DeviationModel,
    target: &Position,
    rng: &mut R,
) -> Result<Position> {
    let l = deviation_factor(model, target)?;
    let lm = l.l_dirty();
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    let ex = lm[(0, 0)] * z0;
    let ey = lm[(1, 0)] * z0 + lm[(1, 1)] * z1;
    target.offset(ex, ey)
}

/// How the expectation over landing deviations is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SampleMode {
    /// Antithetic Monte Carlo draws, equal weights.
    #[default]
    MonteCarlo,
    /// Deterministic 5x5 Gauss-Hermite tensor mesh per target.
    Mesh,
}

/// Per-target landing offset samples with expectation weights.
///
/// Offsets for sample index `j` are drawn jointly: when several targets
/// are perturbed in one expectation term, each takes its own column-`j`
/// offset, so the same underlying draws are reused across candidate
/// evaluations (common random numbers).
///
/// The candidate slot gets its own table: one shared column of standard
/// normal draws pushed through every target's covariance factor, so two
/// candidates at equal flight distance are perturbed identically and
/// their gains differ only through position, never draw luck.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSampleSet {
    offsets: Vec<Vec<[f64; 2]>>,
    candidate_offsets: Vec<Vec<[f64; 2]>>,
    weights: Vec<Vec<f64>>,
    mode: SampleMode,
    seed: u64,
}

impl DeviationSampleSet {
    pub fn target_count(&self) -> usize {
        self.offsets.len()
    }

    /// Samples per target; identical for every target.
    pub fn sample_count(&self) -> usize {
        self.offsets.first().map_or(0, Vec::len)
    }

    /// Offsets for `target` in its role as an already-scattered sensor.
    pub fn offsets(&self, target: usize) -> &[[f64; 2]] {
        &self.offsets[target]
    }

    /// Offsets for `target` in its role as the candidate under
    /// evaluation; common random numbers across candidates.
    pub fn candidate_offsets(&self, target: usize) -> &[[f64; 2]] {
        &self.candidate_offsets[target]
    }

    pub fn weights(&self, target: usize) -> &[f64] {
        &self.weights[target]
    }

    pub fn mode(&self) -> SampleMode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Antithetic standard normal pairs; odd counts lead with exact zero.
fn normal_column(rng: &mut ChaCha8Rng, count: usize) -> Vec<[f64; 2]> {
    let mut column = Vec::with_capacity(count);
    if count % 2 == 1 {
        column.push([0.0, 0.0]);
    }
    while column.len() < count {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        column.push([z0, z1]);
        column.push([-z0, -z1]);
    }
    column
}

fn scale_column(lm: &Matrix2<f64>, z: &[[f64; 2]]) -> Vec<[f64; 2]> {
    z.iter()
        .map(|&[z0, z1]| [lm[(0, 0)] * z0, lm[(1, 0)] * z0 + lm[(1, 1)] * z1])
        .collect()
}

/// Draw antithetic Monte Carlo landing offsets for every target.
///
/// Scattered-sensor offsets give each target its own ChaCha stream of
/// the given seed, so joint perturbations are independent across
/// sensors while the whole set is a pure function of `(targets, model,
/// samples_per_target, seed)`. Candidate-role offsets instead push one
/// extra shared stream of draws through every target's covariance
/// factor (common random numbers across candidates). Offsets come in
/// `(e, -e)` pairs, which pins the sample mean at exactly zero; with an
/// odd count the first offset is exactly zero, so `samples_per_target =
/// 1` degenerates to planning at the targets themselves.
pub fn build_sample_set(
    targets: &[Position],
    model: &DeviationModel,
    samples_per_target: usize,
    seed: u64,
) -> Result<DeviationSampleSet> {
    if samples_per_target == 0 {
        return Err(Error::InvalidInput("samples_per_target must be at least 1".into()));
    }
    if targets.is_empty() {
        return Err(Error::InvalidInput("sample set over empty target list".into()));
    }
    let mut factors = Vec::with_capacity(targets.len());
    for target in targets {
        factors.push(*deviation_factor(model, target)?.l_dirty());
    }
    let mut shared_rng = ChaCha8Rng::seed_from_u64(seed);
    shared_rng.set_stream(targets.len() as u64);
    let shared = normal_column(&mut shared_rng, samples_per_target);

    let mut offsets = Vec::with_capacity(targets.len());
    let mut candidate_offsets = Vec::with_capacity(targets.len());
    for (t, lm) in factors.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let z = normal_column(&mut rng, samples_per_target);
        offsets.push(scale_column(lm, &z));
        candidate_offsets.push(scale_column(lm, &shared));
    }
    let weight = 1.0 / samples_per_target as f64;
    let weights = vec![vec![weight; samples_per_target]; targets.len()];
    Ok(DeviationSampleSet {
        offsets,
        candidate_offsets,
        weights,
        mode: SampleMode::MonteCarlo,
        seed,
    })
}

/// Probabilists' Gauss-Hermite nodes and weights, 5 points per axis.
const GH_NODES: [f64; 5] = [
    -2.8569700138728056,
    -1.3556261799742657,
    0.0,
    1.3556261799742657,
    2.8569700138728056,
];
const GH_WEIGHTS: [f64; 5] = [
    0.011257411327720693,
    0.2220759220056126,
    0.5333333333333333,
    0.2220759220056126,
    0.011257411327720693,
];

/// Deterministic per-target mesh alternative to Monte Carlo sampling.
///
/// Each target gets the 25 offsets of a 5x5 tensor Gauss-Hermite rule
/// pushed through its landing covariance factor, with product weights
/// summing to one. Joint expectations take the cartesian product of the
/// per-target meshes, so planners cap the number of perturbed sensors
/// when this mode is active.
pub fn build_mesh_sample_set(
    targets: &[Position],
    model: &DeviationModel,
) -> Result<DeviationSampleSet> {
    if targets.is_empty() {
        return Err(Error::InvalidInput("sample set over empty target list".into()));
    }
    let mut offsets = Vec::with_capacity(targets.len());
    let mut weights = Vec::with_capacity(targets.len());
    for target in targets {
        let l = deviation_factor(model, target)?;
        let lm = *l.l_dirty();
        let mut column = Vec::with_capacity(25);
        let mut column_w = Vec::with_capacity(25);
        for (i, &zx) in GH_NODES.iter().enumerate() {
            for (j, &zy) in GH_NODES.iter().enumerate() {
                let ex = lm[(0, 0)] * zx;
                let ey = lm[(1, 0)] * zx + lm[(1, 1)] * zy;
                column.push([ex, ey]);
                column_w.push(GH_WEIGHTS[i] * GH_WEIGHTS[j]);
            }
        }
        offsets.push(column);
        weights.push(column_w);
    }
    // the tensor nodes already share one standard-normal mesh across
    // targets, so the candidate table is the same by construction
    let candidate_offsets = offsets.clone();
    Ok(DeviationSampleSet {
        offsets,
        candidate_offsets,
        weights,
        mode: SampleMode::Mesh,
        seed: 0,
    })
}
