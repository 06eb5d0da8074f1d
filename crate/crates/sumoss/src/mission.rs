//! Mission simulation: plan, drop, measure, repeat.
//!
//! A mission alternates planning (which sees only chosen target indices)
//! with stochastic drops (which land off-target per the deviation
//! model). The log records, per step, the believed planner gain and the
//! ground-truth MI increment evaluated at the actual landing positions,
//! so planner optimism is directly visible.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::deviation::{
    build_mesh_sample_set, build_sample_set, sample_landing, DeviationModel, DeviationSampleSet,
    SampleMode,
};
use crate::error::{Error, Result};
use crate::geom::{GridSpec, Position};
use crate::gp::{ConditionalSolver, KernelModel};
use crate::planner::{
    plan_baseline, plan_random, plan_sumoss, CandidateSet, Objective, PlanState, PlannerKind,
    Selection,
};
use crate::seed::{step_sample_seed, LANDING_STREAM, RANDOM_PLANNER_STREAM};

/// How the first, manually placed sensor is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FirstSensor {
    /// Candidate nearest the area centroid, lowest index on ties.
    #[default]
    Center,
    /// A fixed candidate index.
    Index(usize),
}

/// Everything needed to reproduce one mission.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MissionConfig {
    pub grid: GridSpec,
    pub kernel: KernelModel,
    pub deviation: DeviationModel,
    pub planner: PlannerKind,
    pub objective: Objective,
    pub expectation_mode: SampleMode,
    pub expectation_samples: usize,
    /// Reuse one sample set for the whole mission instead of drawing a
    /// fresh one per planning step.
    pub sample_reuse: bool,
    pub n_max: usize,
    pub seed: u64,
    pub first_sensor: FirstSensor,
}

impl MissionConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.kernel.validate()?;
        self.deviation.validate()?;
        let v = self.grid.len();
        if self.n_max < 1 {
            return Err(Error::InvalidInput("n_max must be at least 1".into()));
        }
        let cap = (v - 1) / 2;
        if self.n_max > cap {
            return Err(Error::InvalidInput(format!(
                "n_max {} exceeds the greedy capacity {} of a {}-candidate grid",
                self.n_max, cap, v
            )));
        }
        if self.expectation_samples < 1 {
            return Err(Error::InvalidInput("expectation_samples must be at least 1".into()));
        }
        if self.planner == PlannerKind::SumoSs
            && self.expectation_mode == SampleMode::Mesh
            && self.n_max > crate::planner::MESH_MAX_SCATTERED + 1
        {
            return Err(Error::InvalidInput(format!(
                "mesh expectation caps missions at n_max {}, got {}",
                crate::planner::MESH_MAX_SCATTERED + 1,
                self.n_max
            )));
        }
        if let FirstSensor::Index(i) = self.first_sensor {
            if i >= v {
                return Err(Error::InvalidInput(format!(
                    "first sensor index {i} out of range for {v} candidates"
                )));
            }
        }
        Ok(())
    }
}

/// One executed drop.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    /// 1-based drop number.
    pub step: usize,
    pub target_index: usize,
    pub target: Position,
    /// Where the sensor actually landed (after coincidence adjustment).
    pub landing: Position,
    /// Objective value the planner reported; `None` for the manual
    /// first sensor.
    pub planner_gain: Option<f64>,
    /// Ground-truth MI increment at the landing positions; zero for the
    /// first sensor.
    pub true_gain: f64,
    /// Running sum of true gains.
    pub mi_cumulative: f64,
    /// Landing coincided with an earlier sensor and was nudged.
    pub adjusted: bool,
}

/// Full record of a mission, sufficient for replay validation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MissionLog {
    pub config: MissionConfig,
    pub steps: Vec<StepRecord>,
}

impl MissionLog {
    /// Cumulative MI after each step.
    pub fn mi_curve(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.mi_cumulative).collect()
    }

    pub fn final_mi(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.mi_cumulative)
    }
}

/// Minimum separation below which two landings count as coincident.
const COINCIDENCE_EPS: f64 = 1e-9;
/// Eastward nudge applied to a coincident landing.
const COINCIDENCE_NUDGE: f64 = 1e-6;

fn resolve_coincidence(landing: Position, placed: &[Position]) -> Result<(Position, bool)> {
    let mut p = landing;
    let mut adjusted = false;
    while placed.iter().any(|q| p.distance(q) < COINCIDENCE_EPS) {
        p = p.offset(COINCIDENCE_NUDGE, 0.0)?;
        adjusted = true;
    }
    Ok((p, adjusted))
}

fn first_sensor_index(config: &MissionConfig, candidates: &CandidateSet) -> usize {
    match config.first_sensor {
        FirstSensor::Index(i) => i,
        FirstSensor::Center => {
            let centroid = candidates.area().centroid();
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, p) in candidates.positions().iter().enumerate() {
                let d = p.squared_distance(&centroid);
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            best
        }
    }
}

/// Ground-truth MI increment of a landing given sensors already placed.
///
/// Conditions the numerator on actual landing positions and the
/// denominator on the nominal positions of the still-unchosen grid.
fn true_increment(
    landing: &Position,
    placed: &[Position],
    state: &PlanState,
    exclude: usize,
    candidates: &CandidateSet,
    kernel: &KernelModel,
) -> Result<f64> {
    let others: Vec<Position> = (0..candidates.len())
        .filter(|&i| i != exclude && !state.contains(i))
        .map(|i| candidates.positions()[i])
        .collect();
    let num = ConditionalSolver::new(placed, kernel)?.variance(landing);
    let den = ConditionalSolver::new(&others, kernel)?.variance(landing);
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::DegenerateCovariance(format!(
            "ground-truth variance underflow at landing ({}, {})",
            landing.x(),
            landing.y()
        )));
    }
    Ok(0.5 * libm::log(num / den))
}

/// Run one mission and return its full log.
pub fn run_mission(config: &MissionConfig) -> Result<MissionLog> {
    config.validate()?;
    let candidates = CandidateSet::from_grid(&config.grid)?;

    let mut landing_rng = ChaCha8Rng::seed_from_u64(config.seed);
    landing_rng.set_stream(LANDING_STREAM);
    let mut random_rng = ChaCha8Rng::seed_from_u64(config.seed);
    random_rng.set_stream(RANDOM_PLANNER_STREAM);

    let mut state = PlanState::new();
    let mut placed: Vec<Position> = Vec::with_capacity(config.n_max);
    let mut steps: Vec<StepRecord> = Vec::with_capacity(config.n_max);
    let mut mi_cumulative = 0.0;
    let mut shared_samples: Option<DeviationSampleSet> = None;

    for step in 1..=config.n_max {
        let (target_index, planner_gain) = if step == 1 {
            (first_sensor_index(config, &candidates), None)
        } else {
            let selection: Selection = match config.planner {
                PlannerKind::Baseline => plan_baseline(&state, &candidates, &config.kernel)?,
                PlannerKind::Random => {
                    plan_random(&state, &candidates, &config.kernel, &mut random_rng)?
                }
                PlannerKind::SumoSs => {
                    let samples: &DeviationSampleSet = match config.expectation_mode {
                        SampleMode::Mesh => {
                            if shared_samples.is_none() {
                                shared_samples = Some(build_mesh_sample_set(
                                    candidates.positions(),
                                    &config.deviation,
                                )?);
                            }
                            shared_samples.as_ref().unwrap()
                        }
                        SampleMode::MonteCarlo if config.sample_reuse => {
                            if shared_samples.is_none() {
                                shared_samples = Some(build_sample_set(
                                    candidates.positions(),
                                    &config.deviation,
                                    config.expectation_samples,
                                    step_sample_seed(config.seed, 0),
                                )?);
                            }
                            shared_samples.as_ref().unwrap()
                        }
                        SampleMode::MonteCarlo => {
                            shared_samples = Some(build_sample_set(
                                candidates.positions(),
                                &config.deviation,
                                config.expectation_samples,
                                step_sample_seed(config.seed, step),
                            )?);
                            shared_samples.as_ref().unwrap()
                        }
                    };
                    plan_sumoss(&state, &candidates, &config.kernel, samples, config.objective)?
                }
            };
            (selection.index, Some(selection.gain))
        };

        let target = candidates.positions()[target_index];
        let raw_landing = sample_landing(&config.deviation, &target, &mut landing_rng)?;
        let (landing, adjusted) = resolve_coincidence(raw_landing, &placed)?;

        let true_gain = if step == 1 {
            0.0
        } else {
            true_increment(&landing, &placed, &state, target_index, &candidates, &config.kernel)?
        };
        mi_cumulative += true_gain;

        steps.push(StepRecord {
            step,
            target_index,
            target,
            landing,
            planner_gain,
            true_gain,
            mi_cumulative,
            adjusted,
        });
        state.push(target_index)?;
        placed.push(landing);
    }

    Ok(MissionLog { config: config.clone(), steps })
}

/// Replay a mission log and check it is self-consistent.
///
/// Recomputes every ground-truth increment from the recorded landings
/// under `kernel` and verifies the recorded cumulative MI within 1e-9.
/// Returns the recomputed cumulative curve.
pub fn evaluate_log(log: &MissionLog, kernel: &KernelModel) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-9;
    if log.steps.is_empty() {
        return Err(Error::Validation("log has no steps".into()));
    }
    let candidates = CandidateSet::from_grid(&log.config.grid)?;
    let mut state = PlanState::new();
    let mut placed: Vec<Position> = Vec::new();
    let mut curve = Vec::with_capacity(log.steps.len());
    let mut cumulative = 0.0;

    for (i, record) in log.steps.iter().enumerate() {
        if record.step != i + 1 {
            return Err(Error::Validation(format!(
                "step numbering broken at position {i}: found step {}",
                record.step
            )));
        }
        if record.target_index >= candidates.len() {
            return Err(Error::Validation(format!(
                "step {}: target index {} out of range",
                record.step, record.target_index
            )));
        }
        if state.contains(record.target_index) {
            return Err(Error::Validation(format!(
                "step {}: target index {} repeated",
                record.step, record.target_index
            )));
        }
        if candidates.positions()[record.target_index] != record.target {
            return Err(Error::Validation(format!(
                "step {}: recorded target does not match grid node {}",
                record.step, record.target_index
            )));
        }
        let increment = if record.step == 1 {
            0.0
        } else {
            true_increment(
                &record.landing,
                &placed,
                &state,
                record.target_index,
                &candidates,
                kernel,
            )?
        };
        if (increment - record.true_gain).abs() > TOL {
            return Err(Error::Validation(format!(
                "step {}: recorded gain {} but replay gives {}",
                record.step, record.true_gain, increment
            )));
        }
        cumulative += increment;
        if (cumulative - record.mi_cumulative).abs() > TOL {
            return Err(Error::Validation(format!(
                "step {}: recorded cumulative MI {} but replay gives {}",
                record.step, record.mi_cumulative, cumulative
            )));
        }
        curve.push(cumulative);
        state.push(record.target_index)?;
        placed.push(record.landing);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Area, GridLayout};

    fn pos(x: f64, y: f64) -> Position {
        Position::new(x, y).unwrap()
    }

    fn default_grid() -> GridSpec {
        let area = Area::new(pos(0.0, 0.0), 5.0, 5.0).unwrap();
        GridSpec::new(area, 5, 5, GridLayout::CellCenter).unwrap()
    }

    fn config(planner: PlannerKind, seed: u64) -> MissionConfig {
        MissionConfig {
            grid: default_grid(),
            kernel: KernelModel::default(),
            deviation: DeviationModel::new(0.3, 0.2, 0.01, pos(-3.0, 2.5)).unwrap(),
            planner,
            objective: Objective::Log,
            expectation_mode: SampleMode::MonteCarlo,
            expectation_samples: 16,
            sample_reuse: false,
            n_max: 5,
            seed,
            first_sensor: FirstSensor::Center,
        }
    }

    #[test]
    fn center_first_sensor_on_default_grid() {
        let cfg = config(PlannerKind::Baseline, 0);
        let log = run_mission(&cfg).unwrap();
        assert_eq!(log.steps[0].target_index, 12);
        assert_eq!(log.steps[0].planner_gain, None);
        assert_eq!(log.steps[0].true_gain, 0.0);
        assert_eq!(log.steps[0].mi_cumulative, 0.0);
    }

    #[test]
    fn explicit_first_sensor_honored_and_checked() {
        let mut cfg = config(PlannerKind::Baseline, 0);
        cfg.first_sensor = FirstSensor::Index(7);
        let log = run_mission(&cfg).unwrap();
        assert_eq!(log.steps[0].target_index, 7);
        cfg.first_sensor = FirstSensor::Index(25);
        assert!(run_mission(&cfg).is_err());
    }

    #[test]
    fn n_max_capped_below_half_the_grid() {
        let mut cfg = config(PlannerKind::Baseline, 0);
        cfg.n_max = 12;
        assert!(cfg.validate().is_ok());
        cfg.n_max = 13;
        assert!(cfg.validate().is_err());
        cfg.n_max = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missions_reproduce_bit_for_bit() {
        for planner in [PlannerKind::Baseline, PlannerKind::Random, PlannerKind::SumoSs] {
            let cfg = config(planner, 33);
            let a = run_mission(&cfg).unwrap();
            let b = run_mission(&cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn seeds_steer_landings() {
        let a = run_mission(&config(PlannerKind::Baseline, 1)).unwrap();
        let b = run_mission(&config(PlannerKind::Baseline, 2)).unwrap();
        assert_ne!(a.steps[0].landing, b.steps[0].landing);
    }

    #[test]
    fn logs_replay_clean_and_detect_tampering() {
        let cfg = config(PlannerKind::SumoSs, 5);
        let log = run_mission(&cfg).unwrap();
        let curve = evaluate_log(&log, &cfg.kernel).unwrap();
        assert_eq!(curve.len(), log.steps.len());
        for (c, s) in curve.iter().zip(&log.steps) {
            assert!((c - s.mi_cumulative).abs() <= 1e-9);
        }

        let mut tampered = log.clone();
        tampered.steps[3].mi_cumulative += 1e-3;
        assert!(matches!(
            evaluate_log(&tampered, &cfg.kernel),
            Err(Error::Validation(_))
        ));

        let mut reordered = log;
        reordered.steps[2].step = 9;
        assert!(evaluate_log(&reordered, &cfg.kernel).is_err());
    }

    #[test]
    fn cumulative_mi_is_the_sum_of_increments() {
        let log = run_mission(&config(PlannerKind::SumoSs, 8)).unwrap();
        let mut acc = 0.0;
        for s in &log.steps {
            acc += s.true_gain;
            assert!((acc - s.mi_cumulative).abs() < 1e-12);
        }
    }

    #[test]
    fn near_zero_deviation_lands_on_targets() {
        let mut cfg = config(PlannerKind::Baseline, 3);
        cfg.deviation = DeviationModel {
            w1: 0.0,
            w2: 0.0,
            gamma: 1e-12,
            loading: pos(-3.0, 2.5),
            regularization: 1e-6,
        };
        let log = run_mission(&cfg).unwrap();
        for s in &log.steps {
            // offsets are N(0, ~1e-6 I): 4 sigma = 4e-3 per axis
            assert!((s.landing.x() - s.target.x()).abs() < 4e-3);
            assert!((s.landing.y() - s.target.y()).abs() < 4e-3);
            assert!(!s.adjusted);
        }
    }

    #[test]
    fn landings_outside_the_area_are_retained() {
        let mut cfg = config(PlannerKind::Baseline, 1);
        cfg.deviation = DeviationModel::new(40.0, 40.0, 0.01, pos(-3.0, 2.5)).unwrap();
        let log = run_mission(&cfg).unwrap();
        let area = Area::new(pos(0.0, 0.0), 5.0, 5.0).unwrap();
        let escaped = log.steps.iter().any(|s| !area.contains(&s.landing));
        assert!(escaped);
        assert!(evaluate_log(&log, &cfg.kernel).is_ok());
    }

    #[test]
    fn sample_reuse_stays_deterministic() {
        let mut cfg = config(PlannerKind::SumoSs, 21);
        cfg.sample_reuse = true;
        let a = run_mission(&cfg).unwrap();
        let b = run_mission(&cfg).unwrap();
        assert_eq!(a, b);
        cfg.sample_reuse = false;
        let c = run_mission(&cfg).unwrap();
        // same seed, different sampling schedule
        assert_eq!(a.steps[0].target_index, c.steps[0].target_index);
    }

    #[test]
    fn mesh_mode_missions_run_within_their_cap() {
        let mut cfg = config(PlannerKind::SumoSs, 2);
        cfg.expectation_mode = SampleMode::Mesh;
        cfg.n_max = 3;
        let log = run_mission(&cfg).unwrap();
        assert_eq!(log.steps.len(), 3);
        cfg.n_max = 4;
        assert!(run_mission(&cfg).is_err());
    }

    #[test]
    fn degenerate_deviation_propagates() {
        let mut cfg = config(PlannerKind::Baseline, 0);
        cfg.deviation = DeviationModel {
            w1: 0.0,
            w2: 0.0,
            gamma: 0.01,
            loading: pos(-3.0, 2.5),
            regularization: 0.0,
        };
        assert!(matches!(run_mission(&cfg), Err(Error::DegenerateDeviation(_))));
    }
}
