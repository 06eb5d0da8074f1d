//! Batch drivers: paired method comparison and the (w1, w2)
//! sensitivity sweep.
//!
//! Both drivers run missions in parallel but reduce into deterministic
//! result structures: outputs depend only on configuration and seeds,
//! never on the worker schedule.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sumoss::seed::derive_seed;
use sumoss::{run_mission, MissionConfig, MissionLog, PlannerKind};

use crate::error::{CliError, CliResult};

/// One successful mission inside a comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodRun {
    pub seed: u64,
    pub log: MissionLog,
}

/// A mission that errored; the run is excluded from means and counted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFailure {
    pub seed: u64,
    pub error: String,
}

/// All runs of one method over the shared seed list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: PlannerKind,
    /// Pointwise mean of `mi_cumulative` over successful runs.
    pub mean_curve: Vec<f64>,
    pub runs: Vec<MethodRun>,
    pub failures: Vec<RunFailure>,
}

impl MethodOutcome {
    pub fn mean_final_mi(&self) -> f64 {
        self.mean_curve.last().copied().unwrap_or(f64::NAN)
    }
}

/// Output of [`compare_methods`]: per-method curves under paired seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub seeds: Vec<u64>,
    /// Sorted by method; duplicates in the request are collapsed.
    pub methods: Vec<MethodOutcome>,
}

impl Comparison {
    pub fn outcome(&self, method: PlannerKind) -> Option<&MethodOutcome> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Run every requested method over the same seed list (paired design:
/// for a given seed all methods consume identical landing-noise draws)
/// and average the resulting information curves.
///
/// Mission failures are recorded per run and excluded from the mean.
/// The method list is deduplicated and sorted, so reordering it cannot
/// change any emitted number.
pub fn compare_methods(
    base: &MissionConfig,
    methods: &[PlannerKind],
    seeds: &[u64],
) -> CliResult<Comparison> {
    if seeds.is_empty() {
        return Err(CliError::Config("comparison needs at least one seed".into()));
    }
    if methods.is_empty() {
        return Err(CliError::Config("comparison needs at least one method".into()));
    }
    let methods: Vec<PlannerKind> = methods.iter().copied().collect::<BTreeSet<_>>()
        .into_iter().collect();

    let jobs: Vec<(PlannerKind, u64)> = methods
        .iter()
        .flat_map(|&m| seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results: Vec<Result<MissionLog, String>> = jobs
        .par_iter()
        .map(|&(method, seed)| {
            let config = MissionConfig { planner: method, seed, ..base.clone() };
            run_mission(&config).map_err(|e| e.to_string())
        })
        .collect();

    let mut outcomes = Vec::with_capacity(methods.len());
    for (m_idx, &method) in methods.iter().enumerate() {
        let mut runs = Vec::new();
        let mut failures = Vec::new();
        for (s_idx, &seed) in seeds.iter().enumerate() {
            match &results[m_idx * seeds.len() + s_idx] {
                Ok(log) => runs.push(MethodRun { seed, log: log.clone() }),
                Err(error) => failures.push(RunFailure { seed, error: error.clone() }),
            }
        }
        outcomes.push(MethodOutcome {
            method,
            mean_curve: mean_curve(runs.iter().map(|r| &r.log)),
            runs,
            failures,
        });
    }
    Ok(Comparison { seeds: seeds.to_vec(), methods: outcomes })
}

fn mean_curve<'a>(logs: impl Iterator<Item = &'a MissionLog>) -> Vec<f64> {
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for log in logs {
        let curve = log.mi_curve();
        if sum.is_empty() {
            sum = vec![0.0; curve.len()];
        }
        for (slot, v) in sum.iter_mut().zip(curve) {
            *slot += v;
        }
        count += 1;
    }
    if count > 0 {
        for slot in &mut sum {
            *slot /= count as f64;
        }
    }
    sum
}

/// Full description of a sensitivity sweep over deviation weights.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub w1_values: Vec<f64>,
    pub w2_values: Vec<f64>,
    /// Missions per method in every cell.
    pub runs: usize,
    pub base: MissionConfig,
    /// Must contain the proposed and baseline methods.
    pub methods: Vec<PlannerKind>,
    /// Drop counts n at which mean MI and Δ_n are tabulated.
    pub checkpoints: Vec<usize>,
    pub master_seed: u64,
}

impl SweepSpec {
    /// Canonical form: value lists and checkpoints sorted ascending and
    /// deduplicated, methods sorted, all invariants checked.
    pub fn validate(&mut self) -> CliResult<()> {
        if self.runs == 0 {
            return Err(CliError::Config("sweep.runs must be at least 1".into()));
        }
        for (name, values) in [("w1_values", &mut self.w1_values), ("w2_values", &mut self.w2_values)] {
            if values.is_empty() {
                return Err(CliError::Config(format!("sweep.{name} must be nonempty")));
            }
            if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(CliError::Config(format!(
                    "sweep.{name} entries must be finite and nonnegative"
                )));
            }
            values.sort_by(f64::total_cmp);
            values.dedup();
        }
        self.checkpoints.sort_unstable();
        self.checkpoints.dedup();
        if self.checkpoints.is_empty() {
            return Err(CliError::Config("sweep.checkpoints must be nonempty".into()));
        }
        if self.checkpoints[0] < 1 || *self.checkpoints.last().unwrap() > self.base.n_max {
            return Err(CliError::Config(format!(
                "sweep checkpoints must lie in [1, n_max = {}]",
                self.base.n_max
            )));
        }
        let methods: BTreeSet<PlannerKind> = self.methods.iter().copied().collect();
        if !methods.contains(&PlannerKind::SumoSs) || !methods.contains(&PlannerKind::Baseline) {
            return Err(CliError::Config(
                "sweep methods must include sumoss and baseline".into(),
            ));
        }
        self.methods = methods.into_iter().collect();
        Ok(())
    }

    /// Runs attempted over the whole sweep: |w1|·|w2|·runs·|methods|.
    pub fn total_runs(&self) -> usize {
        self.w1_values.len() * self.w2_values.len() * self.runs * self.methods.len()
    }
}

/// Mission seed for run `run` of cell `(w1, w2)`.
///
/// A stable chain of seed derivations keyed on the exact bit patterns
/// of the weights: adding or removing cells, runs, or methods never
/// shifts the seeds of the remaining cells.
pub fn cell_seed(master: u64, w1: f64, w2: f64, run: usize) -> u64 {
    derive_seed(derive_seed(derive_seed(master, w1.to_bits()), w2.to_bits()), run as u64)
}

/// Per-method mean MI(A_n) at one checkpoint of one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodMean {
    pub method: PlannerKind,
    pub mean_mi: f64,
}

/// One tabulated checkpoint of one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellCheckpoint {
    pub n: usize,
    /// Ordered by method.
    pub means: Vec<MethodMean>,
    /// Proposed-minus-baseline gap, Δ_n.
    pub delta: f64,
}

/// A mission that errored inside a sweep cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub method: PlannerKind,
    pub seed: u64,
    pub error: String,
}

/// Aggregates for one (w1, w2) cell.
///
/// Means are taken over the seeds for which every method succeeded, so
/// Δ_n always compares identical noise draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub w1: f64,
    pub w2: f64,
    pub seeds: Vec<u64>,
    /// Seeds where all methods completed.
    pub completed_runs: usize,
    pub incomplete: bool,
    pub failures: Vec<CellFailure>,
    pub checkpoints: Vec<CellCheckpoint>,
}

impl SweepCell {
    pub fn checkpoint(&self, n: usize) -> Option<&CellCheckpoint> {
        self.checkpoints.iter().find(|c| c.n == n)
    }

    pub fn mean_for(&self, n: usize, method: PlannerKind) -> Option<f64> {
        self.checkpoint(n)?
            .means
            .iter()
            .find(|m| m.method == method)
            .map(|m| m.mean_mi)
    }

    pub fn delta(&self, n: usize) -> Option<f64> {
        self.checkpoint(n).map(|c| c.delta)
    }
}

/// Output of [`sensitivity_sweep`]; cells ordered by (w1, w2).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub checkpoints: Vec<usize>,
    pub runs_attempted: usize,
    pub runs_completed: usize,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    /// Number of cells whose Δ at checkpoint `n` is strictly positive.
    pub fn positive_delta_cells(&self, n: usize) -> usize {
        self.cells.iter().filter(|c| c.delta(n).is_some_and(|d| d > 0.0)).count()
    }
}

/// Run both methods over every (w1, w2) cell with paired per-cell seed
/// lists and tabulate mean MI and Δ_n at the requested checkpoints.
///
/// Cells are independent parallel work items; the reduction is keyed by
/// cell, so any worker schedule produces the identical `SweepResult`.
pub fn sensitivity_sweep(spec: &SweepSpec) -> CliResult<SweepResult> {
    let mut spec = spec.clone();
    spec.validate()?;

    struct Job {
        cell: usize,
        method: PlannerKind,
        seed: u64,
    }

    let cells_wh: Vec<(f64, f64)> = spec
        .w1_values
        .iter()
        .flat_map(|&w1| spec.w2_values.iter().map(move |&w2| (w1, w2)))
        .collect();
    let mut jobs = Vec::with_capacity(cells_wh.len() * spec.methods.len() * spec.runs);
    for (cell, &(w1, w2)) in cells_wh.iter().enumerate() {
        for &method in &spec.methods {
            for run in 0..spec.runs {
                jobs.push(Job { cell, method, seed: cell_seed(spec.master_seed, w1, w2, run) });
            }
        }
    }

    let results: Vec<Result<MissionLog, String>> = jobs
        .par_iter()
        .map(|job| {
            let (w1, w2) = cells_wh[job.cell];
            let mut config = MissionConfig {
                planner: job.method,
                seed: job.seed,
                ..spec.base.clone()
            };
            config.deviation.w1 = w1;
            config.deviation.w2 = w2;
            run_mission(&config).map_err(|e| e.to_string())
        })
        .collect();

    let mut cells = Vec::with_capacity(cells_wh.len());
    let mut runs_completed = 0usize;
    let per_cell = spec.methods.len() * spec.runs;
    for (cell, &(w1, w2)) in cells_wh.iter().enumerate() {
        let block = &results[cell * per_cell..(cell + 1) * per_cell];
        let seeds: Vec<u64> =
            (0..spec.runs).map(|run| cell_seed(spec.master_seed, w1, w2, run)).collect();

        let mut failures = Vec::new();
        // Runs where every method succeeded; means stay paired.
        let mut paired: Vec<usize> = (0..spec.runs).collect();
        for (m_idx, &method) in spec.methods.iter().enumerate() {
            for run in 0..spec.runs {
                match &block[m_idx * spec.runs + run] {
                    Ok(_) => runs_completed += 1,
                    Err(error) => {
                        failures.push(CellFailure {
                            method,
                            seed: seeds[run],
                            error: error.clone(),
                        });
                        paired.retain(|&r| r != run);
                    }
                }
            }
        }

        let mut checkpoints = Vec::with_capacity(spec.checkpoints.len());
        for &n in &spec.checkpoints {
            let mut means = Vec::with_capacity(spec.methods.len());
            for (m_idx, &method) in spec.methods.iter().enumerate() {
                let mut sum = 0.0;
                for &run in &paired {
                    let log = block[m_idx * spec.runs + run]
                        .as_ref()
                        .expect("paired runs all succeeded");
                    sum += log.steps[n - 1].mi_cumulative;
                }
                let mean_mi =
                    if paired.is_empty() { f64::NAN } else { sum / paired.len() as f64 };
                means.push(MethodMean { method, mean_mi });
            }
            let get = |kind: PlannerKind| {
                means.iter().find(|m| m.method == kind).map(|m| m.mean_mi).unwrap_or(f64::NAN)
            };
            let delta = get(PlannerKind::SumoSs) - get(PlannerKind::Baseline);
            checkpoints.push(CellCheckpoint { n, means, delta });
        }

        cells.push(SweepCell {
            w1,
            w2,
            seeds,
            completed_runs: paired.len(),
            incomplete: !failures.is_empty(),
            failures,
            checkpoints,
        });
    }

    Ok(SweepResult {
        checkpoints: spec.checkpoints.clone(),
        runs_attempted: spec.total_runs(),
        runs_completed,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sumoss::{
        Area, DeviationModel, FirstSensor, GridLayout, GridSpec, KernelModel, Objective,
        Position, SampleMode,
    };

    fn pos(x: f64, y: f64) -> Position {
        Position::new(x, y).unwrap()
    }

    fn base_config() -> MissionConfig {
        let area = Area::new(pos(0.0, 0.0), 5.0, 5.0).unwrap();
        MissionConfig {
            grid: GridSpec::new(area, 4, 4, GridLayout::CellCenter).unwrap(),
            kernel: KernelModel::default(),
            deviation: DeviationModel::new(0.3, 0.2, 0.01, pos(-3.0, 2.5)).unwrap(),
            planner: PlannerKind::SumoSs,
            objective: Objective::Log,
            expectation_mode: SampleMode::MonteCarlo,
            expectation_samples: 16,
            sample_reuse: false,
            n_max: 5,
            seed: 0,
            first_sensor: FirstSensor::Center,
        }
    }

    #[test]
    fn single_run_mean_equals_that_run() {
        let cmp = compare_methods(&base_config(), &[PlannerKind::Baseline], &[9]).unwrap();
        let outcome = cmp.outcome(PlannerKind::Baseline).unwrap();
        assert_eq!(outcome.runs.len(), 1);
        assert_eq!(outcome.failures.len(), 0);
        assert_eq!(outcome.mean_curve, outcome.runs[0].log.mi_curve());
    }

    #[test]
    fn method_order_does_not_change_results() {
        let base = base_config();
        let seeds = [1, 2, 3];
        let a = compare_methods(
            &base,
            &[PlannerKind::SumoSs, PlannerKind::Baseline, PlannerKind::Random],
            &seeds,
        )
        .unwrap();
        let b = compare_methods(
            &base,
            &[PlannerKind::Random, PlannerKind::SumoSs, PlannerKind::Baseline,
              PlannerKind::Random],
            &seeds,
        )
        .unwrap();
        let curves = |c: &Comparison| -> Vec<(PlannerKind, Vec<f64>)> {
            c.methods.iter().map(|m| (m.method, m.mean_curve.clone())).collect()
        };
        assert_eq!(curves(&a), curves(&b));
    }

    #[test]
    fn degenerate_sweep_is_the_difference_of_two_runs() {
        let base = base_config();
        let mut spec = SweepSpec {
            w1_values: vec![0.3],
            w2_values: vec![0.2],
            runs: 1,
            base: base.clone(),
            methods: vec![PlannerKind::SumoSs, PlannerKind::Baseline],
            checkpoints: vec![2, 5],
            master_seed: 77,
        };
        let result = sensitivity_sweep(&spec).unwrap();
        assert_eq!(result.cells.len(), 1);
        assert_eq!(result.runs_attempted, 2);
        assert_eq!(result.runs_completed, 2);

        spec.validate().unwrap();
        let seed = cell_seed(77, 0.3, 0.2, 0);
        let run = |method: PlannerKind| {
            let mut config = MissionConfig { planner: method, seed, ..base.clone() };
            config.deviation.w1 = 0.3;
            config.deviation.w2 = 0.2;
            run_mission(&config).unwrap()
        };
        let proposed = run(PlannerKind::SumoSs);
        let baseline = run(PlannerKind::Baseline);
        let cell = &result.cells[0];
        for &n in &[2usize, 5] {
            let expect = proposed.steps[n - 1].mi_cumulative - baseline.steps[n - 1].mi_cumulative;
            assert_eq!(cell.delta(n).unwrap(), expect);
        }
    }

    #[test]
    fn sweep_reruns_are_identical_and_deltas_reconstruct() {
        let spec = SweepSpec {
            w1_values: vec![0.2, 0.4],
            w2_values: vec![0.3],
            runs: 2,
            base: base_config(),
            methods: vec![PlannerKind::Baseline, PlannerKind::SumoSs],
            checkpoints: vec![3],
            master_seed: 5,
        };
        let a = sensitivity_sweep(&spec).unwrap();
        let b = sensitivity_sweep(&spec).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
        for cell in &a.cells {
            let c = &cell.checkpoints[0];
            let prop = cell.mean_for(c.n, PlannerKind::SumoSs).unwrap();
            let base = cell.mean_for(c.n, PlannerKind::Baseline).unwrap();
            assert!((c.delta - (prop - base)).abs() <= 1e-12);
        }
    }

    #[test]
    fn adding_cells_preserves_existing_seeds() {
        let small = SweepSpec {
            w1_values: vec![0.25],
            w2_values: vec![0.3],
            runs: 2,
            base: base_config(),
            methods: vec![PlannerKind::Baseline, PlannerKind::SumoSs],
            checkpoints: vec![3],
            master_seed: 11,
        };
        let grown = SweepSpec {
            w1_values: vec![0.2, 0.25],
            w2_values: vec![0.3, 0.45],
            ..small.clone()
        };
        let a = sensitivity_sweep(&small).unwrap();
        let b = sensitivity_sweep(&grown).unwrap();
        let shared =
            b.cells.iter().find(|c| c.w1 == 0.25 && c.w2 == 0.3).unwrap();
        assert_eq!(a.cells[0].seeds, shared.seeds);
        assert_eq!(
            a.cells[0].checkpoints[0].delta,
            shared.checkpoints[0].delta,
        );
        assert_ne!(cell_seed(11, 0.25, 0.3, 0), cell_seed(11, 0.3, 0.25, 0));
        assert_ne!(cell_seed(11, 0.25, 0.3, 0), cell_seed(12, 0.25, 0.3, 0));
    }

    #[test]
    fn sweep_requires_both_core_methods() {
        let mut spec = SweepSpec {
            w1_values: vec![0.2],
            w2_values: vec![0.2],
            runs: 1,
            base: base_config(),
            methods: vec![PlannerKind::SumoSs],
            checkpoints: vec![3],
            master_seed: 0,
        };
        assert!(spec.validate().is_err());
        spec.methods = vec![PlannerKind::SumoSs, PlannerKind::Baseline];
        assert!(spec.validate().is_ok());
    }
}
