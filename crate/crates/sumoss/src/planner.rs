//! Target selection: exact-position greedy, expectation greedy, random.
//!
//! All planners are pure functions of the plan state (indices of already
//! chosen targets) and the candidate set; they never see where previous
//! drops actually landed. The expectation planner additionally takes a
//! prebuilt [`DeviationSampleSet`](crate::DeviationSampleSet) so that one
//! set of joint perturbations is shared by every candidate evaluation in
//! a step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::deviation::{DeviationSampleSet, SampleMode};
use crate::error::{Error, Result};
use crate::geom::{Area, GridSpec, Position};
use crate::gp::{ConditionalSolver, KernelModel};

/// Finite set of admissible target positions with its area bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    positions: Vec<Position>,
    area: Area,
}

impl CandidateSet {
    /// Positions must be pairwise distinct and at least two.
    pub fn new(positions: Vec<Position>, area: Area) -> Result<Self> {
        area.validate()?;
        if positions.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "candidate set needs at least 2 positions, got {}",
                positions.len()
            )));
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("candidate position".into()));
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if positions[i] == positions[j] {
                    return Err(Error::InvalidInput(format!(
                        "candidate positions {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self { positions, area })
    }

    pub fn from_grid(grid: &GridSpec) -> Result<Self> {
        grid.validate()?;
        Self::new(grid.nodes(), grid.area)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn area(&self) -> &Area {
        &self.area
    }
}

/// Indices of targets chosen so far, in drop order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlanState {
    chosen: Vec<usize>,
}

impl PlanState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indices(chosen: Vec<usize>) -> Result<Self> {
        let mut state = Self::new();
        for idx in chosen {
            state.push(idx)?;
        }
        Ok(state)
    }

    pub fn push(&mut self, index: usize) -> Result<()> {
        if self.chosen.contains(&index) {
            return Err(Error::InvalidInput(format!("target {index} already chosen")));
        }
        self.chosen.push(index);
        Ok(())
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    pub fn contains(&self, index: usize) -> bool {
        self.chosen.contains(&index)
    }

    /// Number of sensors placed so far.
    pub fn step(&self) -> usize {
        self.chosen.len()
    }

    /// Nominal positions of the chosen targets.
    pub fn targets(&self, candidates: &CandidateSet) -> Result<Vec<Position>> {
        self.chosen
            .iter()
            .map(|&i| {
                candidates.positions().get(i).copied().ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "chosen index {i} out of range for {} candidates",
                        candidates.len()
                    ))
                })
            })
            .collect()
    }
}

/// One planning decision: the chosen candidate index and the objective
/// value the planner believed it was worth.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Selection {
    pub index: usize,
    pub gain: f64,
}

/// Which planner drives a mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PlannerKind {
    #[cfg_attr(feature = "serde", serde(rename = "baseline"))]
    Baseline,
    #[cfg_attr(feature = "serde", serde(rename = "random"))]
    Random,
    #[cfg_attr(feature = "serde", serde(rename = "sumoss"))]
    SumoSs,
}

impl PlannerKind {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerKind::Baseline => "baseline",
            PlannerKind::Random => "random",
            PlannerKind::SumoSs => "sumoss",
        }
    }
}

impl core::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(PlannerKind::Baseline),
            "random" => Ok(PlannerKind::Random),
            "sumoss" => Ok(PlannerKind::SumoSs),
            other => Err(Error::InvalidInput(format!(
                "unknown planner '{other}' (expected baseline, random, or sumoss)"
            ))),
        }
    }
}

/// Form of the expectation objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Objective {
    /// Expected log variance ratio (expected MI gain).
    #[default]
    Log,
    /// Expected raw variance ratio.
    Ratio,
}

impl core::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log" => Ok(Objective::Log),
            "ratio" => Ok(Objective::Ratio),
            other => Err(Error::InvalidInput(format!(
                "unknown objective '{other}' (expected log or ratio)"
            ))),
        }
    }
}

/// Mesh expectations enumerate a cartesian product over perturbed
/// sensors; cap how many may be scattered before the product explodes.
pub const MESH_MAX_SCATTERED: usize = 2;

fn check_capacity(state: &PlanState, candidates: &CandidateSet) -> Result<()> {
    if 2 * state.step() > candidates.len() {
        return Err(Error::Capacity { chosen: state.step(), candidates: candidates.len() });
    }
    Ok(())
}

fn validate_state(state: &PlanState, candidates: &CandidateSet) -> Result<()> {
    if let Some(&bad) = state.chosen().iter().find(|&&i| i >= candidates.len()) {
        return Err(Error::InvalidInput(format!(
            "chosen index {bad} out of range for {} candidates",
            candidates.len()
        )));
    }
    Ok(())
}

fn free_indices(state: &PlanState, candidates: &CandidateSet) -> Vec<usize> {
    (0..candidates.len()).filter(|i| !state.contains(*i)).collect()
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if !(v > 0.0) {
        return Err(Error::DegenerateCovariance(format!("{what} underflow ({v:e})")));
    }
    Ok(v)
}

/// Greedy MI step assuming sensors land exactly on their targets.
///
/// Maximizes `0.5 ln( var(y | chosen) / var(y | rest) )` over free
/// candidates `y`, with the rest of the grid at nominal positions. Ties
/// resolve to the lowest candidate index.
pub fn plan_baseline(
    state: &PlanState,
    candidates: &CandidateSet,
    kernel: &KernelModel,
) -> Result<Selection> {
    validate_state(state, candidates)?;
    check_capacity(state, candidates)?;
    let free = free_indices(state, candidates);
    let chosen_positions = state.targets(candidates)?;
    let num_solver = ConditionalSolver::new(&chosen_positions, kernel)?;

    let mut best: Option<Selection> = None;
    for &y in &free {
        let target = candidates.positions()[y];
        let others: Vec<Position> =
            free.iter().filter(|&&i| i != y).map(|&i| candidates.positions()[i]).collect();
        let den_solver = ConditionalSolver::new(&others, kernel)?;
        let num = positive(num_solver.variance(&target), "conditional variance")?;
        let den = positive(den_solver.variance(&target), "conditional variance")?;
        let gain = 0.5 * libm::log(num / den);
        if best.map_or(true, |b| gain > b.gain) {
            best = Some(Selection { index: y, gain });
        }
    }
    best.ok_or_else(|| Error::InvalidInput("no free candidates left".into()))
}

/// Uniform random pick among free candidates.
///
/// Consumes exactly one draw from `rng`; the reported gain is the
/// exact-position MI gain of the picked candidate, for logging parity
/// with the other planners.
pub fn plan_random<R: Rng>(
    state: &PlanState,
    candidates: &CandidateSet,
    kernel: &KernelModel,
    rng: &mut R,
) -> Result<Selection> {
    validate_state(state, candidates)?;
    check_capacity(state, candidates)?;
    let free = free_indices(state, candidates);
    if free.is_empty() {
        return Err(Error::InvalidInput("no free candidates left".into()));
    }
    let y = free[rng.random_range(0..free.len())];
    let target = candidates.positions()[y];
    let chosen_positions = state.targets(candidates)?;
    let others: Vec<Position> =
        free.iter().filter(|&&i| i != y).map(|&i| candidates.positions()[i]).collect();
    let num = positive(
        ConditionalSolver::new(&chosen_positions, kernel)?.variance(&target),
        "conditional variance",
    )?;
    let den = positive(
        ConditionalSolver::new(&others, kernel)?.variance(&target),
        "conditional variance",
    )?;
    Ok(Selection { index: y, gain: 0.5 * libm::log(num / den) })
}

/// Prepared per-step context for expectation gain evaluations.
///
/// Factors every perturbed chosen-sensor configuration once; single
/// candidate evaluations then share those factors.
struct ExpectationContext<'a> {
    candidates: &'a CandidateSet,
    kernel: &'a KernelModel,
    samples: &'a DeviationSampleSet,
    free: Vec<usize>,
    /// `(config_weight, solver)` per joint chosen-sensor perturbation.
    /// Monte Carlo: one config per sample index, weight 1. Mesh: the
    /// cartesian product of per-sensor nodes with product weights.
    configs: Vec<(f64, ConditionalSolver)>,
    /// Monte Carlo pairs candidate sample `j` with config `j`; the mesh
    /// crosses every candidate node with every config.
    paired: bool,
}

impl<'a> ExpectationContext<'a> {
    fn new(
        state: &PlanState,
        candidates: &'a CandidateSet,
        kernel: &'a KernelModel,
        samples: &'a DeviationSampleSet,
    ) -> Result<Self> {
        validate_state(state, candidates)?;
        check_capacity(state, candidates)?;
        if samples.target_count() != candidates.len() {
            return Err(Error::InvalidInput(format!(
                "sample set covers {} targets but candidate set has {}",
                samples.target_count(),
                candidates.len()
            )));
        }
        let free = free_indices(state, candidates);
        let chosen = state.chosen();
        let chosen_positions = state.targets(candidates)?;

        let configs = match samples.mode() {
            SampleMode::MonteCarlo => {
                let m = samples.sample_count();
                let mut configs = Vec::with_capacity(m);
                for j in 0..m {
                    let perturbed: Vec<Position> = chosen
                        .iter()
                        .zip(&chosen_positions)
                        .map(|(&c, p)| {
                            let o = samples.offsets(c)[j];
                            p.offset(o[0], o[1])
                        })
                        .collect::<Result<_>>()?;
                    configs.push((1.0, ConditionalSolver::new(&perturbed, kernel)?));
                }
                configs
            }
            SampleMode::Mesh => {
                if chosen.len() > MESH_MAX_SCATTERED {
                    return Err(Error::InvalidInput(format!(
                        "mesh expectation supports at most {MESH_MAX_SCATTERED} scattered \
                         sensors, got {}",
                        chosen.len()
                    )));
                }
                let mut configs = Vec::new();
                let mut nodes = vec![0usize; chosen.len()];
                'product: loop {
                    let mut weight = 1.0;
                    let mut perturbed = Vec::with_capacity(chosen.len());
                    for (slot, (&c, p)) in chosen.iter().zip(&chosen_positions).enumerate() {
                        let o = samples.offsets(c)[nodes[slot]];
                        weight *= samples.weights(c)[nodes[slot]];
                        perturbed.push(p.offset(o[0], o[1])?);
                    }
                    configs.push((weight, ConditionalSolver::new(&perturbed, kernel)?));
                    let mut slot = 0;
                    loop {
                        if slot == chosen.len() {
                            break 'product;
                        }
                        nodes[slot] += 1;
                        if nodes[slot] < samples.offsets(chosen[slot]).len() {
                            break;
                        }
                        nodes[slot] = 0;
                        slot += 1;
                    }
                }
                configs
            }
        };

        Ok(Self {
            candidates,
            kernel,
            samples,
            free,
            configs,
            paired: samples.mode() == SampleMode::MonteCarlo,
        })
    }

    fn objective_term(objective: Objective, num: f64, den: f64) -> f64 {
        match objective {
            Objective::Log => 0.5 * libm::log(num / den),
            Objective::Ratio => num / den,
        }
    }

    /// Weighted expectation terms for one candidate, in a fixed order.
    fn for_each_term(
        &self,
        y: usize,
        objective: Objective,
        mut visit: impl FnMut(f64, f64),
    ) -> Result<()> {
        let nominal = self.candidates.positions()[y];
        let others: Vec<Position> = self
            .free
            .iter()
            .filter(|&&i| i != y)
            .map(|&i| self.candidates.positions()[i])
            .collect();
        let den_solver = ConditionalSolver::new(&others, self.kernel)?;
        let offsets = self.samples.candidate_offsets(y);
        let weights = self.samples.weights(y);
        if self.paired {
            for (j, (config_weight, num_solver)) in self.configs.iter().enumerate() {
                let perturbed = nominal.offset(offsets[j][0], offsets[j][1])?;
                let num = positive(num_solver.variance(&perturbed), "expectation numerator")?;
                let den = positive(den_solver.variance(&perturbed), "expectation denominator")?;
                visit(config_weight * weights[j], Self::objective_term(objective, num, den));
            }
        } else {
            for (k, offset) in offsets.iter().enumerate() {
                let perturbed = nominal.offset(offset[0], offset[1])?;
                let den = positive(den_solver.variance(&perturbed), "expectation denominator")?;
                for (config_weight, num_solver) in &self.configs {
                    let num = positive(num_solver.variance(&perturbed), "expectation numerator")?;
                    visit(config_weight * weights[k], Self::objective_term(objective, num, den));
                }
            }
        }
        Ok(())
    }

    fn gain(&self, y: usize, objective: Objective) -> Result<f64> {
        let mut acc = 0.0;
        self.for_each_term(y, objective, |w, term| acc += w * term)?;
        Ok(acc)
    }
}

/// Expectation greedy step over jointly perturbed sensor positions.
///
/// For each free candidate the objective averages, over the sample set,
/// the variance-ratio gain with the chosen sensors and the candidate at
/// perturbed positions and the unselected rest at nominal positions.
/// Ties resolve to the lowest candidate index. The function is pure:
/// randomness enters only through the prebuilt sample set.
pub fn plan_sumoss(
    state: &PlanState,
    candidates: &CandidateSet,
    kernel: &KernelModel,
    samples: &DeviationSampleSet,
    objective: Objective,
) -> Result<Selection> {
    let ctx = ExpectationContext::new(state, candidates, kernel, samples)?;
    let mut best: Option<Selection> = None;
    for &y in &ctx.free {
        let gain = ctx.gain(y, objective)?;
        if best.map_or(true, |b| gain > b.gain) {
            best = Some(Selection { index: y, gain });
        }
    }
    best.ok_or_else(|| Error::InvalidInput("no free candidates left".into()))
}

/// Expectation objective value of a single candidate, as used by
/// [`plan_sumoss`]. `candidate` must be free.
pub fn sumoss_gain(
    state: &PlanState,
    candidates: &CandidateSet,
    kernel: &KernelModel,
    samples: &DeviationSampleSet,
    objective: Objective,
    candidate: usize,
) -> Result<f64> {
    if candidate >= candidates.len() || state.contains(candidate) {
        return Err(Error::InvalidInput(format!("candidate {candidate} is not free")));
    }
    ExpectationContext::new(state, candidates, kernel, samples)?.gain(candidate, objective)
}

/// The individual `(weight, term)` pairs whose weighted sum is
/// [`sumoss_gain`], in accumulation order.
pub fn sumoss_gain_terms(
    state: &PlanState,
    candidates: &CandidateSet,
    kernel: &KernelModel,
    samples: &DeviationSampleSet,
    objective: Objective,
    candidate: usize,
) -> Result<Vec<(f64, f64)>> {
    if candidate >= candidates.len() || state.contains(candidate) {
        return Err(Error::InvalidInput(format!("candidate {candidate} is not free")));
    }
    let ctx = ExpectationContext::new(state, candidates, kernel, samples)?;
    let mut terms = Vec::new();
    ctx.for_each_term(candidate, objective, |w, term| terms.push((w, term)))?;
    Ok(terms)
}
