//! Submodular sensor placement under stochastic drop deviation.
//!
//! Sensors are scattered from a drone and land off-target; this crate
//! plans where to aim them so that the measured Gaussian-process field
//! is as informative as possible. It provides:
//!
//! * a GP field model with mutual-information objectives ([`gp`]),
//! * a distance-proportional landing deviation model ([`deviation`]),
//! * greedy planners, including the expectation-based SuMo-SS planner
//!   that scores candidates under joint landing perturbations
//!   ([`planner`]),
//! * a mission simulator with replayable logs ([`mission`]).
//!
//! The crate is `no_std` with `alloc`; all randomness is seeded ChaCha,
//! so every result is reproducible from one integer.
//!
//! ```
//! use sumoss::{
//!     build_sample_set, plan_sumoss, run_mission, Area, CandidateSet, DeviationModel,
//!     FirstSensor, GridLayout, GridSpec, KernelModel, MissionConfig, Objective, PlanState,
//!     PlannerKind, Position, SampleMode,
//! };
//!
//! let area = Area::new(Position::new(0.0, 0.0)?, 5.0, 5.0)?;
//! let grid = GridSpec::new(area, 5, 5, GridLayout::CellCenter)?;
//! let kernel = KernelModel::default();
//! let deviation = DeviationModel::new(0.3, 0.2, 0.01, Position::new(-3.0, 2.5)?)?;
//!
//! // one-shot: next target after sensors at grid nodes 12 and 7
//! let candidates = CandidateSet::from_grid(&grid)?;
//! let state = PlanState::from_indices(vec![12, 7])?;
//! let samples = build_sample_set(candidates.positions(), &deviation, 64, 1)?;
//! let next = plan_sumoss(&state, &candidates, &kernel, &samples, Objective::Log)?;
//! assert!(next.index < candidates.len());
//!
//! // full mission
//! let config = MissionConfig {
//!     grid,
//!     kernel,
//!     deviation,
//!     planner: PlannerKind::SumoSs,
//!     objective: Objective::Log,
//!     expectation_mode: SampleMode::MonteCarlo,
//!     expectation_samples: 64,
//!     sample_reuse: false,
//!     n_max: 6,
//!     seed: 7,
//!     first_sensor: FirstSensor::Center,
//! };
//! let log = run_mission(&config)?;
//! assert_eq!(log.steps.len(), 6);
//! # Ok::<(), sumoss::Error>(())
//! ```

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

mod error;
pub mod seed;

mod deviation;
mod geom;
mod gp;
mod mission;
mod planner;

pub use error::{Error, Result};

pub use geom::{Area, GridLayout, GridSpec, Position};

pub use gp::{
    build_cov, conditional_variance, delta_gain, kernel_cov, mi_exact, ConditionalSolver,
    CovMatrix, KernelModel,
};

pub use deviation::{
    build_mesh_sample_set, build_sample_set, sample_landing, sigma_dev, DeviationModel,
    DeviationSampleSet, SampleMode, DEFAULT_REGULARIZATION,
};

pub use planner::{
    plan_baseline, plan_random, plan_sumoss, sumoss_gain, sumoss_gain_terms, CandidateSet,
    Objective, PlanState, PlannerKind, Selection, MESH_MAX_SCATTERED,
};

pub use mission::{evaluate_log, run_mission, FirstSensor, MissionConfig, MissionLog, StepRecord};
