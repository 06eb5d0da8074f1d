//! Command-line surface: argument parsing and subcommand drivers.
//!
//! Exit codes: 0 success, 2 configuration error, 3 degeneracy error,
//! 4 capacity error, 1 anything else.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sumoss::seed::{step_sample_seed, RANDOM_PLANNER_STREAM};
use sumoss::{
    build_mesh_sample_set, build_sample_set, plan_baseline, plan_random, plan_sumoss,
    run_mission, CandidateSet, FirstSensor, MissionConfig, PlanState, PlannerKind, SampleMode,
};

use crate::config::RunConfigFile;
use crate::error::{CliError, CliResult};
use crate::experiments::{compare_methods, sensitivity_sweep, SweepSpec};
use crate::{io, verify};

#[derive(Debug, Parser)]
#[command(
    name = "sumoss",
    version,
    about = "Submodular drop-target planning under landing uncertainty",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the next drop target given the targets already planned.
    Plan(PlanArgs),
    /// Run one seeded mission and write its log.
    Simulate(CommonArgs),
    /// Run all methods over paired seeds and export the curves.
    Compare(CommonArgs),
    /// Sweep deviation weights (w1, w2) and tabulate the gaps.
    Sweep(CommonArgs),
    /// Run the built-in oracle suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML configuration; defaults apply for everything omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the mission (master) seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Planner method; repeatable where a method list is meaningful.
    #[arg(long)]
    pub method: Vec<String>,
    /// Override the Monte Carlo expectation sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Worker threads for compare and sweep (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// JSON state file with the target indices planned so far.
    #[arg(long)]
    pub state: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Reduced instance counts for a quick smoke run.
    #[arg(long)]
    pub small: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Prior targets accepted by `plan`.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStateFile {
    pub targets: Vec<usize>,
}

/// Next-target decision printed by `plan`.
#[derive(Debug, Serialize, Deserialize)]
pub struct PlanOutput {
    pub step: usize,
    pub method: PlannerKind,
    pub index: usize,
    pub target_x: f64,
    pub target_y: f64,
    /// Planner objective value; absent for the manual first sensor.
    pub gain: Option<f64>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Plan(args) => {
            init_threads(args.common.threads)?;
            run_plan(&args)
        }
        Command::Simulate(args) => {
            init_threads(args.threads)?;
            run_simulate(&args)
        }
        Command::Compare(args) => {
            init_threads(args.threads)?;
            run_compare(&args)
        }
        Command::Sweep(args) => {
            init_threads(args.threads)?;
            run_sweep(&args)
        }
        Command::Verify(args) => {
            init_threads(args.threads)?;
            run_verify(&args)
        }
    }
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn load_config(args: &CommonArgs) -> CliResult<RunConfigFile> {
    let mut file = match &args.config {
        Some(path) => RunConfigFile::load(path)?,
        None => RunConfigFile::default(),
    };
    if let Some(seed) = args.seed {
        file.mission.seed = seed;
    }
    if let Some(samples) = args.samples {
        file.planner.expectation_samples = samples;
    }
    Ok(file)
}

fn parse_methods(flags: &[String]) -> CliResult<Vec<PlannerKind>> {
    flags
        .iter()
        .map(|s| s.parse::<PlannerKind>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

fn single_method(args: &CommonArgs, config: &mut RunConfigFile) -> CliResult<()> {
    let methods = parse_methods(&args.method)?;
    match methods.len() {
        0 => Ok(()),
        1 => {
            config.planner.method = methods[0];
            Ok(())
        }
        _ => Err(CliError::Config("this subcommand takes at most one --method".into())),
    }
}

fn out_dir(args: &CommonArgs) -> CliResult<&Path> {
    std::fs::create_dir_all(&args.out).map_err(|e| {
        CliError::Other(format!("cannot create output directory {}: {e}", args.out.display()))
    })?;
    Ok(&args.out)
}

fn run_simulate(args: &CommonArgs) -> CliResult<()> {
    let mut file = load_config(args)?;
    single_method(args, &mut file)?;
    let config = file.mission_config()?;
    let log = run_mission(&config)?;

    let dir = out_dir(args)?;
    let path = dir.join("mission.jsonl");
    io::write_mission_log(&path, &log)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_compare(args: &CommonArgs) -> CliResult<()> {
    let file = load_config(args)?;
    let methods = match parse_methods(&args.method)? {
        m if m.is_empty() => {
            vec![PlannerKind::Baseline, PlannerKind::Random, PlannerKind::SumoSs]
        }
        m => m,
    };
    let base = file.mission_config()?;
    let seeds: Vec<u64> = (0..file.sweep.runs as u64).map(|i| base.seed + i).collect();
    let comparison = compare_methods(&base, &methods, &seeds)?;

    let dir = out_dir(args)?;
    let csv = dir.join("curves.csv");
    let json = dir.join("curves.json");
    io::write_curve_csv(&csv, &comparison)?;
    io::write_curve_json(&json, &comparison)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

fn run_sweep(args: &CommonArgs) -> CliResult<()> {
    let file = load_config(args)?;
    let methods = match parse_methods(&args.method)? {
        m if m.is_empty() => vec![PlannerKind::Baseline, PlannerKind::SumoSs],
        m => m,
    };
    let base = file.mission_config()?;
    let spec = SweepSpec {
        w1_values: file.sweep.w1_values.clone(),
        w2_values: file.sweep.w2_values.clone(),
        runs: file.sweep.runs,
        master_seed: base.seed,
        base,
        methods,
        checkpoints: file.sweep.checkpoints.clone(),
    };
    let result = sensitivity_sweep(&spec)?;

    let dir = out_dir(args)?;
    let csv = dir.join("sweep.csv");
    let json = dir.join("sweep.json");
    io::write_sweep_csv(&csv, &result)?;
    io::write_sweep_json(&json, &result)?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> CliResult<()> {
    let mut all_passed = true;
    for report in verify::run_all(args.small) {
        println!("{}", report.line());
        all_passed &= report.passed;
    }
    if all_passed {
        println!("all suites passed");
        Ok(())
    } else {
        Err(CliError::Other("one or more verification suites failed".into()))
    }
}

fn read_state(path: Option<&Path>) -> CliResult<PlanStateFile> {
    let Some(path) = path else { return Ok(PlanStateFile::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read state {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("bad state file {}: {e}", path.display())))
}

/// Compute the next target exactly as a mission at this step would.
pub fn next_target(config: &MissionConfig, prior_targets: &[usize]) -> CliResult<PlanOutput> {
    let candidates = CandidateSet::from_grid(&config.grid).map_err(CliError::from_setup)?;
    for &index in prior_targets {
        if index >= candidates.len() {
            return Err(CliError::Config(format!(
                "state target index {index} outside the {}-node grid",
                candidates.len()
            )));
        }
    }
    let state = PlanState::from_indices(prior_targets.to_vec())
        .map_err(|e| CliError::Config(e.to_string()))?;
    let step = prior_targets.len() + 1;

    if step == 1 {
        let index = match config.first_sensor {
            FirstSensor::Index(i) if i >= candidates.len() => {
                return Err(CliError::Config(format!(
                    "first sensor index {i} outside the {}-node grid",
                    candidates.len()
                )))
            }
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
        };
        let target = candidates.positions()[index];
        return Ok(PlanOutput {
            step,
            method: config.planner,
            index,
            target_x: target.x(),
            target_y: target.y(),
            gain: None,
        });
    }

    let selection = match config.planner {
        PlannerKind::Baseline => plan_baseline(&state, &candidates, &config.kernel)?,
        PlannerKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(RANDOM_PLANNER_STREAM);
            // A mission consumes one draw per planned step; burn the
            // draws of the prior steps so the pick matches a full run.
            for prior in 2..step {
                let free = candidates.len() - (prior - 1);
                let _ = rng.random_range(0..free);
            }
            plan_random(&state, &candidates, &config.kernel, &mut rng)?
        }
        PlannerKind::SumoSs => {
            let samples = match config.expectation_mode {
                SampleMode::Mesh => {
                    build_mesh_sample_set(candidates.positions(), &config.deviation)?
                }
                SampleMode::MonteCarlo => {
                    let salt = if config.sample_reuse { 0 } else { step };
                    build_sample_set(
                        candidates.positions(),
                        &config.deviation,
                        config.expectation_samples,
                        step_sample_seed(config.seed, salt),
                    )?
                }
            };
            plan_sumoss(&state, &candidates, &config.kernel, &samples, config.objective)?
        }
    };
    let target = candidates.positions()[selection.index];
    Ok(PlanOutput {
        step,
        method: config.planner,
        index: selection.index,
        target_x: target.x(),
        target_y: target.y(),
        gain: Some(selection.gain),
    })
}

fn run_plan(args: &PlanArgs) -> CliResult<()> {
    let mut file = load_config(&args.common)?;
    single_method(&args.common, &mut file)?;
    let config = file.mission_config()?;
    let state = read_state(args.state.as_deref())?;

    let output = next_target(&config, &state.targets)?;
    let line = serde_json::to_string(&output).map_err(|e| CliError::Other(e.to_string()))?;
    println!("{line}");
    Ok(())
}
