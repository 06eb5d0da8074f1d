//! Bit-stable file formats: curve and sweep CSVs, their JSON mirrors,
//! and the line-delimited mission log.
//!
//! Every emitted byte is a pure function of configuration and seeds —
//! no timestamps, no locale, no map iteration order. CSV floats carry
//! 10 significant digits; the JSON mirrors and mission logs keep full
//! binary precision so logs replay exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sumoss::{MissionConfig, MissionLog, StepRecord};

use crate::error::{CliError, CliResult};
use crate::experiments::{Comparison, SweepResult};

/// Exact header of the per-step comparison CSV.
pub const CURVE_HEADER: [&str; 10] = [
    "method",
    "seed",
    "n",
    "target_x",
    "target_y",
    "landing_x",
    "landing_y",
    "planner_gain",
    "true_gain",
    "mi_cumulative",
];

/// Exact header of the sensitivity-sweep CSV.
pub const SWEEP_HEADER: [&str; 7] =
    ["w1", "w2", "n", "mean_mi_proposed", "mean_mi_baseline", "delta_n", "runs"];

/// Decimal with 10 significant digits, scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.9e}")
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let file = File::create(path)
        .map_err(|e| CliError::Other(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Write one comparison as CurveCSV; rows ordered (method, seed, n).
pub fn write_curve_csv(path: &Path, comparison: &Comparison) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    writer.write_record(CURVE_HEADER).map_err(|e| CliError::Other(e.to_string()))?;
    for outcome in &comparison.methods {
        for run in &outcome.runs {
            for step in &run.log.steps {
                let gain = step.planner_gain.map(fmt_float).unwrap_or_default();
                writer
                    .write_record([
                        outcome.method.name().to_string(),
                        run.seed.to_string(),
                        step.step.to_string(),
                        fmt_float(step.target.x()),
                        fmt_float(step.target.y()),
                        fmt_float(step.landing.x()),
                        fmt_float(step.landing.y()),
                        gain,
                        fmt_float(step.true_gain),
                        fmt_float(step.mi_cumulative),
                    ])
                    .map_err(|e| CliError::Other(e.to_string()))?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// JSON mirror of the comparison: the CSV rows plus per-method means
/// and recorded failures, at full float precision.
pub fn write_curve_json(path: &Path, comparison: &Comparison) -> CliResult<()> {
    let mut writer = create(path)?;
    serde_json::to_writer_pretty(&mut writer, comparison)
        .map_err(|e| CliError::Other(e.to_string()))?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// Write a sweep as SweepCSV; rows ordered (w1, w2, n).
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(create(path)?);
    writer.write_record(SWEEP_HEADER).map_err(|e| CliError::Other(e.to_string()))?;
    for cell in &result.cells {
        for checkpoint in &cell.checkpoints {
            let get = |name: &str| {
                checkpoint
                    .means
                    .iter()
                    .find(|m| m.method.name() == name)
                    .map(|m| m.mean_mi)
                    .unwrap_or(f64::NAN)
            };
            writer
                .write_record([
                    fmt_float(cell.w1),
                    fmt_float(cell.w2),
                    checkpoint.n.to_string(),
                    fmt_float(get("sumoss")),
                    fmt_float(get("baseline")),
                    fmt_float(checkpoint.delta),
                    cell.completed_runs.to_string(),
                ])
                .map_err(|e| CliError::Other(e.to_string()))?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepJsonCheckpoint<'a> {
    n: usize,
    mean_mi: BTreeMap<&'a str, f64>,
    delta: f64,
    /// 1 = largest Δ at this checkpoint across all cells.
    delta_rank: usize,
}

#[derive(Serialize)]
struct SweepJsonCell<'a> {
    w1: f64,
    w2: f64,
    seeds: &'a [u64],
    completed_runs: usize,
    incomplete: bool,
    failures: &'a [crate::experiments::CellFailure],
    checkpoints: Vec<SweepJsonCheckpoint<'a>>,
}

#[derive(Serialize)]
struct SweepJson<'a> {
    checkpoints: &'a [usize],
    runs_attempted: usize,
    runs_completed: usize,
    cells: Vec<SweepJsonCell<'a>>,
}

/// JSON mirror of the sweep. Each cell checkpoint additionally carries
/// its Δ rank among all cells (1 = best), replacing the color
/// highlighting of a printed table.
pub fn write_sweep_json(path: &Path, result: &SweepResult) -> CliResult<()> {
    // Rank per checkpoint: descending delta, ties by cell order.
    let mut rank: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &n in &result.checkpoints {
        let mut order: Vec<usize> = (0..result.cells.len()).collect();
        order.sort_by(|&a, &b| {
            let da = result.cells[a].delta(n).unwrap_or(f64::NEG_INFINITY);
            let db = result.cells[b].delta(n).unwrap_or(f64::NEG_INFINITY);
            db.total_cmp(&da).then(a.cmp(&b))
        });
        for (r, &cell) in order.iter().enumerate() {
            rank.insert((n, cell), r + 1);
        }
    }

    let cells = result
        .cells
        .iter()
        .enumerate()
        .map(|(idx, cell)| SweepJsonCell {
            w1: cell.w1,
            w2: cell.w2,
            seeds: &cell.seeds,
            completed_runs: cell.completed_runs,
            incomplete: cell.incomplete,
            failures: &cell.failures,
            checkpoints: cell
                .checkpoints
                .iter()
                .map(|c| SweepJsonCheckpoint {
                    n: c.n,
                    mean_mi: c.means.iter().map(|m| (m.method.name(), m.mean_mi)).collect(),
                    delta: c.delta,
                    delta_rank: rank[&(c.n, idx)],
                })
                .collect(),
        })
        .collect();
    let doc = SweepJson {
        checkpoints: &result.checkpoints,
        runs_attempted: result.runs_attempted,
        runs_completed: result.runs_completed,
        cells,
    };

    let mut writer = create(path)?;
    serde_json::to_writer_pretty(&mut writer, &doc).map_err(|e| CliError::Other(e.to_string()))?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

/// One line of a mission log file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    /// First line: the configuration and totals.
    Summary {
        config: MissionConfig,
        n_steps: usize,
        final_mi: f64,
    },
    /// One line per executed drop, in step order.
    Step(StepRecord),
}

/// Serialize a mission log: a summary line followed by one line per step.
pub fn write_mission_log(path: &Path, log: &MissionLog) -> CliResult<()> {
    let mut writer = create(path)?;
    let summary = LogRecord::Summary {
        config: log.config.clone(),
        n_steps: log.steps.len(),
        final_mi: log.final_mi(),
    };
    let mut line = serde_json::to_string(&summary).map_err(|e| CliError::Other(e.to_string()))?;
    line.push('\n');
    writer.write_all(line.as_bytes())?;
    for step in &log.steps {
        let mut line = serde_json::to_string(&LogRecord::Step(*step))
            .map_err(|e| CliError::Other(e.to_string()))?;
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

/// Parse a mission log file back, checking internal consistency.
pub fn read_mission_log(path: &Path) -> CliResult<MissionLog> {
    let file = File::open(path)
        .map_err(|e| CliError::Other(format!("cannot open {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();

    let first = lines
        .next()
        .ok_or_else(|| CliError::Other("empty mission log".into()))?
        .map_err(CliError::from)?;
    let (config, n_steps, final_mi) = match parse_record(&first, 1)? {
        LogRecord::Summary { config, n_steps, final_mi } => (config, n_steps, final_mi),
        LogRecord::Step(_) => {
            return Err(CliError::Other("mission log must start with a summary record".into()))
        }
    };

    let mut steps: Vec<StepRecord> = Vec::with_capacity(n_steps);
    for (idx, line) in lines.enumerate() {
        let line = line.map_err(CliError::from)?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line, idx + 2)? {
            LogRecord::Step(step) => {
                if step.step != steps.len() + 1 {
                    return Err(CliError::Other(format!(
                        "mission log step {} out of order at line {}",
                        step.step,
                        idx + 2
                    )));
                }
                steps.push(step);
            }
            LogRecord::Summary { .. } => {
                return Err(CliError::Other(format!(
                    "unexpected second summary record at line {}",
                    idx + 2
                )))
            }
        }
    }

    if steps.len() != n_steps {
        return Err(CliError::Other(format!(
            "mission log promises {n_steps} steps but carries {}",
            steps.len()
        )));
    }
    let log = MissionLog { config, steps };
    if log.final_mi() != final_mi {
        return Err(CliError::Other(
            "mission log summary final_mi disagrees with the step records".into(),
        ));
    }
    Ok(log)
}

fn parse_record(line: &str, line_no: usize) -> CliResult<LogRecord> {
    serde_json::from_str(line)
        .map_err(|e| CliError::Other(format!("bad mission log record at line {line_no}: {e}")))
}
