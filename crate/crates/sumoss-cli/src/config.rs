//! Strict TOML configuration shared by every subcommand.
//!
//! Each section and key is optional and falls back to the default
//! experimental setup (5×5 cell-center grid in a 5×5 m area, φ = 1.5 m,
//! deviation weights (0.3, 0.2), 12 drops, 10-run sweeps over w ∈
//! [0.2, 0.5]). Unknown keys are rejected with the offending key and
//! line reported, so provenance of every artifact stays unambiguous.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sumoss::{
    Area, DeviationModel, FirstSensor, GridLayout, GridSpec, KernelModel, MissionConfig,
    Objective, PlannerKind, Position, SampleMode, DEFAULT_REGULARIZATION,
};

use crate::error::{CliError, CliResult};

/// Offset of the default loading position from the area origin, meters.
pub const DEFAULT_LOADING_OFFSET: [f64; 2] = [-3.0, 2.5];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfigFile {
    pub area: AreaSection,
    pub kernel: KernelSection,
    pub deviation: DeviationSection,
    pub planner: PlannerSection,
    pub mission: MissionSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AreaSection {
    /// Lower-left corner, meters.
    pub origin: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub rows: usize,
    pub cols: usize,
    pub layout: GridLayout,
}

impl Default for AreaSection {
    fn default() -> Self {
        Self {
            origin: [0.0, 0.0],
            width: 5.0,
            height: 5.0,
            rows: 5,
            cols: 5,
            layout: GridLayout::CellCenter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub phi: f64,
    pub jitter: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        let k = KernelModel::default();
        Self { phi: k.phi, jitter: k.jitter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationSection {
    pub w1: f64,
    pub w2: f64,
    pub gamma: f64,
    pub regularization: f64,
    /// Absolute coordinates; defaults to origin + (-3.0, 2.5).
    pub loading_pos: Option<[f64; 2]>,
}

impl Default for DeviationSection {
    fn default() -> Self {
        Self {
            w1: 0.3,
            w2: 0.2,
            gamma: 0.01,
            regularization: DEFAULT_REGULARIZATION,
            loading_pos: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerSection {
    pub method: PlannerKind,
    pub objective: Objective,
    pub expectation_samples: usize,
    pub expectation_mode: SampleMode,
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            method: PlannerKind::SumoSs,
            objective: Objective::Log,
            expectation_samples: 128,
            expectation_mode: SampleMode::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MissionSection {
    pub n_max: usize,
    pub seed: u64,
    pub first_sensor: FirstSensorConfig,
    pub sample_reuse: bool,
}

impl Default for MissionSection {
    fn default() -> Self {
        Self {
            n_max: 12,
            seed: 0,
            first_sensor: FirstSensorConfig::default(),
            sample_reuse: false,
        }
    }
}

/// `first_sensor = "center"` or an explicit candidate index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FirstSensorConfig {
    Index(usize),
    Keyword(String),
}

impl Default for FirstSensorConfig {
    fn default() -> Self {
        FirstSensorConfig::Keyword("center".into())
    }
}

impl FirstSensorConfig {
    fn resolve(&self) -> CliResult<FirstSensor> {
        match self {
            FirstSensorConfig::Index(i) => Ok(FirstSensor::Index(*i)),
            FirstSensorConfig::Keyword(k) if k == "center" => Ok(FirstSensor::Center),
            FirstSensorConfig::Keyword(k) => Err(CliError::Config(format!(
                "mission.first_sensor must be \"center\" or a candidate index, got \"{k}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub w1_values: Vec<f64>,
    pub w2_values: Vec<f64>,
    /// Missions per method in each sweep cell, and the number of paired
    /// seeds used by `compare`.
    pub runs: usize,
    pub checkpoints: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let values = vec![0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5];
        Self {
            w1_values: values.clone(),
            w2_values: values,
            runs: 10,
            checkpoints: vec![3, 6, 9, 12],
        }
    }
}

impl RunConfigFile {
    /// Parse from TOML text, rejecting unknown keys with the offending
    /// key and line in the message.
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn loading_position(&self) -> CliResult<Position> {
        let [x, y] = self.deviation.loading_pos.unwrap_or([
            self.area.origin[0] + DEFAULT_LOADING_OFFSET[0],
            self.area.origin[1] + DEFAULT_LOADING_OFFSET[1],
        ]);
        Position::new(x, y).map_err(CliError::from_setup)
    }

    pub fn grid(&self) -> CliResult<GridSpec> {
        let origin =
            Position::new(self.area.origin[0], self.area.origin[1]).map_err(CliError::from_setup)?;
        let area =
            Area::new(origin, self.area.width, self.area.height).map_err(CliError::from_setup)?;
        GridSpec::new(area, self.area.rows, self.area.cols, self.area.layout)
            .map_err(CliError::from_setup)
    }

    pub fn kernel(&self) -> KernelModel {
        KernelModel { phi: self.kernel.phi, jitter: self.kernel.jitter, ..KernelModel::default() }
    }

    pub fn deviation_model(&self) -> CliResult<DeviationModel> {
        let mut model =
            DeviationModel::new(self.deviation.w1, self.deviation.w2, self.deviation.gamma,
                self.loading_position()?)
            .map_err(CliError::from_setup)?;
        model.regularization = self.deviation.regularization;
        model.validate().map_err(CliError::from_setup)?;
        Ok(model)
    }

    /// Assemble and validate the full mission configuration.
    pub fn mission_config(&self) -> CliResult<MissionConfig> {
        let config = MissionConfig {
            grid: self.grid()?,
            kernel: self.kernel(),
            deviation: self.deviation_model()?,
            planner: self.planner.method,
            objective: self.planner.objective,
            expectation_mode: self.planner.expectation_mode,
            expectation_samples: self.planner.expectation_samples,
            sample_reuse: self.mission.sample_reuse,
            n_max: self.mission.n_max,
            seed: self.mission.seed,
            first_sensor: self.mission.first_sensor.resolve()?,
        };
        config.validate().map_err(CliError::from_setup)?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_setup() {
        let config = RunConfigFile::parse("").unwrap();
        assert_eq!(config, RunConfigFile::default());
        let mission = config.mission_config().unwrap();
        assert_eq!(mission.n_max, 12);
        assert_eq!(mission.planner, PlannerKind::SumoSs);
        assert_eq!(mission.grid.len(), 25);
        assert_eq!(mission.deviation.loading.x(), -3.0);
        assert_eq!(mission.deviation.loading.y(), 2.5);
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_key_name() {
        let err = RunConfigFile::parse("[mission]\nn_maxx = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_maxx"), "diagnostic should name the key: {msg}");
        assert!(msg.contains("line 2") || msg.contains(" 2,"), "diagnostic should locate it: {msg}");
    }

    #[test]
    fn sections_round_trip_through_toml() {
        let text = r#"
[area]
origin = [1.0, -1.0]
width = 4.0
height = 6.0
rows = 4
cols = 3
layout = "edge_inclusive"

[kernel]
phi = 2.0

[deviation]
w1 = 0.4
loading_pos = [0.0, 0.0]

[planner]
method = "baseline"
objective = "ratio"
expectation_mode = "mesh"

[mission]
n_max = 5
seed = 11
first_sensor = 3
sample_reuse = true

[sweep]
w1_values = [0.2, 0.3]
w2_values = [0.25]
runs = 2
checkpoints = [2, 5]
"#;
        let config = RunConfigFile::parse(text).unwrap();
        let reparsed = RunConfigFile::parse(&toml::to_string(&config).unwrap()).unwrap();
        assert_eq!(config, reparsed);

        let mission = config.mission_config().unwrap();
        assert_eq!(mission.grid.len(), 12);
        assert_eq!(mission.planner, PlannerKind::Baseline);
        assert_eq!(mission.objective, Objective::Ratio);
        assert_eq!(mission.expectation_mode, SampleMode::Mesh);
        assert_eq!(mission.first_sensor, FirstSensor::Index(3));
        assert!(mission.sample_reuse);
        assert_eq!(mission.deviation.loading.x(), 0.0);
    }

    #[test]
    fn invalid_physical_parameters_are_config_errors() {
        let config = RunConfigFile::parse("[deviation]\ngamma = 0.0\n").unwrap();
        let err = config.mission_config().unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);

        let config = RunConfigFile::parse("[mission]\nn_max = 13\n").unwrap();
        let err = config.mission_config().unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn bad_first_sensor_keyword_is_rejected() {
        let config = RunConfigFile::parse("[mission]\nfirst_sensor = \"corner\"\n").unwrap();
        let err = config.mission_config().unwrap_err();
        assert!(err.to_string().contains("corner"));
    }
}
