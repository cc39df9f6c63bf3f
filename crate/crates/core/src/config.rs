//! TOML experiment configuration.
//!
//! Quantities that have more than one customary unit carry the unit in the
//! key (`inr_threshold_db` or `inr_threshold_linear`, `intended_direction_deg`
//! or `intended_direction_rad`). Exactly one spelling may be given. Unknown
//! keys are rejected.
//!
//! [`Config::to_canonical_toml`] writes every quantity in linear units and
//! radians, so parsing its output reproduces the same [`Config`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::LognormalParams;
use crate::montecarlo::{InrModel, SweepAxis, SweepSpec};
use crate::scenario::{NodeDistribution, Scenario, ScenarioError, ScenarioParams};
use crate::selection::{ChannelMode, SelectionOptions};
use crate::units::{db_to_linear, deg_to_rad};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("TOML output: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("`{section}.{key}` is given in more than one unit")]
    Ambiguous { section: &'static str, key: &'static str },
    #[error("`{section}.{key}` is required")]
    Missing { section: &'static str, key: &'static str },
    #[error("override `{0}`: expected section.key=value")]
    OverrideSyntax(String),
    #[error("override `{0}`: no such key")]
    UnknownKey(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    num_candidates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    num_selected: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disk_radius_wavelengths: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intended_direction_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    intended_direction_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unintended_directions_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unintended_directions_rad: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inr_threshold_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inr_threshold_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_bs_thresholds_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_bs_thresholds_linear: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_snr_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_power_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    noise_power_linear: Option<f64>,
    /// Mean of the underlying Gaussian, nepers.
    #[serde(skip_serializing_if = "Option::is_none")]
    shadowing_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shadowing_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    node_distribution: Option<NodeDistribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSelection {
    #[serde(skip_serializing_if = "Option::is_none")]
    max_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel_mode: Option<ChannelMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    record_trials: Option<bool>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    axis: Option<SweepAxis>,
    /// Linear thresholds or whole-number counts.
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    /// Thresholds in dB; only for the `eta_thr` axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    values_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    runs_per_point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed_base: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clusters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inr_model: Option<InrModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ccdf_grid_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ccdf_grid_linear: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<OutputFormat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    average_realizations: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    #[serde(default)]
    selection: RawSelection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    /// Linear thresholds or counts.
    pub values: Vec<f64>,
    pub runs_per_point: usize,
    pub seed_base: u64,
    pub clusters: usize,
    pub inr_model: InrModel,
    /// Linear INR abscissae for CCDF sweeps.
    pub ccdf_grid: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub grid_points: usize,
    /// Realizations behind the Monte Carlo average beampattern.
    pub average_realizations: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: OutputFormat::Csv,
            grid_points: crate::beampattern::DEFAULT_GRID_POINTS,
            average_realizations: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub scenario: Scenario<f64>,
    pub selection: SelectionOptions,
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

fn one_of<V>(
    section: &'static str,
    key: &'static str,
    a: Option<V>,
    b: Option<V>,
) -> Result<Option<V>, ConfigError> {
    match (a, b) {
        (Some(_), Some(_)) => Err(ConfigError::Ambiguous { section, key }),
        (a, b) => Ok(a.or(b)),
    }
}

fn required<V>(section: &'static str, key: &'static str, v: Option<V>) -> Result<V, ConfigError> {
    v.ok_or(ConfigError::Missing { section, key })
}

fn db_list(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(db_to_linear).collect()
}

fn deg_list(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(deg_to_rad).collect()
}

impl RawScenario {
    fn resolve(self) -> Result<Scenario<f64>, ConfigError> {
        const S: &str = "scenario";
        let intended = one_of(
            S,
            "intended_direction",
            self.intended_direction_deg.map(deg_to_rad),
            self.intended_direction_rad,
        )?;
        let unintended = one_of(
            S,
            "unintended_directions",
            self.unintended_directions_deg.map(deg_list),
            self.unintended_directions_rad,
        )?;
        let threshold = one_of(
            S,
            "inr_threshold",
            self.inr_threshold_db.map(db_to_linear),
            self.inr_threshold_linear,
        )?;
        let per_bs = one_of(
            S,
            "per_bs_thresholds",
            self.per_bs_thresholds_db.map(db_list),
            self.per_bs_thresholds_linear,
        )?;
        let snr = one_of(
            S,
            "target_snr",
            self.target_snr_db.map(db_to_linear),
            self.target_snr_linear,
        )?;
        let noise = one_of(
            S,
            "noise_power",
            self.noise_power_db.map(db_to_linear),
            self.noise_power_linear,
        )?;
        let params = ScenarioParams {
            num_candidates: required(S, "num_candidates", self.num_candidates)?,
            num_selected: required(S, "num_selected", self.num_selected)?,
            group_size: required(S, "group_size", self.group_size)?,
            disk_radius: required(S, "disk_radius_wavelengths", self.disk_radius_wavelengths)?,
            intended_direction: intended.unwrap_or(0.0),
            unintended_directions: required(S, "unintended_directions_deg", unintended)?,
            inr_threshold: required(S, "inr_threshold_db", threshold)?,
            per_bs_thresholds: per_bs,
            target_snr: required(S, "target_snr_db", snr)?,
            noise_power: required(S, "noise_power_linear", noise)?,
            shadowing: LognormalParams::new(
                self.shadowing_mean.unwrap_or(0.0),
                self.shadowing_variance.unwrap_or(0.0),
            ),
            node_distribution: self.node_distribution.unwrap_or_default(),
            seed: self.seed.unwrap_or(0),
        };
        Ok(Scenario::new(params)?)
    }

    fn canonical(s: &Scenario<f64>) -> Self {
        Self {
            num_candidates: Some(s.num_candidates),
            num_selected: Some(s.num_selected),
            group_size: Some(s.group_size),
            disk_radius_wavelengths: Some(s.disk_radius),
            intended_direction_rad: Some(s.intended_direction),
            unintended_directions_rad: Some(s.unintended_directions.clone()),
            inr_threshold_linear: Some(s.inr_threshold),
            per_bs_thresholds_linear: s.per_bs_thresholds.clone(),
            target_snr_linear: Some(s.target_snr),
            noise_power_linear: Some(s.noise_power),
            shadowing_mean: Some(s.shadowing.mean),
            shadowing_variance: Some(s.shadowing.variance),
            node_distribution: Some(s.node_distribution),
            seed: Some(s.seed),
            ..Self::default()
        }
    }
}

impl RawSweep {
    fn resolve(self) -> Result<SweepConfig, ConfigError> {
        const S: &str = "sweep";
        let axis = required(S, "axis", self.axis)?;
        if self.values_db.is_some() && axis != SweepAxis::Threshold {
            return Err(ConfigError::Invalid(
                "sweep.values_db is only meaningful for the eta_thr axis".into(),
            ));
        }
        let values = required(S, "values", one_of(S, "values", self.values_db.map(db_list), self.values)?)?;
        let ccdf_grid = one_of(
            S,
            "ccdf_grid",
            self.ccdf_grid_db.map(db_list),
            self.ccdf_grid_linear,
        )?
        .unwrap_or_default();
        Ok(SweepConfig {
            axis,
            values,
            runs_per_point: self.runs_per_point.unwrap_or(1000),
            seed_base: self.seed_base.unwrap_or(0),
            clusters: self.clusters.unwrap_or(1),
            inr_model: self.inr_model.unwrap_or_default(),
            ccdf_grid,
        })
    }

    fn canonical(s: &SweepConfig) -> Self {
        Self {
            axis: Some(s.axis),
            values: Some(s.values.clone()),
            runs_per_point: Some(s.runs_per_point),
            seed_base: Some(s.seed_base),
            clusters: Some(s.clusters),
            inr_model: Some(s.inr_model),
            ccdf_grid_linear: if s.ccdf_grid.is_empty() {
                None
            } else {
                Some(s.ccdf_grid.clone())
            },
            ..Self::default()
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_toml_with_overrides::<&str>(text, &[])
    }

    /// Parses `text` after applying `section.key=value` overrides. Values are
    /// read as TOML literals, falling back to a plain string. Setting a key
    /// in one unit removes its spellings in other units.
    pub fn from_toml_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse()?;
        for o in overrides {
            apply_override(&mut table, o.as_ref())?;
        }
        let raw: RawConfig = table.try_into()?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        let scenario = raw.scenario.resolve()?;
        let defaults = SelectionOptions::default();
        let selection = SelectionOptions {
            max_trials: raw.selection.max_trials,
            channel_mode: raw.selection.channel_mode.unwrap_or(defaults.channel_mode),
            record_trials: raw.selection.record_trials.unwrap_or(defaults.record_trials),
        };
        let sweep = raw.sweep.map(RawSweep::resolve).transpose()?;
        let out_defaults = OutputConfig::default();
        let output = OutputConfig {
            format: raw.output.format.unwrap_or(out_defaults.format),
            grid_points: raw.output.grid_points.unwrap_or(out_defaults.grid_points),
            average_realizations: raw
                .output
                .average_realizations
                .unwrap_or(out_defaults.average_realizations),
        };
        if output.grid_points < 2 {
            return Err(ConfigError::Invalid("output.grid_points must be at least 2".into()));
        }
        Ok(Self {
            scenario,
            selection,
            sweep,
            output,
        })
    }

    /// Linear units and radians throughout.
    pub fn to_canonical_toml(&self) -> Result<String, ConfigError> {
        let raw = RawConfig {
            scenario: RawScenario::canonical(&self.scenario),
            selection: RawSelection {
                max_trials: self.selection.max_trials,
                channel_mode: Some(self.selection.channel_mode),
                record_trials: Some(self.selection.record_trials),
            },
            sweep: self.sweep.as_ref().map(RawSweep::canonical),
            output: RawOutput {
                format: Some(self.output.format),
                grid_points: Some(self.output.grid_points),
                average_realizations: Some(self.output.average_realizations),
            },
        };
        Ok(toml::to_string(&raw)?)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec<f64>, ConfigError> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or(ConfigError::Missing { section: "sweep", key: "axis" })?;
        let mut spec = SweepSpec::new(self.scenario.clone(), sweep.axis, sweep.values.clone());
        spec.runs_per_point = sweep.runs_per_point;
        spec.mode = self.selection.channel_mode;
        spec.seed_base = sweep.seed_base;
        spec.clusters = sweep.clusters;
        spec.max_trials = self.selection.max_trials;
        spec.inr_model = sweep.inr_model;
        Ok(spec)
    }
}

const UNIT_SUFFIXES: [&str; 4] = ["_db", "_linear", "_deg", "_rad"];

/// Keys accepted in each section; kept in step with the raw structs above.
fn known_keys(section: &str) -> Option<&'static [&'static str]> {
    match section {
        "scenario" => Some(&SCENARIO_KEYS),
        "selection" => Some(&SELECTION_KEYS),
        "sweep" => Some(&SWEEP_KEYS),
        "output" => Some(&OUTPUT_KEYS),
        _ => None,
    }
}

const SCENARIO_KEYS: [&str; 20] = [
    "num_candidates",
    "num_selected",
    "group_size",
    "disk_radius_wavelengths",
    "intended_direction_deg",
    "intended_direction_rad",
    "unintended_directions_deg",
    "unintended_directions_rad",
    "inr_threshold_db",
    "inr_threshold_linear",
    "per_bs_thresholds_db",
    "per_bs_thresholds_linear",
    "target_snr_db",
    "target_snr_linear",
    "noise_power_db",
    "noise_power_linear",
    "shadowing_mean",
    "shadowing_variance",
    "node_distribution",
    "seed",
];
const SELECTION_KEYS: [&str; 3] = ["max_trials", "channel_mode", "record_trials"];
const SWEEP_KEYS: [&str; 9] = [
    "axis",
    "values",
    "values_db",
    "runs_per_point",
    "seed_base",
    "clusters",
    "inr_model",
    "ccdf_grid_db",
    "ccdf_grid_linear",
];
const OUTPUT_KEYS: [&str; 3] = ["format", "grid_points", "average_realizations"];

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (path, value) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::OverrideSyntax(spec.into()))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| ConfigError::OverrideSyntax(spec.into()))?;
    let keys = known_keys(section).ok_or_else(|| ConfigError::UnknownKey(spec.into()))?;
    if !keys.contains(&key) {
        return Err(ConfigError::UnknownKey(spec.into()));
    }
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let sec = entry
        .as_table_mut()
        .ok_or_else(|| ConfigError::Invalid(format!("`{section}` is not a table")))?;
    if let Some(stem) = UNIT_SUFFIXES.iter().find_map(|s| key.strip_suffix(s)) {
        for s in UNIT_SUFFIXES {
            sec.remove(&format!("{stem}{s}"));
        }
    }
    if key == "values" || key == "values_db" {
        sec.remove("values");
        sec.remove("values_db");
    }
    sec.insert(key.to_string(), parsed);
    Ok(())
}
