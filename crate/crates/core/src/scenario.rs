//! TOML scenario files.
//!
//! A scenario file mirrors [`Scenario`] section by section; see
//! `scenarios/paper-defaults.toml` for a complete example. Unknown keys are
//! rejected, and the timing plan is always derived from the cell side and
//! speed with [`derive_timing`] rather than written out by hand.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{NtlSpec, PhasePolicy, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{GridConfig, Point2D};
use crate::localization::{NtlProfile, TdoaErrorModel, FINE_CNT_LIMIT_NEVER};
use crate::mobility::{MobilityConfig, SensorErrorModel};
use crate::planner::derive_timing;
use crate::radio::ReceptionModel;

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub master_seed: u64,
    pub target_samples: u64,
    pub grid: GridSection,
    pub radio: RadioSection,
    pub timing: TimingSection,
    pub mobility: MobilitySection,
    pub tdoa: TdoaSection,
    pub sensors: SensorSection,
    pub ntl: Vec<NtlSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub rows: usize,
    pub cols: usize,
    pub cell_side_m: f64,
    #[serde(default)]
    pub origin_m: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadioModelName {
    IdealDisk,
    BernoulliDisk,
    DistanceDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub model: RadioModelName,
    pub range_m: f64,
    #[serde(default)]
    pub reliable_radius_m: Option<f64>,
    #[serde(default)]
    pub loss_prob: Option<f64>,
    #[serde(default = "default_phases")]
    pub beacon_phases: PhasePolicy,
}

fn default_phases() -> PhasePolicy {
    PhasePolicy::Random
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    pub max_speed_mps: f64,
    pub granularity: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilitySection {
    pub stride_min_m: f64,
    pub stride_max_m: f64,
    pub segment_steps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdoaSection {
    pub qmin_m: f64,
    pub qmax_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    pub stride_accuracy: f64,
    pub detect_accuracy: f64,
    pub heading_error_deg: f64,
}

impl From<SensorSection> for SensorErrorModel {
    fn from(s: SensorSection) -> Self {
        SensorErrorModel {
            stride_accuracy: s.stride_accuracy,
            detect_accuracy: s.detect_accuracy,
            heading_error_deg: s.heading_error_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NtlSection {
    pub label: String,
    pub coarse_grained: bool,
    pub fine_grained: bool,
    pub self_localize: bool,
    #[serde(default)]
    pub fine_cnt_limit: Option<u32>,
    #[serde(default)]
    pub sensors: Option<SensorSection>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

impl RadioSection {
    fn to_model(&self) -> Result<ReceptionModel> {
        let model = match self.model {
            RadioModelName::IdealDisk => ReceptionModel::IdealDisk { range_m: self.range_m },
            RadioModelName::BernoulliDisk => ReceptionModel::BernoulliDisk {
                range_m: self.range_m,
                loss_prob: self
                    .loss_prob
                    .ok_or_else(|| schema("radio.loss_prob is required for model `bernoulli_disk`"))?,
            },
            RadioModelName::DistanceDecay => ReceptionModel::DistanceDecay {
                reliable_radius_m: self.reliable_radius_m.ok_or_else(|| {
                    schema("radio.reliable_radius_m is required for model `distance_decay`")
                })?,
                range_m: self.range_m,
            },
        };
        model.validate().map_err(|e| schema(format!("radio: {e}")))?;
        Ok(model)
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| schema(e.to_string()))?;
        if file.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(schema(format!(
                "schema_version {} unsupported (expected {SCENARIO_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The same scenario on a lattice of side `cell_side` with radio range
    /// `range`; the timing plan follows when converted.
    pub fn with_geometry(&self, cell_side: f64, range: f64) -> Self {
        let mut out = self.clone();
        out.grid.cell_side_m = cell_side;
        out.radio.range_m = range;
        out
    }

    /// Keeps only the coarse-grained NTLs.
    pub fn coarse_only(&self) -> Self {
        let mut out = self.clone();
        out.ntl.retain(|n| !n.fine_grained && !n.self_localize);
        out
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let g = &self.grid;
        let grid = GridConfig::new(g.rows, g.cols, g.cell_side_m, Point2D::new(g.origin_m[0], g.origin_m[1]))
            .map_err(|e| schema(format!("grid: {e}")))?;
        let reception = self.radio.to_model()?;
        let t = &self.timing;
        let timing = derive_timing(grid.cell_side, t.max_speed_mps, t.granularity, t.threshold)
            .map_err(|e| schema(format!("timing: {e}")))?;
        if self.ntl.is_empty() {
            return Err(schema("at least one [[ntl]] entry is required"));
        }
        let ntls = self
            .ntl
            .iter()
            .map(|n| {
                let base = NtlProfile::coarse(&timing);
                let profile = NtlProfile {
                    coarse_grained: n.coarse_grained,
                    fine_grained: n.fine_grained,
                    self_localize: n.self_localize,
                    fine_cnt_limit: n.fine_cnt_limit.unwrap_or(FINE_CNT_LIMIT_NEVER),
                    ..base
                };
                profile
                    .validate()
                    .map_err(|e| schema(format!("ntl `{}`: {e}", n.label)))?;
                Ok(NtlSpec {
                    label: n.label.clone(),
                    profile,
                    sensors: n.sensors.map(Into::into),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let scenario = Scenario {
            grid,
            reception,
            timing,
            beacon_phases: self.radio.beacon_phases,
            ntls,
            mobility: MobilityConfig {
                stride_min: self.mobility.stride_min_m,
                stride_max: self.mobility.stride_max_m,
                segment_len: self.mobility.segment_steps,
                field: grid.bounds(),
            },
            sensors: self.sensors.into(),
            tdoa: TdoaErrorModel {
                qmin: self.tdoa.qmin_m,
                qmax: self.tdoa.qmax_m,
            },
            target_samples: self.target_samples,
            master_seed: self.master_seed,
        };
        scenario.validate().map_err(|e| schema(e.to_string()))?;
        Ok(scenario)
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    ScenarioFile::load(path)?.to_scenario()
}

/// The shipped paper-defaults scenario, embedded at build time.
pub const PAPER_DEFAULTS_TOML: &str = include_str!("../../../scenarios/paper-defaults.toml");

pub fn paper_defaults_file() -> Result<ScenarioFile> {
    ScenarioFile::parse(PAPER_DEFAULTS_TOML)
}

pub fn paper_defaults() -> Result<Scenario> {
    paper_defaults_file()?.to_scenario()
}
