//! Run configuration: one TOML file, flag-overridable, with the urban
//! 60 GHz parameter set as defaults. Unknown keys are rejected and every
//! range violation names its key path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::{ChannelError, LinkBudgetParams, McsTable};
use crate::scenario::{GeometryConfig, MobilityConfig};
use crate::utility::{UtilityError, UtilityWeights};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config key `{key}`: {message}")]
    Range { key: &'static str, message: String },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub extent_m: (f64, f64),
    pub horizontal_roads: u32,
    pub vertical_roads: u32,
    pub lanes_per_road: u32,
    pub lane_width_m: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = GeometryConfig::default();
        GeometrySection {
            extent_m: g.extent_m,
            horizontal_roads: g.horizontal_roads,
            vertical_roads: g.vertical_roads,
            lanes_per_road: g.lanes_per_road,
            lane_width_m: g.lane_width_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSection {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub pathloss_exponent: f64,
    pub tx_power_dbm: f64,
    pub attenuation_constant_db: f64,
    pub shadow_sigma_db: f64,
    pub noise_floor_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub beamwidth_deg: f64,
    /// Path to a replacement MCS table CSV; empty selects the built-in one.
    pub mcs_table: String,
    pub interference: bool,
}

impl Default for RadioSection {
    fn default() -> Self {
        let p = LinkBudgetParams::urban_60ghz();
        RadioSection {
            carrier_frequency_hz: p.carrier_frequency_hz,
            bandwidth_hz: p.bandwidth_hz,
            pathloss_exponent: p.pathloss_exponent,
            tx_power_dbm: p.tx_power_dbm,
            attenuation_constant_db: p.attenuation_constant_db,
            shadow_sigma_db: p.shadow_sigma_db,
            noise_floor_dbm_hz: p.noise_floor_dbm_hz,
            noise_figure_db: p.noise_figure_db,
            beamwidth_deg: 15.0,
            mcs_table: String::new(),
            interference: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UtilitySection {
    pub w1: f64,
    pub w2: f64,
    pub radius_m: f64,
}

impl Default for UtilitySection {
    fn default() -> Self {
        UtilitySection {
            w1: 0.5,
            w2: 0.5,
            radius_m: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchingSection {
    pub capacity: u32,
    pub vehicle_blockage: bool,
    pub vehicle_body_radius_m: f64,
}

impl Default for MatchingSection {
    fn default() -> Self {
        MatchingSection {
            capacity: 3,
            vehicle_blockage: false,
            vehicle_body_radius_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub vehicle_count: u32,
    pub ecav_probability: f64,
    pub duration_slots: u32,
    /// Timeslot duration in seconds (artifact choice; not a radio constant).
    pub timeslot_s: f64,
    /// Regular-vehicle speed in m/s (artifact choice).
    pub base_speed_mps: f64,
    pub platoon_size: u32,
    pub headway_m: f64,
    pub turn_probability: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let m = MobilityConfig::default();
        ScenarioSection {
            vehicle_count: m.vehicle_count,
            ecav_probability: m.ecav_probability,
            duration_slots: m.duration_slots,
            timeslot_s: m.slot_duration_s,
            base_speed_mps: m.base_speed_mps,
            platoon_size: m.platoon_size,
            headway_m: m.headway_m,
            turn_probability: m.turn_probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub seeds: u32,
    pub output_dir: String,
    /// Trace CSV to replay instead of generating mobility; empty generates.
    pub traces: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            seed: 7,
            seeds: 1,
            output_dir: "out".into(),
            traces: String::new(),
        }
    }
}

/// The complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub radio: RadioSection,
    pub utility: UtilitySection,
    pub matching: MatchingSection,
    pub scenario: ScenarioSection,
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let check = |ok: bool, key: &'static str, message: &str| -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Range {
                    key,
                    message: message.into(),
                })
            }
        };
        check(
            self.geometry.extent_m.0 > 0.0 && self.geometry.extent_m.1 > 0.0,
            "geometry.extent_m",
            "must be positive",
        )?;
        check(
            self.geometry.horizontal_roads >= 1 && self.geometry.vertical_roads >= 1,
            "geometry.horizontal_roads",
            "road counts must be >= 1",
        )?;
        check(
            self.geometry.lane_width_m > 0.0,
            "geometry.lane_width_m",
            "must be > 0",
        )?;
        check(
            self.radio.bandwidth_hz > 0.0,
            "radio.bandwidth_hz",
            "must be > 0",
        )?;
        check(
            self.radio.pathloss_exponent > 0.0,
            "radio.pathloss_exponent",
            "must be > 0",
        )?;
        check(
            self.radio.beamwidth_deg > 0.0 && self.radio.beamwidth_deg <= 180.0,
            "radio.beamwidth_deg",
            "must be in (0, 180]",
        )?;
        check(
            self.radio.shadow_sigma_db >= 0.0,
            "radio.shadow_sigma_db",
            "must be >= 0",
        )?;
        check(
            self.utility.w1 >= 0.0
                && self.utility.w2 >= 0.0
                && (self.utility.w1 + self.utility.w2 - 1.0).abs() <= 1e-9,
            "utility.w1",
            "w1 and w2 must be non-negative and sum to 1",
        )?;
        check(self.utility.radius_m > 0.0, "utility.radius_m", "must be > 0")?;
        check(
            self.matching.capacity >= 1,
            "matching.capacity",
            "must be >= 1",
        )?;
        check(
            self.matching.vehicle_body_radius_m > 0.0,
            "matching.vehicle_body_radius_m",
            "must be > 0",
        )?;
        check(
            self.scenario.vehicle_count >= 1,
            "scenario.vehicle_count",
            "must be >= 1",
        )?;
        check(
            (0.0..=1.0).contains(&self.scenario.ecav_probability),
            "scenario.ecav_probability",
            "must be in [0, 1]",
        )?;
        check(
            self.scenario.timeslot_s > 0.0,
            "scenario.timeslot_s",
            "must be > 0",
        )?;
        check(
            self.scenario.base_speed_mps > 0.0,
            "scenario.base_speed_mps",
            "must be > 0",
        )?;
        check(
            self.scenario.platoon_size >= 1,
            "scenario.platoon_size",
            "must be >= 1",
        )?;
        check(
            (0.0..=1.0).contains(&self.scenario.turn_probability),
            "scenario.turn_probability",
            "must be in [0, 1]",
        )?;
        check(self.run.seeds >= 1, "run.seeds", "must be >= 1")?;
        if !self.run.traces.is_empty() {
            check(
                Path::new(&self.run.traces).exists(),
                "run.traces",
                "file does not exist",
            )?;
        }
        if !self.radio.mcs_table.is_empty() {
            check(
                Path::new(&self.radio.mcs_table).exists(),
                "radio.mcs_table",
                "file does not exist",
            )?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML serialisation; recorded in run metadata
    /// so outputs can be traced to the exact configuration.
    pub fn digest(&self) -> String {
        let canonical = toml::to_string(self).expect("config serialises");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn geometry_config(&self) -> GeometryConfig {
        GeometryConfig {
            extent_m: self.geometry.extent_m,
            horizontal_roads: self.geometry.horizontal_roads,
            vertical_roads: self.geometry.vertical_roads,
            lanes_per_road: self.geometry.lanes_per_road,
            lane_width_m: self.geometry.lane_width_m,
        }
    }

    pub fn mobility_config(&self) -> MobilityConfig {
        MobilityConfig {
            vehicle_count: self.scenario.vehicle_count,
            ecav_probability: self.scenario.ecav_probability,
            duration_slots: self.scenario.duration_slots,
            slot_duration_s: self.scenario.timeslot_s,
            base_speed_mps: self.scenario.base_speed_mps,
            platoon_size: self.scenario.platoon_size,
            headway_m: self.scenario.headway_m,
            turn_probability: self.scenario.turn_probability,
        }
    }

    pub fn link_budget_params(&self) -> LinkBudgetParams {
        LinkBudgetParams {
            carrier_frequency_hz: self.radio.carrier_frequency_hz,
            bandwidth_hz: self.radio.bandwidth_hz,
            pathloss_exponent: self.radio.pathloss_exponent,
            tx_power_dbm: self.radio.tx_power_dbm,
            attenuation_constant_db: self.radio.attenuation_constant_db,
            shadow_sigma_db: self.radio.shadow_sigma_db,
            noise_floor_dbm_hz: self.radio.noise_floor_dbm_hz,
            noise_figure_db: self.radio.noise_figure_db,
            beamwidth_rad: self.radio.beamwidth_deg.to_radians(),
        }
    }

    pub fn utility_weights(&self) -> Result<UtilityWeights, UtilityError> {
        UtilityWeights::new(self.utility.w1, self.utility.w2, self.utility.radius_m)
    }

    pub fn mcs_table(&self) -> Result<McsTable, ChannelError> {
        if self.radio.mcs_table.is_empty() {
            Ok(McsTable::default_80211ad())
        } else {
            McsTable::from_csv_path(Path::new(&self.radio.mcs_table))
        }
    }

    pub fn trace_path(&self) -> Option<PathBuf> {
        if self.run.traces.is_empty() {
            None
        } else {
            Some(PathBuf::from(&self.run.traces))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_the_radio_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.radio.pathloss_exponent, 2.66);
        assert_eq!(cfg.radio.tx_power_dbm, 10.0);
        assert_eq!(cfg.radio.bandwidth_hz, 2.16e9);
        assert_eq!(cfg.radio.attenuation_constant_db, 70.0);
        assert_eq!(cfg.radio.noise_figure_db, 6.0);
        assert_eq!(cfg.radio.noise_floor_dbm_hz, -174.0);
        assert_eq!(cfg.radio.shadow_sigma_db, 5.8);
        assert_eq!(cfg.scenario.ecav_probability, 0.15);
        assert_eq!(cfg.scenario.vehicle_count, 20);
        assert_eq!(cfg.geometry.lane_width_m, 3.2);
    }

    #[test]
    fn partial_file_overrides_only_named_keys() {
        let cfg = RunConfig::from_toml_str(
            "[matching]\ncapacity = 1\n\n[utility]\nradius_m = 40.0\n",
        )
        .unwrap();
        assert_eq!(cfg.matching.capacity, 1);
        assert_eq!(cfg.utility.radius_m, 40.0);
        assert_eq!(cfg.scenario.vehicle_count, 20);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("[radio]\nbogus = 1\n").is_err());
        assert!(RunConfig::from_toml_str("[nonsense]\nx = 1\n").is_err());
    }

    #[test]
    fn zero_beamwidth_names_the_key() {
        let err = RunConfig::from_toml_str("[radio]\nbeamwidth_deg = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("beamwidth"), "{err}");
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.digest(), b.digest());
        b.matching.capacity = 4;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn missing_referenced_files_are_caught() {
        let mut cfg = RunConfig::default();
        cfg.run.traces = "/no/such/file.csv".into();
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Range {
                key: "run.traces",
                ..
            })
        ));
    }
}
