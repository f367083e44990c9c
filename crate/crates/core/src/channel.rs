//! 60 GHz link-budget model.
//!
//! Received power in dBm is `P_tx + 2*G(theta) - PL(d)` with an ideal
//! zero-sidelobe beam gain `G(theta) = 10*log10(4*pi/theta^2)` applied to
//! both ends (perfect alignment is assumed throughout). Path loss is
//! `10*n*log10(d) + 40*d/1000 + H_att + S_f` where the attenuation constant
//! `H_att` is a ratio in dB (the 70 "dBm" found in some parameter tables is
//! treated as 70 dB) and `S_f` is zero-mean Gaussian shadow fading in the dB
//! domain. SINR is formed in the linear domain and mapped to a rate through
//! an MCS sensitivity table.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::geometry::{Geometry, Point};
use crate::vehicle::VehicleId;

/// Built-in MCS sensitivity ladder, modelled on the 802.11ad single-carrier
/// PHY with the standard's 6.7568 Gbit/s top rate. Fully replaceable through
/// the config's `mcs_table` path.
pub const DEFAULT_MCS_TABLE_CSV: &str = include_str!("../data/mcs_80211ad.csv");

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid link budget parameters: {0}")]
    InvalidParams(String),
    #[error("beamwidth out of range: {0} rad (expected 0 < theta <= pi)")]
    BeamwidthOutOfRange(f64),
    #[error("distance must be > 0, got {0}")]
    NonPositiveDistance(f64),
    #[error("invalid mcs table: {0}")]
    InvalidMcsTable(String),
}

/// All radio constants of the link budget in one validated record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub pathloss_exponent: f64,
    pub tx_power_dbm: f64,
    /// Channel attenuation constant `H_att` in dB.
    pub attenuation_constant_db: f64,
    pub shadow_sigma_db: f64,
    /// Noise floor in dBm/Hz.
    pub noise_floor_dbm_hz: f64,
    pub noise_figure_db: f64,
    /// Half-power beamwidth in radians.
    pub beamwidth_rad: f64,
}

impl LinkBudgetParams {
    /// Urban 60 GHz defaults: B = 2.16 GHz, n = 2.66, P_tx = 10 dBm,
    /// H_att = 70 dB, sigma = 5.8 dB, N_fl = -174 dBm/Hz, N_fg = 6 dB,
    /// theta = 15 degrees.
    pub fn urban_60ghz() -> Self {
        LinkBudgetParams {
            carrier_frequency_hz: 60.0e9,
            bandwidth_hz: 2.16e9,
            pathloss_exponent: 2.66,
            tx_power_dbm: 10.0,
            attenuation_constant_db: 70.0,
            shadow_sigma_db: 5.8,
            noise_floor_dbm_hz: -174.0,
            noise_figure_db: 6.0,
            beamwidth_rad: 15.0_f64.to_radians(),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(ChannelError::InvalidParams("bandwidth must be > 0".into()));
        }
        if !(self.pathloss_exponent > 0.0) {
            return Err(ChannelError::InvalidParams(
                "pathloss exponent must be > 0".into(),
            ));
        }
        if !(self.beamwidth_rad > 0.0 && self.beamwidth_rad <= std::f64::consts::PI) {
            return Err(ChannelError::BeamwidthOutOfRange(self.beamwidth_rad));
        }
        if self.shadow_sigma_db < 0.0 {
            return Err(ChannelError::InvalidParams(
                "shadow sigma must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10.0_f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Ideal beam gain `10*log10(4*pi/theta^2)` in dB, used for both the TX and
/// RX ends under the perfect-alignment assumption.
pub fn antenna_gain_db(beamwidth_rad: f64) -> Result<f64, ChannelError> {
    if !(beamwidth_rad > 0.0 && beamwidth_rad <= std::f64::consts::PI) {
        return Err(ChannelError::BeamwidthOutOfRange(beamwidth_rad));
    }
    Ok(10.0 * (4.0 * std::f64::consts::PI / beamwidth_rad.powi(2)).log10())
}

/// `10*n*log10(d) + 40*d/1000 + H_att + S_f` in dB.
pub fn path_loss_db(
    distance_m: f64,
    params: &LinkBudgetParams,
    shadow_db: f64,
) -> Result<f64, ChannelError> {
    if !(distance_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    Ok(10.0 * params.pathloss_exponent * distance_m.log10()
        + 40.0 * distance_m / 1000.0
        + params.attenuation_constant_db
        + shadow_db)
}

/// Received power `P_tx + 2*G - PL` in dBm.
pub fn received_power_dbm(
    distance_m: f64,
    params: &LinkBudgetParams,
    shadow_db: f64,
) -> Result<f64, ChannelError> {
    let gain = antenna_gain_db(params.beamwidth_rad)?;
    Ok(params.tx_power_dbm + 2.0 * gain - path_loss_db(distance_m, params, shadow_db)?)
}

/// Noise power `N_fl + 10*log10(B) + N_fg` in dBm.
pub fn noise_power_dbm(params: &LinkBudgetParams) -> f64 {
    params.noise_floor_dbm_hz + 10.0 * params.bandwidth_hz.log10() + params.noise_figure_db
}

/// SINR in dB, computed in the linear domain.
pub fn sinr_db(received_dbm: f64, noise_dbm: f64, interference_mw: f64) -> f64 {
    10.0 * (dbm_to_mw(received_dbm) / (dbm_to_mw(noise_dbm) + interference_mw)).log10()
}

/// Zero-mean Gaussian shadow-fading source in the dB domain. One draw is
/// shared by both directions of a link, which keeps link rates symmetric.
pub struct ShadowSampler {
    rng: ChaCha12Rng,
    normal: Normal<f64>,
}

impl ShadowSampler {
    pub fn new(sigma_db: f64, rng: ChaCha12Rng) -> Result<Self, ChannelError> {
        let normal = Normal::new(0.0, sigma_db)
            .map_err(|e| ChannelError::InvalidParams(format!("shadow sigma: {e}")))?;
        Ok(ShadowSampler { rng, normal })
    }

    pub fn sample(&mut self) -> f64 {
        self.normal.sample(&mut self.rng)
    }
}

/// One MCS row: SINR sensitivity threshold and achievable rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub index: u32,
    pub sinr_threshold_db: f64,
    pub rate_gbps: f64,
}

/// Sensitivity table, strictly increasing in both threshold and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, ChannelError> {
        if entries.is_empty() {
            return Err(ChannelError::InvalidMcsTable("table is empty".into()));
        }
        for pair in entries.windows(2) {
            if pair[1].sinr_threshold_db <= pair[0].sinr_threshold_db
                || pair[1].rate_gbps <= pair[0].rate_gbps
            {
                return Err(ChannelError::InvalidMcsTable(format!(
                    "rows must be strictly increasing in threshold and rate \
                     (violated between indices {} and {})",
                    pair[0].index, pair[1].index
                )));
            }
        }
        if entries.iter().any(|e| e.rate_gbps <= 0.0) {
            return Err(ChannelError::InvalidMcsTable("rates must be > 0".into()));
        }
        Ok(McsTable { entries })
    }

    pub fn default_80211ad() -> Self {
        Self::from_csv_str(DEFAULT_MCS_TABLE_CSV).expect("built-in table is valid")
    }

    pub fn from_csv_str(text: &str) -> Result<Self, ChannelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| ChannelError::InvalidMcsTable(e.to_string()))?;
            if record.len() != 3 {
                return Err(ChannelError::InvalidMcsTable(format!(
                    "expected 3 fields per row, got {}",
                    record.len()
                )));
            }
            let parse = |i: usize| -> Result<f64, ChannelError> {
                record[i]
                    .trim()
                    .parse()
                    .map_err(|e| ChannelError::InvalidMcsTable(format!("row {record:?}: {e}")))
            };
            entries.push(McsEntry {
                index: parse(0)? as u32,
                sinr_threshold_db: parse(1)?,
                rate_gbps: parse(2)?,
            });
        }
        Self::new(entries)
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self, ChannelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChannelError::InvalidMcsTable(format!("{}: {e}", path.display())))?;
        Self::from_csv_str(&text)
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn max_rate_gbps(&self) -> f64 {
        self.entries.last().map(|e| e.rate_gbps).unwrap_or(0.0)
    }

    /// Highest-rate entry whose threshold is satisfied (`sinr >= K`,
    /// inclusive). `None` when the link is infeasible.
    pub fn select(&self, sinr_db: f64) -> Option<&McsEntry> {
        self.entries
            .iter()
            .rev()
            .find(|e| sinr_db >= e.sinr_threshold_db)
    }
}

/// A transmitter position together with the point its beam is steered at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamedNode {
    pub position: Point,
    pub beam_target: Point,
}

fn within_beam_sector(node: &BeamedNode, other: Point, half_beam_rad: f64) -> bool {
    let to_target = (
        node.beam_target.x - node.position.x,
        node.beam_target.y - node.position.y,
    );
    let to_other = (other.x - node.position.x, other.y - node.position.y);
    let nt = (to_target.0.powi(2) + to_target.1.powi(2)).sqrt();
    let no = (to_other.0.powi(2) + to_other.1.powi(2)).sqrt();
    if nt == 0.0 || no == 0.0 {
        return false;
    }
    let cosine = ((to_target.0 * to_other.0 + to_target.1 * to_other.1) / (nt * no)).clamp(-1.0, 1.0);
    cosine.acos() <= half_beam_rad
}

/// Aggregate interference at a receiver in linear mW.
///
/// With ideal zero-sidelobe beams a concurrent transmitter contributes only
/// when the receiver sits inside its beam sector, the transmitter sits inside
/// the receiver's beam sector, and the two are in line of sight. Interferer
/// paths use the deterministic (zero-shadow) loss.
pub fn interference_mw(
    receiver: &BeamedNode,
    transmitters: &[BeamedNode],
    geometry: &Geometry,
    params: &LinkBudgetParams,
) -> f64 {
    let half = params.beamwidth_rad / 2.0;
    let mut total = 0.0;
    for tx in transmitters {
        let d = tx.position.distance(receiver.position);
        if d <= 0.0 {
            continue;
        }
        if !within_beam_sector(tx, receiver.position, half)
            || !within_beam_sector(receiver, tx.position, half)
            || !geometry.is_los(tx.position, receiver.position)
        {
            continue;
        }
        if let Ok(p) = received_power_dbm(d, params, 0.0) {
            total += dbm_to_mw(p);
        }
    }
    total
}

/// Radio state of one candidate link at one timeslot.
///
/// `rate_gbps` is the rate under the current shadow draw and interference;
/// `max_rate_gbps` is the rate at the same distance with zero shadow and no
/// interference. The realised rate is clamped to the ideal one so that
/// `0 <= rate <= max_rate` holds even for favourable fades.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub tx: VehicleId,
    pub rx: VehicleId,
    pub distance_m: f64,
    pub shadow_db: f64,
    pub sinr_db: f64,
    pub rate_gbps: f64,
    pub max_rate_gbps: f64,
}

pub fn sample_link(
    tx: VehicleId,
    rx: VehicleId,
    distance_m: f64,
    params: &LinkBudgetParams,
    table: &McsTable,
    shadow_db: f64,
    interference_mw: f64,
) -> Result<LinkSample, ChannelError> {
    let noise = noise_power_dbm(params);
    let faded = sinr_db(
        received_power_dbm(distance_m, params, shadow_db)?,
        noise,
        interference_mw,
    );
    let ideal = sinr_db(received_power_dbm(distance_m, params, 0.0)?, noise, 0.0);
    let max_rate = table.select(ideal).map(|e| e.rate_gbps).unwrap_or(0.0);
    let rate = table
        .select(faded)
        .map(|e| e.rate_gbps)
        .unwrap_or(0.0)
        .min(max_rate);
    Ok(LinkSample {
        tx,
        rx,
        distance_m,
        shadow_db,
        sinr_db: faded,
        rate_gbps: rate,
        max_rate_gbps: max_rate,
    })
}
