//! Per-pair utilities and strict preference lists.
//!
//! A candidate j is worth `tau_j * Qstar_j * e_ij * (r_ij / r_ij_max)` to i:
//! vehicle type weight, normalised regional generated data, a weighted
//! direction/distance score and the fading penalty of the link. All factors
//! lie in [0, 1], so utilities do too.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::channel::LinkSample;
use crate::scenario::{neighbors_in_radius, ScenarioError, TraceSet};
use crate::vehicle::{VehicleId, VehicleKind, VehicleState};

#[derive(Debug, Error)]
pub enum UtilityError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("distance {distance} exceeds admission radius {radius}")]
    OutsideRadius { distance: f64, radius: f64 },
    #[error("no vehicles to normalise over")]
    EmptyRegion,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Weights of the direction/distance score plus the admission radius.
/// `w1 + w2 = 1` is enforced so the score stays in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeights {
    w1: f64,
    w2: f64,
    radius_m: f64,
}

impl UtilityWeights {
    pub fn new(w1: f64, w2: f64, radius_m: f64) -> Result<Self, UtilityError> {
        if w1 < 0.0 || w2 < 0.0 {
            return Err(UtilityError::InvalidWeights(
                "weights must be non-negative".into(),
            ));
        }
        if (w1 + w2 - 1.0).abs() > 1e-9 {
            return Err(UtilityError::InvalidWeights(format!(
                "w1 + w2 must equal 1, got {}",
                w1 + w2
            )));
        }
        if !(radius_m > 0.0) {
            return Err(UtilityError::InvalidWeights("radius must be > 0".into()));
        }
        Ok(UtilityWeights { w1, w2, radius_m })
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }
}

impl Default for UtilityWeights {
    fn default() -> Self {
        UtilityWeights {
            w1: 0.5,
            w2: 0.5,
            radius_m: 20.0,
        }
    }
}

/// Priority weight of a vehicle type: emergency 1.0, regular 0.5.
pub fn type_weight(kind: VehicleKind) -> f64 {
    match kind {
        VehicleKind::Emergency => 1.0,
        VehicleKind::Regular => 0.5,
    }
}

/// Regional generated data `Q_i`: own generation plus that of every vehicle
/// within the radius, line of sight notwithstanding (beacons travel on the
/// long-range control channel).
pub fn regional_data(
    traces: &TraceSet,
    t: u32,
    i: VehicleId,
    radius_m: f64,
) -> Result<f64, UtilityError> {
    let me = traces
        .get(t, i)
        .ok_or(ScenarioError::UnknownVehicle(i))?;
    let mut q = me.generated_gbit;
    for id in neighbors_in_radius(traces, t, i, radius_m)? {
        q += traces.get(t, id).expect("neighbor exists").generated_gbit;
    }
    Ok(q)
}

/// Divides every regional value by the timeslot maximum, yielding values in
/// (0, 1] with at least one exact 1.
pub fn normalize_regional(
    q: &BTreeMap<VehicleId, f64>,
) -> Result<BTreeMap<VehicleId, f64>, UtilityError> {
    let max = q
        .values()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if q.is_empty() || !(max > 0.0) {
        return Err(UtilityError::EmptyRegion);
    }
    Ok(q.iter().map(|(&id, &v)| (id, v / max)).collect())
}

/// Absolute heading difference folded into [0, pi].
pub fn heading_difference(a: f64, b: f64) -> f64 {
    let delta = (a - b).rem_euclid(std::f64::consts::TAU);
    delta.min(std::f64::consts::TAU - delta)
}

/// Direction/distance score `w1*(R-d)/R + w2*(pi-phi)/pi` in [0, 1].
pub fn direction_distance_score(
    distance_m: f64,
    heading_i: f64,
    heading_j: f64,
    weights: &UtilityWeights,
) -> Result<f64, UtilityError> {
    let radius = weights.radius_m;
    if distance_m > radius {
        return Err(UtilityError::OutsideRadius {
            distance: distance_m,
            radius,
        });
    }
    let phi = heading_difference(heading_i, heading_j);
    Ok(weights.w1 * (radius - distance_m) / radius
        + weights.w2 * (std::f64::consts::PI - phi) / std::f64::consts::PI)
}

/// Utility of candidate j to vehicle i. The rate ratio compares the rate
/// under the current fade against the zero-shadow rate at the same distance,
/// clamped to [0, 1]; infeasible links (rate 0) are worth 0.
pub fn pair_utility(
    candidate_kind: VehicleKind,
    candidate_q_star: f64,
    score: f64,
    rate_gbps: f64,
    max_rate_gbps: f64,
) -> f64 {
    if !(max_rate_gbps > 0.0) || !(rate_gbps > 0.0) {
        return 0.0;
    }
    let ratio = (rate_gbps / max_rate_gbps).clamp(0.0, 1.0);
    type_weight(candidate_kind) * candidate_q_star * score * ratio
}

/// One candidate with its utility, strictly ordered inside a [`PreferenceList`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferenceEntry {
    pub candidate: VehicleId,
    pub utility: f64,
}

/// Strictly ordered candidate list of one vehicle, highest utility first,
/// ties broken by ascending id. Every entry passed the admission test
/// (within radius, line of sight, feasible MCS).
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceList {
    pub owner: VehicleId,
    pub entries: Vec<PreferenceEntry>,
    pub capacity: u32,
}

impl PreferenceList {
    pub fn candidate_ids(&self) -> Vec<VehicleId> {
        self.entries.iter().map(|e| e.candidate).collect()
    }
}

/// Key for the per-timeslot map of admissible links: the unordered pair in
/// ascending id order.
pub fn pair_key(a: VehicleId, b: VehicleId) -> (VehicleId, VehicleId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds the strict preference list of `owner` from the shared beacon data:
/// vehicle states, admissible link samples (one per unordered pair already
/// filtered by radius and line of sight) and normalised regional data.
pub fn build_preference_list(
    owner: VehicleId,
    states: &BTreeMap<VehicleId, VehicleState>,
    links: &BTreeMap<(VehicleId, VehicleId), LinkSample>,
    q_star: &BTreeMap<VehicleId, f64>,
    weights: &UtilityWeights,
    capacity: u32,
) -> Result<PreferenceList, UtilityError> {
    let me = &states[&owner];
    let mut entries = Vec::new();
    for (&id, candidate) in states {
        if id == owner {
            continue;
        }
        let Some(link) = links.get(&pair_key(owner, id)) else {
            continue;
        };
        if !(link.rate_gbps > 0.0) {
            continue; // no feasible MCS under the current fade
        }
        let score =
            direction_distance_score(link.distance_m, me.heading, candidate.heading, weights)?;
        let utility = pair_utility(
            candidate.kind,
            q_star[&id],
            score,
            link.rate_gbps,
            link.max_rate_gbps,
        );
        entries.push(PreferenceEntry {
            candidate: id,
            utility,
        });
    }
    entries.sort_by(|a, b| {
        b.utility
            .total_cmp(&a.utility)
            .then(a.candidate.cmp(&b.candidate))
    });
    Ok(PreferenceList {
        owner,
        entries,
        capacity,
    })
}
