//! Per-timeslot orchestration.
//!
//! Each timeslot: take the beacon snapshot, sample the channel for every
//! admissible pair (within radius, line of sight), build strict preference
//! lists, cap capacities so time-sharing cannot drag the average rate below
//! the slowest chosen link, run the matching game (greedy fallback when it
//! reports unsolvable), colour the matched links into half-duplex slots and
//! account the exchanged data against per-vehicle generation budgets.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::channel::{
    interference_mw, noise_power_dbm, received_power_dbm, sample_link, sinr_db, BeamedNode,
    ChannelError, LinkBudgetParams, LinkSample, McsTable, ShadowSampler,
};
use crate::config::{ConfigError, RunConfig};
use crate::matching::{greedy_pairing, solve, Matching, MatchingError, SfInstance, SfOutcome};
use crate::scenario::geometry::segment_point_distance;
use crate::scenario::{Geometry, OffRoadPolicy, ScenarioError, TraceSet};
use crate::utility::{
    build_preference_list, normalize_regional, pair_key, regional_data, PreferenceList,
    UtilityError, UtilityWeights,
};
use crate::vehicle::{VehicleId, VehicleKind, VehicleState};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Utility(#[from] UtilityError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("timeslot {0} missing from traces")]
    MissingTimeslot(u32),
    #[error("engine invariant violated at slot {t}: {message}")]
    InvariantViolation { t: u32, message: String },
}

/// Everything every vehicle knows at the start of a timeslot (beacons are
/// assumed perfectly disseminated).
#[derive(Debug, Clone)]
pub struct BeaconSnapshot {
    pub t: u32,
    pub states: BTreeMap<VehicleId, VehicleState>,
    /// Regional generated data Q per vehicle.
    pub regional: BTreeMap<VehicleId, f64>,
}

pub fn build_snapshot(
    traces: &TraceSet,
    t: u32,
    radius_m: f64,
) -> Result<BeaconSnapshot, EngineError> {
    if t >= traces.num_slots() {
        return Err(EngineError::MissingTimeslot(t));
    }
    let states: BTreeMap<VehicleId, VehicleState> =
        traces.vehicles_at(t).map(|s| (s.id, *s)).collect();
    let mut regional = BTreeMap::new();
    for &id in states.keys() {
        regional.insert(id, regional_data(traces, t, id, radius_m)?);
    }
    Ok(BeaconSnapshot {
        t,
        states,
        regional,
    })
}

/// Caps the configured capacity so that time-sharing `k` links keeps the
/// average rate within the slowest chosen link's ceiling: the largest `k`
/// with `mean(rates[..k]) <= min(rates[..k])`, scanned exhaustively over the
/// candidates in preference order. Never below 1.
pub fn effective_capacity(configured: u32, candidate_max_rates: &[f64]) -> u32 {
    if candidate_max_rates.is_empty() {
        return configured.max(1);
    }
    let mut best = 1u32;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for (idx, &rate) in candidate_max_rates
        .iter()
        .take(configured as usize)
        .enumerate()
    {
        sum += rate;
        min = min.min(rate);
        let k = idx as u32 + 1;
        if sum / k as f64 <= min + 1e-9 {
            best = k;
        }
    }
    best.min(configured.max(1))
}

/// Half-duplex slot assignment of matched links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotSchedule {
    pub slot_count: u32,
    pub assignment: BTreeMap<(VehicleId, VehicleId), u32>,
}

/// Greedy edge colouring: edges in the given order take the lowest slot
/// index free at both endpoints. Uses at most `2*max_degree - 1` slots.
pub fn schedule_links(edges: &[(VehicleId, VehicleId)]) -> SlotSchedule {
    let mut used: BTreeMap<VehicleId, Vec<u32>> = BTreeMap::new();
    let mut assignment = BTreeMap::new();
    let mut slot_count = 0;
    for &(a, b) in edges {
        let mut slot = 0u32;
        loop {
            let free = |v: VehicleId| !used.get(&v).map(|s| s.contains(&slot)).unwrap_or(false);
            if free(a) && free(b) {
                break;
            }
            slot += 1;
        }
        used.entry(a).or_default().push(slot);
        used.entry(b).or_default().push(slot);
        assignment.insert(pair_key(a, b), slot);
        slot_count = slot_count.max(slot + 1);
    }
    SlotSchedule {
        slot_count,
        assignment,
    }
}

/// Splits one pair's slot 50/50 between the two directions and draws the
/// transferred amount from each sender's remaining generation budget.
/// Returns `(from_i, from_j)` in Gbit.
pub fn exchanged_data(
    rate_gbps: f64,
    slot_count: u32,
    slot_duration_s: f64,
    budget_i: &mut f64,
    budget_j: &mut f64,
) -> (f64, f64) {
    if !(rate_gbps > 0.0) || slot_count == 0 {
        return (0.0, 0.0);
    }
    let direction_cap = rate_gbps * slot_duration_s / (2.0 * slot_count as f64);
    let from_i = budget_i.min(direction_cap).max(0.0);
    *budget_i -= from_i;
    let from_j = budget_j.min(direction_cap).max(0.0);
    *budget_j -= from_j;
    (from_i, from_j)
}

/// One matched link as seen from one endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRecord {
    pub peer: VehicleId,
    pub slot: u32,
    pub rate_gbps: f64,
    pub max_rate_gbps: f64,
    pub sent_gbit: f64,
    pub received_gbit: f64,
    /// Utility of the peer to this vehicle at matching time.
    pub utility: f64,
}

/// Per-vehicle accounting for one timeslot.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleReport {
    pub id: VehicleId,
    pub kind: VehicleKind,
    pub links: Vec<LinkRecord>,
    /// Data sent plus received over all links, Gbit.
    pub data_exchanged_gbit: f64,
    /// Average rate over the slot: sum of link rates over the slot count.
    pub avg_rate_gbps: f64,
    /// Exchanged data over the best achievable amount in this timeslot:
    /// what the vehicle's scheduled slots would carry at ideal (zero-shadow)
    /// rates with unlimited data. In [0, 1]; 0 when unmatched.
    pub utilisation: f64,
    /// Sum of the matched partners' regional data Q, Gbit.
    pub regional_access_gbit: f64,
}

impl VehicleReport {
    pub fn degree(&self) -> usize {
        self.links.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeslotReport {
    pub t: u32,
    pub vehicles: Vec<VehicleReport>,
    /// Set when the matching game reported unsolvable and the greedy
    /// fallback produced this slot's pairing.
    pub sf_fallback: bool,
    /// Sum of both endpoints' utilities over all matched pairs.
    pub aggregate_utility: f64,
}

/// Full result of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub reports: Vec<TimeslotReport>,
    pub meta: RunMetadata,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub config_digest: String,
    pub vehicle_count: u32,
    pub duration_slots: u32,
    pub slot_duration_s: f64,
    pub fallback_slots: u32,
}

/// Immutable per-run parameters derived from [`RunConfig`].
pub struct SimParams {
    pub radio: LinkBudgetParams,
    pub table: McsTable,
    pub weights: UtilityWeights,
    pub capacity: u32,
    pub interference: bool,
    pub vehicle_blockage: bool,
    pub vehicle_body_radius_m: f64,
}

impl SimParams {
    pub fn from_config(config: &RunConfig) -> Result<Self, EngineError> {
        config.validate()?;
        Ok(SimParams {
            radio: config.link_budget_params(),
            table: config.mcs_table()?,
            weights: config.utility_weights()?,
            capacity: config.matching.capacity,
            interference: config.radio.interference,
            vehicle_blockage: config.matching.vehicle_blockage,
            vehicle_body_radius_m: config.matching.vehicle_body_radius_m,
        })
    }
}

/// Admissibility: within the radius, in line of sight (optionally also
/// requiring no third vehicle body near the path) and at a usable distance.
fn pair_admissible(
    a: &VehicleState,
    b: &VehicleState,
    geometry: &Geometry,
    params: &SimParams,
    states: &BTreeMap<VehicleId, VehicleState>,
) -> bool {
    let d = a.distance_to(b);
    if d > params.weights.radius_m() || d <= 1e-6 {
        return false;
    }
    if !geometry.is_los(a.position, b.position) {
        return false;
    }
    if params.vehicle_blockage {
        let blocked = states.values().any(|other| {
            other.id != a.id
                && other.id != b.id
                && segment_point_distance(a.position, b.position, other.position)
                    < params.vehicle_body_radius_m
        });
        if blocked {
            return false;
        }
    }
    true
}

/// Runs one timeslot against the shared shadow-fading stream.
pub fn run_timeslot(
    geometry: &Geometry,
    traces: &TraceSet,
    t: u32,
    params: &SimParams,
    shadow: &mut ShadowSampler,
) -> Result<TimeslotReport, EngineError> {
    let snapshot = build_snapshot(traces, t, params.weights.radius_m())?;
    let states = &snapshot.states;
    if states.is_empty() {
        return Ok(TimeslotReport {
            t,
            vehicles: Vec::new(),
            sf_fallback: false,
            aggregate_utility: 0.0,
        });
    }
    let slot_duration_s = traces.slot_duration_s();

    // Channel samples for every admissible unordered pair, in ascending pair
    // order so the fading stream is consumed deterministically. Both link
    // directions share the draw.
    let ids: Vec<VehicleId> = states.keys().copied().collect();
    let mut links = BTreeMap::new();
    for (idx, &i) in ids.iter().enumerate() {
        for &j in &ids[idx + 1..] {
            let (a, b) = (&states[&i], &states[&j]);
            if !pair_admissible(a, b, geometry, params, states) {
                continue;
            }
            let draw = shadow.sample();
            let sample = sample_link(
                i,
                j,
                a.distance_to(b),
                &params.radio,
                &params.table,
                draw,
                0.0,
            )?;
            links.insert(pair_key(i, j), sample);
        }
    }

    let q_star = normalize_regional(&snapshot.regional)?;

    // Strict preference lists with effective capacities.
    let mut preference_lists: BTreeMap<VehicleId, PreferenceList> = BTreeMap::new();
    let mut utilities: BTreeMap<(VehicleId, VehicleId), f64> = BTreeMap::new();
    for &i in &ids {
        let mut list = build_preference_list(
            i,
            states,
            &links,
            &q_star,
            &params.weights,
            params.capacity,
        )?;
        let rates: Vec<f64> = list
            .entries
            .iter()
            .map(|e| links[&pair_key(i, e.candidate)].max_rate_gbps)
            .collect();
        list.capacity = effective_capacity(params.capacity, &rates);
        for e in &list.entries {
            utilities.insert((i, e.candidate), e.utility);
        }
        preference_lists.insert(i, list);
    }

    // Every vehicle computes the same game from the shared snapshot; spot
    // check one vehicle's list against a fresh recomputation.
    let probe = ids[t as usize % ids.len()];
    let recomputed = build_preference_list(
        probe,
        states,
        &links,
        &q_star,
        &params.weights,
        params.capacity,
    )?;
    if recomputed.entries != preference_lists[&probe].entries {
        return Err(EngineError::InvariantViolation {
            t,
            message: format!("vehicle {probe} disagrees with the shared instance"),
        });
    }

    let instance = instance_from_lists(&preference_lists)?;
    let pair_weights: BTreeMap<(VehicleId, VehicleId), f64> = instance
        .acceptable_pairs()
        .into_iter()
        .map(|(i, j)| {
            let w = utilities.get(&(i, j)).copied().unwrap_or(0.0)
                + utilities.get(&(j, i)).copied().unwrap_or(0.0);
            ((i, j), w)
        })
        .collect();

    let (matching, sf_fallback) = match solve(&instance) {
        SfOutcome::Stable(m) => (m, false),
        SfOutcome::Unsolvable(_) => (greedy_pairing(&instance, &pair_weights), true),
    };

    check_matching_invariants(t, &matching, &instance, &links, params)?;

    // Schedule: descending combined utility, ties by pair ids.
    let mut edges: Vec<(VehicleId, VehicleId)> = matching.iter().collect();
    edges.sort_by(|&a, &b| {
        pair_weights[&b]
            .total_cmp(&pair_weights[&a])
            .then(a.cmp(&b))
    });
    let schedule = schedule_links(&edges);

    // Directional rates, optionally degraded by co-slot interference.
    let directed_rates = directed_link_rates(&edges, &schedule, &links, states, geometry, params);

    // Data exchange: each sender drains its generation budget across its
    // links in descending own-utility order.
    let mut budgets: BTreeMap<VehicleId, f64> = states
        .iter()
        .map(|(&id, s)| (id, s.generated_gbit))
        .collect();
    let mut sent: BTreeMap<(VehicleId, VehicleId), f64> = BTreeMap::new();
    for &i in &ids {
        let mut partners = matching.partners(i);
        partners.sort_by(|&a, &b| {
            let ua = utilities.get(&(i, a)).copied().unwrap_or(0.0);
            let ub = utilities.get(&(i, b)).copied().unwrap_or(0.0);
            ub.total_cmp(&ua).then(a.cmp(&b))
        });
        for j in partners {
            let rate = directed_rates[&(i, j)];
            let budget = budgets.get_mut(&i).unwrap();
            let cap = if rate > 0.0 && schedule.slot_count > 0 {
                rate * slot_duration_s / (2.0 * schedule.slot_count as f64)
            } else {
                0.0
            };
            let amount = budget.min(cap).max(0.0);
            *budget -= amount;
            sent.insert((i, j), amount);
        }
    }

    let report = assemble_report(
        t,
        &snapshot,
        &matching,
        &schedule,
        &links,
        &utilities,
        &sent,
        sf_fallback,
        slot_duration_s,
    );
    check_report_invariants(&report, slot_duration_s)?;
    Ok(report)
}

fn instance_from_lists(
    lists: &BTreeMap<VehicleId, PreferenceList>,
) -> Result<SfInstance, MatchingError> {
    let prefs = lists
        .iter()
        .map(|(&i, l)| (i, l.candidate_ids()))
        .collect();
    let capacities = lists.iter().map(|(&i, l)| (i, l.capacity)).collect();
    SfInstance::new(prefs, capacities)
}

/// Per-direction realised rates. Without interference both directions carry
/// the pair's sampled rate. With interference enabled, each co-scheduled
/// pair's transmitter in the matching half (lower id first, higher id
/// second) contributes to the receiver's interference sum and the MCS is
/// re-selected per direction.
fn directed_link_rates(
    edges: &[(VehicleId, VehicleId)],
    schedule: &SlotSchedule,
    links: &BTreeMap<(VehicleId, VehicleId), LinkSample>,
    states: &BTreeMap<VehicleId, VehicleState>,
    geometry: &Geometry,
    params: &SimParams,
) -> BTreeMap<(VehicleId, VehicleId), f64> {
    let mut out = BTreeMap::new();
    for &(a, b) in edges {
        let sample = &links[&pair_key(a, b)];
        if !params.interference {
            out.insert((a, b), sample.rate_gbps);
            out.insert((b, a), sample.rate_gbps);
            continue;
        }
        let slot = schedule.assignment[&pair_key(a, b)];
        // Half 0: the lower endpoint of every pair transmits; half 1: the
        // higher one. (a, b) is normalised, so a transmits in half 0.
        for (tx, rx, half) in [(a, b, 0u8), (b, a, 1u8)] {
            let concurrent: Vec<BeamedNode> = edges
                .iter()
                .filter(|&&other| {
                    other != (a, b) && schedule.assignment[&pair_key(other.0, other.1)] == slot
                })
                .map(|&(x, y)| {
                    let (sender, target) = if half == 0 { (x, y) } else { (y, x) };
                    BeamedNode {
                        position: states[&sender].position,
                        beam_target: states[&target].position,
                    }
                })
                .collect();
            let receiver = BeamedNode {
                position: states[&rx].position,
                beam_target: states[&tx].position,
            };
            let i_mw = interference_mw(&receiver, &concurrent, geometry, &params.radio);
            let rx_power = received_power_dbm(sample.distance_m, &params.radio, sample.shadow_db)
                .expect("distance already validated");
            let sinr = sinr_db(rx_power, noise_power_dbm(&params.radio), i_mw);
            let rate = params
                .table
                .select(sinr)
                .map(|e| e.rate_gbps)
                .unwrap_or(0.0)
                .min(sample.max_rate_gbps);
            out.insert((tx, rx), rate);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn assemble_report(
    t: u32,
    snapshot: &BeaconSnapshot,
    matching: &Matching,
    schedule: &SlotSchedule,
    links: &BTreeMap<(VehicleId, VehicleId), LinkSample>,
    utilities: &BTreeMap<(VehicleId, VehicleId), f64>,
    sent: &BTreeMap<(VehicleId, VehicleId), f64>,
    sf_fallback: bool,
    slot_duration_s: f64,
) -> TimeslotReport {
    let mut vehicles = Vec::new();
    let mut aggregate_utility = 0.0;
    for (i, j) in matching.iter() {
        aggregate_utility += utilities.get(&(i, j)).copied().unwrap_or(0.0)
            + utilities.get(&(j, i)).copied().unwrap_or(0.0);
    }
    for (&id, state) in &snapshot.states {
        let mut records = Vec::new();
        for peer in matching.partners(id) {
            let sample = &links[&pair_key(id, peer)];
            records.push(LinkRecord {
                peer,
                slot: schedule.assignment[&pair_key(id, peer)],
                rate_gbps: sample.rate_gbps,
                max_rate_gbps: sample.max_rate_gbps,
                sent_gbit: sent.get(&(id, peer)).copied().unwrap_or(0.0),
                received_gbit: sent.get(&(peer, id)).copied().unwrap_or(0.0),
                utility: utilities.get(&(id, peer)).copied().unwrap_or(0.0),
            });
        }
        records.sort_by(|a, b| a.peer.cmp(&b.peer));
        let data_exchanged: f64 = records.iter().map(|r| r.sent_gbit + r.received_gbit).sum();
        let avg_rate = if schedule.slot_count > 0 {
            records.iter().map(|r| r.rate_gbps).sum::<f64>() / schedule.slot_count as f64
        } else {
            0.0
        };
        // Best achievable exchange this slot: every assigned slot filled at
        // the ideal rate. One slot carries r_max * T_s / T (half per
        // direction, both counted).
        let achievable = if schedule.slot_count > 0 {
            records.iter().map(|r| r.max_rate_gbps).sum::<f64>() * slot_duration_s
                / schedule.slot_count as f64
        } else {
            0.0
        };
        let utilisation = if achievable > 0.0 {
            (data_exchanged / achievable).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let regional_access = records
            .iter()
            .map(|r| snapshot.regional[&r.peer])
            .sum::<f64>();
        vehicles.push(VehicleReport {
            id,
            kind: state.kind,
            links: records,
            data_exchanged_gbit: data_exchanged,
            avg_rate_gbps: avg_rate,
            utilisation,
            regional_access_gbit: regional_access,
        });
    }
    TimeslotReport {
        t,
        vehicles,
        sf_fallback,
        aggregate_utility,
    }
}

fn check_matching_invariants(
    t: u32,
    matching: &Matching,
    instance: &SfInstance,
    links: &BTreeMap<(VehicleId, VehicleId), LinkSample>,
    params: &SimParams,
) -> Result<(), EngineError> {
    let fail = |message: String| Err(EngineError::InvariantViolation { t, message });
    for (i, j) in matching.iter() {
        if i == j {
            return fail(format!("self link ({i}, {j})"));
        }
        let Some(sample) = links.get(&pair_key(i, j)) else {
            return fail(format!("matched pair ({i}, {j}) is not admissible"));
        };
        if sample.distance_m > params.weights.radius_m() {
            return fail(format!("matched pair ({i}, {j}) outside the radius"));
        }
    }
    for a in instance.agents() {
        if matching.degree(a) > instance.capacity(a) as usize {
            return fail(format!("vehicle {a} exceeds its capacity"));
        }
    }
    Ok(())
}

fn check_report_invariants(
    report: &TimeslotReport,
    slot_duration_s: f64,
) -> Result<(), EngineError> {
    let t = report.t;
    let fail = |message: String| Err(EngineError::InvariantViolation { t, message });
    let mut half_duplex: BTreeMap<(VehicleId, u32), VehicleId> = BTreeMap::new();
    let mut total_sent = 0.0;
    let mut total_received = 0.0;
    for v in &report.vehicles {
        if !(0.0..=1.0 + 1e-9).contains(&v.utilisation) {
            return fail(format!("vehicle {} utilisation {}", v.id, v.utilisation));
        }
        let best_ideal = v
            .links
            .iter()
            .map(|l| l.max_rate_gbps)
            .fold(0.0_f64, f64::max);
        if v.data_exchanged_gbit > slot_duration_s * best_ideal + 1e-9 {
            return fail(format!(
                "vehicle {} exchanged {} Gbit above its ideal ceiling",
                v.id, v.data_exchanged_gbit
            ));
        }
        for l in &v.links {
            if let Some(&other) = half_duplex.get(&(v.id, l.slot)) {
                if other != l.peer {
                    return fail(format!(
                        "vehicle {} scheduled twice in slot {}",
                        v.id, l.slot
                    ));
                }
            }
            half_duplex.insert((v.id, l.slot), l.peer);
            total_sent += l.sent_gbit;
            total_received += l.received_gbit;
        }
    }
    if (total_sent - total_received).abs() > 1e-9 {
        return fail(format!(
            "conservation broken: sent {total_sent} vs received {total_received}"
        ));
    }
    Ok(())
}

/// Builds geometry and traces from the config (generating them when no trace
/// path is set) and runs every timeslot. Deterministic per seed.
pub fn run_scenario(config: &RunConfig, seed: u64) -> Result<SimulationResult, EngineError> {
    config.validate()?;
    let geometry = crate::scenario::build_manhattan_grid(&config.geometry_config())?;
    let traces = match config.trace_path() {
        Some(path) => TraceSet::load_csv(
            &path,
            config.scenario.timeslot_s,
            &geometry,
            OffRoadPolicy::Warn,
        )?,
        None => crate::scenario::generate_traces(&geometry, &config.mobility_config(), seed)?,
    };
    run_scenario_with_traces(config, &geometry, &traces, seed)
}

/// Runs against pre-built traces (also the entry point for trace files and
/// hand-made snapshots in tests).
pub fn run_scenario_with_traces(
    config: &RunConfig,
    geometry: &Geometry,
    traces: &TraceSet,
    seed: u64,
) -> Result<SimulationResult, EngineError> {
    let params = SimParams::from_config(config)?;
    // Stream 1 of the seed feeds shadow fading; stream 0 feeds mobility.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut shadow = ShadowSampler::new(params.radio.shadow_sigma_db, rng)?;

    let mut reports = Vec::new();
    let mut fallback_slots = 0;
    for t in 0..traces.num_slots() {
        let report = run_timeslot(geometry, traces, t, &params, &mut shadow)?;
        if report.sf_fallback {
            fallback_slots += 1;
        }
        reports.push(report);
    }
    let vehicle_count = traces.vehicles_at(0).count() as u32;
    Ok(SimulationResult {
        reports,
        meta: RunMetadata {
            seed,
            config_digest: config.digest(),
            vehicle_count,
            duration_slots: traces.num_slots(),
            slot_duration_s: traces.slot_duration_s(),
            fallback_slots,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::geometry::{build_manhattan_grid, GeometryConfig, Point};

    fn id(n: u32) -> VehicleId {
        VehicleId(n)
    }

    #[test]
    fn effective_capacity_examples() {
        // Equal rates: time sharing keeps the mean at the common rate.
        assert_eq!(effective_capacity(4, &[4.62, 4.62, 4.62, 4.62]), 4);
        assert_eq!(effective_capacity(1, &[6.7568, 6.7568]), 1);
        // A drastically slower second link caps the count at 1: the mean of
        // {6.7568, 0.385} exceeds the slower ceiling.
        assert_eq!(effective_capacity(4, &[6.7568, 0.385]), 1);
        // Exhaustive scan keeps the largest feasible prefix.
        assert_eq!(effective_capacity(4, &[4.0, 4.0, 4.0, 2.0]), 3);
        assert_eq!(effective_capacity(3, &[]), 3);
    }

    #[test]
    fn effective_capacity_matches_brute_force_scan() {
        let rates = [6.7568, 6.7568, 4.62, 4.62, 3.08, 0.77];
        for c in 1..=6u32 {
            let expected = (1..=c.min(rates.len() as u32))
                .filter(|&k| {
                    let prefix = &rates[..k as usize];
                    let mean = prefix.iter().sum::<f64>() / k as f64;
                    let min = prefix.iter().cloned().fold(f64::INFINITY, f64::min);
                    mean <= min + 1e-9
                })
                .max()
                .unwrap_or(1);
            assert_eq!(effective_capacity(c, &rates), expected, "c={c}");
        }
    }

    #[test]
    fn scheduling_examples() {
        // Perfect matching: one slot.
        let s = schedule_links(&[(id(1), id(2)), (id(3), id(4))]);
        assert_eq!(s.slot_count, 1);

        // Star with three leaves: three slots.
        let s = schedule_links(&[(id(0), id(1)), (id(0), id(2)), (id(0), id(3))]);
        assert_eq!(s.slot_count, 3);

        // Triangle: an odd cycle needs three slots.
        let s = schedule_links(&[(id(1), id(2)), (id(2), id(3)), (id(1), id(3))]);
        assert_eq!(s.slot_count, 3);
        let mut slots: Vec<u32> = s.assignment.values().copied().collect();
        slots.sort_unstable();
        slots.dedup();
        assert_eq!(slots.len(), 3);
    }

    #[test]
    fn schedule_is_half_duplex() {
        let edges = [
            (id(1), id(2)),
            (id(1), id(3)),
            (id(2), id(3)),
            (id(3), id(4)),
            (id(2), id(5)),
        ];
        let s = schedule_links(&edges);
        for &(a, b) in &edges {
            for &(c, d) in &edges {
                if (a, b) != (c, d)
                    && s.assignment[&pair_key(a, b)] == s.assignment[&pair_key(c, d)]
                {
                    assert!(a != c && a != d && b != c && b != d);
                }
            }
        }
        let max_degree = 3;
        assert!(s.slot_count <= 2 * max_degree - 1);
    }

    #[test]
    fn exchanged_data_examples() {
        // 4 Gbit/s over a full 1 s slot: 2 Gbit per direction available.
        let (mut gi, mut gj) = (1.0, 0.5);
        let (from_i, from_j) = exchanged_data(4.0, 1, 1.0, &mut gi, &mut gj);
        assert_eq!((from_i, from_j), (1.0, 0.5));
        assert_eq!((gi, gj), (0.0, 0.0));

        // Zero rate moves nothing.
        let (mut gi, mut gj) = (1.0, 1.0);
        assert_eq!(exchanged_data(0.0, 1, 1.0, &mut gi, &mut gj), (0.0, 0.0));

        // A drained budget sends nothing on the lower-priority link.
        let mut exhausted = 0.0;
        let mut fresh = 1.0;
        let (from_i, _) = exchanged_data(4.0, 1, 1.0, &mut exhausted, &mut fresh);
        assert_eq!(from_i, 0.0);
    }

    fn static_traces(rows: &[(u32, VehicleKind, f64, f64, f64)]) -> TraceSet {
        let mut t = TraceSet::new(0.1).unwrap();
        for &(vid, kind, x, y, heading) in rows {
            t.insert(
                0,
                VehicleState {
                    id: id(vid),
                    kind,
                    position: Point::new(x, y),
                    heading,
                    speed: 8.0,
                    generated_gbit: if kind == VehicleKind::Emergency {
                        1.0
                    } else {
                        0.5
                    },
                },
            );
        }
        t
    }

    fn test_params(capacity: u32) -> SimParams {
        SimParams {
            radio: LinkBudgetParams::urban_60ghz(),
            table: McsTable::default_80211ad(),
            weights: UtilityWeights::default(),
            capacity,
            interference: false,
            vehicle_blockage: false,
            vehicle_body_radius_m: 1.0,
        }
    }

    fn zero_shadow() -> ShadowSampler {
        ShadowSampler::new(0.0, ChaCha12Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn missing_timeslot_is_an_error() {
        let geometry = build_manhattan_grid(&GeometryConfig::default()).unwrap();
        let traces = static_traces(&[(1, VehicleKind::Regular, 10.0, 50.0, 0.0)]);
        let params = test_params(1);
        assert!(matches!(
            run_timeslot(&geometry, &traces, 1, &params, &mut zero_shadow()),
            Err(EngineError::MissingTimeslot(1))
        ));
    }

    #[test]
    fn two_vehicles_in_sight_pair_up() {
        let geometry = build_manhattan_grid(&GeometryConfig::default()).unwrap();
        let traces = static_traces(&[
            (1, VehicleKind::Regular, 40.0, 50.0, 0.0),
            (2, VehicleKind::Regular, 50.0, 50.0, 0.0),
        ]);
        let params = test_params(1);
        let report = run_timeslot(&geometry, &traces, 0, &params, &mut zero_shadow()).unwrap();
        assert!(!report.sf_fallback);
        for v in &report.vehicles {
            assert_eq!(v.degree(), 1);
            assert!(v.utilisation > 0.0);
            assert!(v.data_exchanged_gbit > 0.0);
        }
        // At 10 m the zero-shadow rate is the top one: each direction is
        // capped at 6.7568 * 0.1 / 2 = 0.33784 Gbit, below g = 0.5.
        let v1 = &report.vehicles[0];
        assert!((v1.links[0].sent_gbit - 0.33784).abs() < 1e-9);
        assert!((v1.utilisation - 1.0).abs() < 1e-9);
    }

    #[test]
    fn building_blocked_pair_is_never_matched() {
        let geometry = build_manhattan_grid(&GeometryConfig::default()).unwrap();
        // Seven vehicles around the central junction, capacity 3. Vehicles 1
        // and 2 sit on crossing roads with a building block between them.
        let traces = static_traces(&[
            (1, VehicleKind::Regular, 30.0, 50.0, 0.0),
            (
                2,
                VehicleKind::Regular,
                50.0,
                30.0,
                std::f64::consts::FRAC_PI_2,
            ),
            (3, VehicleKind::Emergency, 45.0, 50.0, 0.0),
            (4, VehicleKind::Regular, 55.0, 50.0, std::f64::consts::PI),
            (
                5,
                VehicleKind::Regular,
                50.0,
                55.0,
                std::f64::consts::FRAC_PI_2,
            ),
            (
                6,
                VehicleKind::Regular,
                50.0,
                45.0,
                std::f64::consts::FRAC_PI_2,
            ),
            (7, VehicleKind::Regular, 60.0, 50.0, 0.0),
        ]);
        assert!(!geometry.is_los(Point::new(30.0, 50.0), Point::new(50.0, 30.0)));
        let params = test_params(3);
        let report = run_timeslot(&geometry, &traces, 0, &params, &mut zero_shadow()).unwrap();
        let v1 = report.vehicles.iter().find(|v| v.id == id(1)).unwrap();
        assert!(v1.links.iter().all(|l| l.peer != id(2)));
        let v2 = report.vehicles.iter().find(|v| v.id == id(2)).unwrap();
        assert!(v2.links.iter().all(|l| l.peer != id(1)));
        // The junction cluster is dense and mutually visible: links formed.
        assert!(report.vehicles.iter().any(|v| v.degree() > 0));
    }
}
