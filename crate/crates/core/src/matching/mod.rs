//! The Stable Fixtures matching game.
//!
//! Agents hold strict preference lists over mutually acceptable partners and
//! a per-agent capacity. Phase 1 runs a capacitated bidding round that prunes
//! partners no stable matching can contain; Phase 2 eliminates rotations
//! until either every list length equals the agent's degree (the remaining
//! bid set is the matching) or a stability criterion fails:
//!
//! * an odd degree sum (the sum double-counts a would-be stable matching), or
//! * a preference list that becomes shorter than the agent's degree.
//!
//! Both unsolvable verdicts are heuristic; [`oracle::brute_force_oracle`]
//! enumerates the exact stable set on small instances so disagreements can
//! be counted rather than silently corrected.

pub mod oracle;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::VecDeque;

use thiserror::Error;

use crate::vehicle::VehicleId;

#[derive(Debug, Error)]
pub enum MatchingError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("instance too large for exhaustive enumeration: {0} agents (max {1})")]
    InstanceTooLarge(usize, usize),
    #[error("instance parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A Stable Fixtures instance: strict mutual preference lists and capacities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfInstance {
    prefs: BTreeMap<VehicleId, Vec<VehicleId>>,
    capacities: BTreeMap<VehicleId, u32>,
    /// rank[i][j] = position of j in i's list; fixed for the instance.
    ranks: BTreeMap<VehicleId, BTreeMap<VehicleId, usize>>,
}

impl SfInstance {
    pub fn new(
        prefs: BTreeMap<VehicleId, Vec<VehicleId>>,
        capacities: BTreeMap<VehicleId, u32>,
    ) -> Result<Self, MatchingError> {
        for (&i, list) in &prefs {
            let cap = capacities.get(&i).copied().ok_or_else(|| {
                MatchingError::InvalidInstance(format!("agent {i} has no capacity"))
            })?;
            if cap < 1 {
                return Err(MatchingError::InvalidInstance(format!(
                    "agent {i}: capacity must be >= 1"
                )));
            }
            let mut seen = BTreeSet::new();
            for &j in list {
                if j == i {
                    return Err(MatchingError::InvalidInstance(format!(
                        "agent {i} lists itself"
                    )));
                }
                if !seen.insert(j) {
                    return Err(MatchingError::InvalidInstance(format!(
                        "agent {i} lists {j} twice"
                    )));
                }
                let mutual = prefs
                    .get(&j)
                    .map(|l| l.contains(&i))
                    .unwrap_or(false);
                if !mutual {
                    return Err(MatchingError::InvalidInstance(format!(
                        "acceptability is not mutual for ({i}, {j})"
                    )));
                }
            }
        }
        let ranks = prefs
            .iter()
            .map(|(&i, list)| {
                (
                    i,
                    list.iter().enumerate().map(|(r, &j)| (j, r)).collect(),
                )
            })
            .collect();
        Ok(SfInstance {
            prefs,
            capacities,
            ranks,
        })
    }

    pub fn agents(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.prefs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.prefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefs.is_empty()
    }

    pub fn preference_list(&self, i: VehicleId) -> &[VehicleId] {
        &self.prefs[&i]
    }

    pub fn capacity(&self, i: VehicleId) -> u32 {
        self.capacities[&i]
    }

    /// Position of j in i's list (0 = most preferred).
    pub fn rank(&self, i: VehicleId, j: VehicleId) -> Option<usize> {
        self.ranks.get(&i).and_then(|m| m.get(&j)).copied()
    }

    pub fn acceptable(&self, i: VehicleId, j: VehicleId) -> bool {
        self.rank(i, j).is_some() && self.rank(j, i).is_some()
    }

    /// All unordered acceptable pairs in ascending order.
    pub fn acceptable_pairs(&self) -> Vec<(VehicleId, VehicleId)> {
        let mut out = Vec::new();
        for (&i, list) in &self.prefs {
            for &j in list {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Text fixture format: one line per agent, `id:capacity:pref1,pref2,...`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (&i, list) in &self.prefs {
            let prefs: Vec<String> = list.iter().map(|j| j.to_string()).collect();
            out.push_str(&format!("{i}:{}:{}\n", self.capacities[&i], prefs.join(",")));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, MatchingError> {
        let mut prefs = BTreeMap::new();
        let mut capacities = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fail = |message: String| MatchingError::Parse { line, message };
            let parts: Vec<&str> = trimmed.splitn(3, ':').collect();
            if parts.len() != 3 {
                return Err(fail("expected `id:capacity:pref1,pref2,...`".into()));
            }
            let id: u32 = parts[0]
                .trim()
                .parse()
                .map_err(|e| fail(format!("agent id: {e}")))?;
            let cap: u32 = parts[1]
                .trim()
                .parse()
                .map_err(|e| fail(format!("capacity: {e}")))?;
            let list: Vec<VehicleId> = if parts[2].trim().is_empty() {
                Vec::new()
            } else {
                parts[2]
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<u32>()
                            .map(VehicleId)
                            .map_err(|e| fail(format!("preference entry `{p}`: {e}")))
                    })
                    .collect::<Result<_, _>>()?
            };
            if prefs.insert(VehicleId(id), list).is_some() {
                return Err(fail(format!("duplicate agent {id}")));
            }
            capacities.insert(VehicleId(id), cap);
        }
        Self::new(prefs, capacities)
    }
}

/// A symmetric set of established links with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Matching {
    pairs: BTreeSet<(VehicleId, VehicleId)>,
}

impl Matching {
    pub fn new() -> Self {
        Matching::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (VehicleId, VehicleId)>>(
        iter: I,
    ) -> Result<Self, MatchingError> {
        let mut m = Matching::new();
        for (a, b) in iter {
            if a == b {
                return Err(MatchingError::InvalidInstance(format!(
                    "self pair ({a}, {b})"
                )));
            }
            m.insert(a, b);
        }
        Ok(m)
    }

    pub fn insert(&mut self, a: VehicleId, b: VehicleId) {
        debug_assert_ne!(a, b);
        self.pairs.insert(if a < b { (a, b) } else { (b, a) });
    }

    pub fn contains(&self, a: VehicleId, b: VehicleId) -> bool {
        self.pairs.contains(&if a < b { (a, b) } else { (b, a) })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VehicleId, VehicleId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn degree(&self, i: VehicleId) -> usize {
        self.pairs
            .iter()
            .filter(|&&(a, b)| a == i || b == i)
            .count()
    }

    pub fn partners(&self, i: VehicleId) -> Vec<VehicleId> {
        self.pairs
            .iter()
            .filter_map(|&(a, b)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Why the game declared an instance unsolvable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnsolvableReason {
    /// The post-Phase-1 degree sum is odd.
    OddDegreeSum,
    /// A preference list became shorter than the agent's degree while
    /// eliminating rotations (or no rotation could be traced).
    ShortList,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SfOutcome {
    Stable(Matching),
    Unsolvable(UnsolvableReason),
}

impl SfOutcome {
    pub fn matching(&self) -> Option<&Matching> {
        match self {
            SfOutcome::Stable(m) => Some(m),
            SfOutcome::Unsolvable(_) => None,
        }
    }
}

/// Working state shared by both phases: reduced lists and the ordered bid
/// set S. Targets of an agent are always a prefix of its current list.
#[derive(Debug, Clone)]
pub struct SolverState {
    prefs: BTreeMap<VehicleId, Vec<VehicleId>>,
    capacities: BTreeMap<VehicleId, u32>,
    ranks: BTreeMap<VehicleId, BTreeMap<VehicleId, usize>>,
    /// Ordered pairs (bidder, target).
    bids: BTreeSet<(VehicleId, VehicleId)>,
    /// Per target: bidders keyed by the target's rank of them.
    bidders: BTreeMap<VehicleId, BTreeSet<(usize, VehicleId)>>,
    /// Per bidder: number of targets (a_i); targets are prefs[i][..a_i].
    target_counts: BTreeMap<VehicleId, usize>,
}

impl SolverState {
    fn new(instance: &SfInstance) -> Self {
        SolverState {
            prefs: instance.prefs.clone(),
            capacities: instance.capacities.clone(),
            ranks: instance.ranks.clone(),
            bids: BTreeSet::new(),
            bidders: instance.agents().map(|i| (i, BTreeSet::new())).collect(),
            target_counts: instance.agents().map(|i| (i, 0)).collect(),
        }
    }

    pub fn bids(&self) -> &BTreeSet<(VehicleId, VehicleId)> {
        &self.bids
    }

    pub fn reduced_preferences(&self) -> &BTreeMap<VehicleId, Vec<VehicleId>> {
        &self.prefs
    }

    fn wants_to_bid(&self, i: VehicleId) -> bool {
        let a = self.target_counts[&i];
        a < (self.capacities[&i] as usize).min(self.prefs[&i].len())
    }

    /// Removes the pair {i, j} from both lists and voids any bids on it.
    /// Returns the agents whose target count dropped.
    fn delete_pair(&mut self, i: VehicleId, j: VehicleId) -> Vec<VehicleId> {
        let mut dropped = Vec::new();
        for (x, y) in [(i, j), (j, i)] {
            if let Some(pos) = self.prefs[&x].iter().position(|&v| v == y) {
                if pos < self.target_counts[&x] {
                    // y was a target of x; the bid (x, y) dies with the entry.
                    debug_assert!(self.bids.contains(&(x, y)));
                    self.bids.remove(&(x, y));
                    let rank = self.ranks[&y][&x];
                    self.bidders.get_mut(&y).unwrap().remove(&(rank, x));
                    *self.target_counts.get_mut(&x).unwrap() -= 1;
                    dropped.push(x);
                }
                self.prefs.get_mut(&x).unwrap().remove(pos);
            }
        }
        dropped
    }

    /// Next vehicle `i` would bid for: the entry right after its targets.
    fn next_target(&self, i: VehicleId) -> Option<VehicleId> {
        self.prefs[&i].get(self.target_counts[&i]).copied()
    }

    /// Worst current bidder of `j` by j's preference order.
    fn worst_bidder(&self, j: VehicleId) -> Option<VehicleId> {
        self.bidders[&j].iter().next_back().map(|&(_, id)| id)
    }

    /// Restores the bidding invariant: every agent targets
    /// `min(capacity, |list|)` partners, pruning over-subscribed targets.
    fn run_bidding(&mut self, queue: &mut VecDeque<VehicleId>) {
        while let Some(i) = queue.pop_front() {
            while self.wants_to_bid(i) {
                let j = self.next_target(i).expect("list longer than target count");
                self.bids.insert((i, j));
                self.bidders
                    .get_mut(&j)
                    .unwrap()
                    .insert((self.ranks[&j][&i], i));
                *self.target_counts.get_mut(&i).unwrap() += 1;

                // When j has at least capacity bidders, nobody worse than the
                // capacity-th best bidder can be in a stable matching with j.
                let cap = self.capacities[&j] as usize;
                if self.bidders[&j].len() >= cap {
                    let &(kth_rank, _) = self.bidders[&j].iter().nth(cap - 1).unwrap();
                    let to_delete: Vec<VehicleId> = self.prefs[&j]
                        .iter()
                        .copied()
                        .filter(|&l| self.ranks[&j][&l] > kth_rank)
                        .collect();
                    for l in to_delete {
                        for agent in self.delete_pair(l, j) {
                            if !queue.contains(&agent) {
                                queue.push_back(agent);
                            }
                        }
                    }
                }
            }
        }
        debug_assert!(self.prefs.keys().all(|&i| !self.wants_to_bid(i)));
    }
}

/// Phase 1: capacitated bidding. Every agent ends up targeting
/// `min(capacity, |list|)` partners and mutually unacceptable pairs are
/// deleted from both lists.
pub fn sf_phase1(instance: &SfInstance) -> SolverState {
    let mut state = SolverState::new(instance);
    let mut queue: VecDeque<VehicleId> = instance.agents().collect();
    state.run_bidding(&mut queue);
    state
}

/// Phase 2: checks the degree-sum criterion, then eliminates rotations until
/// no list is long. Degrees are frozen from the Phase-1 state.
pub fn sf_phase2(mut state: SolverState) -> SfOutcome {
    let degrees: BTreeMap<VehicleId, usize> = state
        .prefs
        .iter()
        .map(|(&i, list)| (i, (state.capacities[&i] as usize).min(list.len())))
        .collect();

    if degrees.values().sum::<usize>() % 2 == 1 {
        return SfOutcome::Unsolvable(UnsolvableReason::OddDegreeSum);
    }

    loop {
        let long: Option<VehicleId> = state
            .prefs
            .iter()
            .find(|(i, list)| list.len() > degrees[i])
            .map(|(&i, _)| i);
        let Some(start) = long else {
            // Every list length equals the degree; the bid set, read as
            // unordered pairs, is the matching.
            let mut m = Matching::new();
            for &(a, b) in &state.bids {
                m.insert(a, b);
            }
            return SfOutcome::Stable(m);
        };

        let Some(rotation) = find_rotation(&state, start) else {
            return SfOutcome::Unsolvable(UnsolvableReason::ShortList);
        };

        // Eliminate the rotation, then let the displaced agents re-bid.
        let mut queue = VecDeque::new();
        for &(i, j) in &rotation {
            for agent in state.delete_pair(i, j) {
                if !queue.contains(&agent) {
                    queue.push_back(agent);
                }
            }
        }
        state.run_bidding(&mut queue);

        if state
            .prefs
            .iter()
            .any(|(i, list)| list.len() < degrees[i])
        {
            return SfOutcome::Unsolvable(UnsolvableReason::ShortList);
        }
    }
}

/// Walks worst-bidder / next-target steps from `start` until an agent
/// repeats; the returned pairs are the cycle from the first occurrence.
/// `None` when the walk gets stuck (no bidder or no next target).
fn find_rotation(
    state: &SolverState,
    start: VehicleId,
) -> Option<Vec<(VehicleId, VehicleId)>> {
    let mut walk_pos: BTreeMap<VehicleId, usize> = BTreeMap::new();
    // Pairs (i_k, j_k) together with the walk position of j_k.
    let mut pairs: Vec<(VehicleId, VehicleId, usize)> = Vec::new();
    let mut pos = 0usize;
    walk_pos.insert(start, pos);
    let mut cur_j = start;

    let cutoff = loop {
        let i = state.worst_bidder(cur_j)?;
        if let Some(&p) = walk_pos.get(&i) {
            pairs.push((i, cur_j, walk_pos[&cur_j]));
            break p;
        }
        pos += 1;
        walk_pos.insert(i, pos);
        pairs.push((i, cur_j, walk_pos[&cur_j]));

        let jn = state.next_target(i)?;
        if let Some(&p) = walk_pos.get(&jn) {
            break p;
        }
        pos += 1;
        walk_pos.insert(jn, pos);
        cur_j = jn;
    };

    let rho: Vec<(VehicleId, VehicleId)> = pairs
        .into_iter()
        .filter(|&(_, _, j_pos)| j_pos >= cutoff)
        .map(|(i, j, _)| (i, j))
        .collect();
    if rho.is_empty() {
        None
    } else {
        Some(rho)
    }
}

/// Runs both phases.
pub fn solve(instance: &SfInstance) -> SfOutcome {
    sf_phase2(sf_phase1(instance))
}

/// True iff the unmatched acceptable pair (i, j) blocks `matching`: each
/// endpoint either has spare capacity or strictly prefers the other to its
/// worst current partner.
pub fn is_blocking_pair(
    matching: &Matching,
    instance: &SfInstance,
    i: VehicleId,
    j: VehicleId,
) -> bool {
    if i == j || matching.contains(i, j) || !instance.acceptable(i, j) {
        return false;
    }
    let would_accept = |x: VehicleId, y: VehicleId| -> bool {
        let partners = matching.partners(x);
        if partners.len() < instance.capacity(x) as usize {
            return true;
        }
        let y_rank = instance.rank(x, y).expect("acceptable");
        partners
            .iter()
            .any(|&p| instance.rank(x, p).map(|r| y_rank < r).unwrap_or(true))
    };
    would_accept(i, j) && would_accept(j, i)
}

/// True iff no blocking pair exists. The matching is assumed to respect
/// capacities and mutual acceptability.
pub fn verify_stability(matching: &Matching, instance: &SfInstance) -> bool {
    let agents: Vec<VehicleId> = instance.agents().collect();
    for (a, &i) in agents.iter().enumerate() {
        for &j in &agents[a + 1..] {
            if is_blocking_pair(matching, instance, i, j) {
                return false;
            }
        }
    }
    true
}

/// Capacity-respecting pairing by descending pair weight; the engine's
/// fallback when the game reports an instance unsolvable.
pub fn greedy_pairing(
    instance: &SfInstance,
    pair_weights: &BTreeMap<(VehicleId, VehicleId), f64>,
) -> Matching {
    let mut pairs = instance.acceptable_pairs();
    pairs.sort_by(|&a, &b| {
        let wa = pair_weights.get(&a).copied().unwrap_or(0.0);
        let wb = pair_weights.get(&b).copied().unwrap_or(0.0);
        wb.total_cmp(&wa).then(a.cmp(&b))
    });
    let mut degrees: BTreeMap<VehicleId, u32> = instance.agents().map(|i| (i, 0)).collect();
    let mut m = Matching::new();
    for (i, j) in pairs {
        if degrees[&i] < instance.capacity(i) && degrees[&j] < instance.capacity(j) {
            m.insert(i, j);
            *degrees.get_mut(&i).unwrap() += 1;
            *degrees.get_mut(&j).unwrap() += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::oracle::brute_force_oracle;
    use super::*;

    fn id(n: u32) -> VehicleId {
        VehicleId(n)
    }

    pub(crate) fn instance(spec: &[(u32, u32, &[u32])]) -> SfInstance {
        let prefs: BTreeMap<VehicleId, Vec<VehicleId>> = spec
            .iter()
            .map(|&(i, _, list)| (id(i), list.iter().map(|&j| id(j)).collect()))
            .collect();
        let capacities = spec.iter().map(|&(i, c, _)| (id(i), c)).collect();
        SfInstance::new(prefs, capacities).unwrap()
    }

    #[test]
    fn mutual_single_entry_lists_bid_both_ways() {
        let inst = instance(&[(1, 1, &[2]), (2, 1, &[1])]);
        let state = sf_phase1(&inst);
        let expected: BTreeSet<_> = [(id(1), id(2)), (id(2), id(1))].into_iter().collect();
        assert_eq!(state.bids(), &expected);
        assert_eq!(state.reduced_preferences()[&id(1)], vec![id(2)]);
        assert_eq!(state.reduced_preferences()[&id(2)], vec![id(1)]);
    }

    #[test]
    fn phase1_deletes_the_outbid_suitor() {
        // All capacity 1; both 2 and 3 court 1, and 1 prefers 2.
        let inst = instance(&[(1, 1, &[2, 3]), (2, 1, &[1, 3]), (3, 1, &[1, 2])]);
        let state = sf_phase1(&inst);
        assert_eq!(state.reduced_preferences()[&id(1)], vec![id(2)]);
        assert!(!state.bids().contains(&(id(3), id(1))));
        // Deletions are applied to both lists.
        assert!(!state.reduced_preferences()[&id(3)].contains(&id(1)));
    }

    #[test]
    fn phase1_deletions_are_symmetric() {
        let inst = instance(&[
            (1, 2, &[2, 3, 4]),
            (2, 1, &[3, 1, 4]),
            (3, 1, &[1, 2, 4]),
            (4, 2, &[2, 1, 3]),
        ]);
        let state = sf_phase1(&inst);
        for (&i, list) in state.reduced_preferences() {
            for &j in list {
                assert!(
                    state.reduced_preferences()[&j].contains(&i),
                    "asymmetric deletion for ({i}, {j})"
                );
            }
        }
    }

    #[test]
    fn two_agent_instance_is_stable() {
        let inst = instance(&[(1, 1, &[2]), (2, 1, &[1])]);
        match solve(&inst) {
            SfOutcome::Stable(m) => {
                assert_eq!(m.len(), 1);
                assert!(m.contains(id(1), id(2)));
            }
            other => panic!("expected stable matching, got {other:?}"),
        }
    }

    #[test]
    fn odd_cycle_is_unsolvable_and_oracle_agrees() {
        let inst = instance(&[(1, 1, &[2, 3]), (2, 1, &[3, 1]), (3, 1, &[1, 2])]);
        assert_eq!(
            solve(&inst),
            SfOutcome::Unsolvable(UnsolvableReason::OddDegreeSum)
        );
        assert!(brute_force_oracle(&inst).unwrap().is_empty());
    }

    #[test]
    fn four_agents_pair_up() {
        let inst = instance(&[
            (1, 1, &[2, 3, 4]),
            (2, 1, &[1, 3, 4]),
            (3, 1, &[4, 1, 2]),
            (4, 1, &[3, 1, 2]),
        ]);
        let expected = Matching::from_pairs([(id(1), id(2)), (id(3), id(4))]).unwrap();
        match solve(&inst) {
            SfOutcome::Stable(m) => assert_eq!(m, expected),
            other => panic!("expected stable matching, got {other:?}"),
        }
        let stable_set = brute_force_oracle(&inst).unwrap();
        assert!(stable_set.contains(&expected));
    }

    #[test]
    fn saturated_triangle_keeps_all_pairs() {
        let inst = instance(&[(1, 2, &[2, 3]), (2, 2, &[1, 3]), (3, 2, &[1, 2])]);
        match solve(&inst) {
            SfOutcome::Stable(m) => {
                assert_eq!(m.len(), 3);
                assert!(verify_stability(&m, &inst));
            }
            other => panic!("expected stable matching, got {other:?}"),
        }
    }

    #[test]
    fn empty_preferences_make_an_empty_stable_matching() {
        let inst = instance(&[(1, 1, &[]), (2, 2, &[])]);
        match solve(&inst) {
            SfOutcome::Stable(m) => {
                assert!(m.is_empty());
                assert!(verify_stability(&m, &inst));
            }
            other => panic!("expected stable matching, got {other:?}"),
        }
    }

    #[test]
    fn saturated_agent_keeps_its_best_suitors() {
        // Agent 0 with capacity 3 and four suitors keeps its three best.
        let inst = instance(&[
            (0, 3, &[1, 2, 3, 4]),
            (1, 1, &[0]),
            (2, 1, &[0]),
            (3, 1, &[0]),
            (4, 1, &[0]),
        ]);
        let expected =
            Matching::from_pairs([(id(0), id(1)), (id(0), id(2)), (id(0), id(3))]).unwrap();
        match solve(&inst) {
            SfOutcome::Stable(m) => assert_eq!(m, expected),
            other => panic!("expected stable matching, got {other:?}"),
        }
        let stable_set = brute_force_oracle(&inst).unwrap();
        assert_eq!(stable_set, vec![expected]);
    }

    #[test]
    fn blocking_pair_cases() {
        let inst = instance(&[(1, 1, &[2, 3]), (2, 1, &[3, 1]), (3, 1, &[1, 2])]);
        let m = Matching::from_pairs([(id(1), id(2))]).unwrap();
        // 2 prefers 3 to its current partner 1, and 3 is unmatched.
        assert!(is_blocking_pair(&m, &inst, id(2), id(3)));
        // A matched pair never blocks itself.
        assert!(!is_blocking_pair(&m, &inst, id(1), id(2)));
        assert!(!verify_stability(&m, &inst));
    }

    #[test]
    fn saturated_top_choices_block_nothing() {
        let inst = instance(&[
            (0, 2, &[1, 2, 3]),
            (1, 1, &[0]),
            (2, 1, &[0]),
            (3, 1, &[0]),
        ]);
        let m = Matching::from_pairs([(id(0), id(1)), (id(0), id(2))]).unwrap();
        for other in [id(1), id(2), id(3)] {
            assert!(!is_blocking_pair(&m, &inst, id(0), other));
        }
        assert!(verify_stability(&m, &inst));
    }

    #[test]
    fn empty_matching_is_unstable_when_pairs_want_each_other() {
        let inst = instance(&[(1, 1, &[2]), (2, 1, &[1])]);
        assert!(!verify_stability(&Matching::new(), &inst));
    }

    #[test]
    fn solve_is_deterministic() {
        let inst = instance(&[
            (1, 2, &[2, 3, 4, 5]),
            (2, 1, &[3, 1, 5, 4]),
            (3, 2, &[1, 2, 4]),
            (4, 1, &[5, 1, 3, 2]),
            (5, 2, &[2, 4, 1]),
        ]);
        let first = solve(&inst);
        for _ in 0..10 {
            assert_eq!(solve(&inst), first);
        }
    }

    #[test]
    fn dump_parse_round_trip() {
        let inst = instance(&[
            (1, 2, &[2, 3]),
            (2, 1, &[3, 1]),
            (3, 2, &[1, 2]),
            (4, 1, &[]),
        ]);
        let text = inst.dump();
        let parsed = SfInstance::parse(&text).unwrap();
        assert_eq!(inst, parsed);
    }

    #[test]
    fn parse_rejects_broken_lines() {
        assert!(matches!(
            SfInstance::parse("1:2"),
            Err(MatchingError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            SfInstance::parse("1:1:2\n2:1:1\n1:1:2"),
            Err(MatchingError::Parse { line: 3, .. })
        ));
        // Non-mutual acceptability caught by instance validation.
        assert!(SfInstance::parse("1:1:2\n2:1:").is_err());
    }

    #[test]
    fn greedy_fallback_respects_capacities() {
        let inst = instance(&[
            (1, 1, &[2, 3]),
            (2, 1, &[3, 1]),
            (3, 1, &[1, 2]),
        ]);
        let weights: BTreeMap<_, _> = [
            ((id(1), id(2)), 1.5),
            ((id(1), id(3)), 1.0),
            ((id(2), id(3)), 1.9),
        ]
        .into_iter()
        .collect();
        let m = greedy_pairing(&inst, &weights);
        assert_eq!(m.len(), 1);
        assert!(m.contains(id(2), id(3)));
        for a in inst.agents() {
            assert!(m.degree(a) <= inst.capacity(a) as usize);
        }
    }
}
