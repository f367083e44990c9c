//! Exhaustive stability oracle and a random-instance generator.
//!
//! The oracle enumerates every capacity-respecting subset of the acceptable
//! pairs and keeps those without blocking pairs. Exponential in the pair
//! count, so it is guarded to small agent counts; it exists to check the
//! game, never to replace it.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::vehicle::VehicleId;

use super::{solve, verify_stability, Matching, MatchingError, SfInstance, SfOutcome};

pub const ORACLE_MAX_AGENTS: usize = 8;

/// All stable matchings of the instance, in ascending order.
pub fn brute_force_oracle(instance: &SfInstance) -> Result<Vec<Matching>, MatchingError> {
    if instance.len() > ORACLE_MAX_AGENTS {
        return Err(MatchingError::InstanceTooLarge(
            instance.len(),
            ORACLE_MAX_AGENTS,
        ));
    }
    let pairs = instance.acceptable_pairs();
    let mut degrees: BTreeMap<VehicleId, u32> = instance.agents().map(|i| (i, 0)).collect();
    let mut chosen: Vec<(VehicleId, VehicleId)> = Vec::new();
    let mut stable = Vec::new();
    enumerate(instance, &pairs, 0, &mut degrees, &mut chosen, &mut stable);
    stable.sort();
    Ok(stable)
}

fn enumerate(
    instance: &SfInstance,
    pairs: &[(VehicleId, VehicleId)],
    idx: usize,
    degrees: &mut BTreeMap<VehicleId, u32>,
    chosen: &mut Vec<(VehicleId, VehicleId)>,
    stable: &mut Vec<Matching>,
) {
    if idx == pairs.len() {
        let m = Matching::from_pairs(chosen.iter().copied()).expect("pairs are valid");
        if verify_stability(&m, instance) {
            stable.push(m);
        }
        return;
    }
    let (i, j) = pairs[idx];

    enumerate(instance, pairs, idx + 1, degrees, chosen, stable);

    if degrees[&i] < instance.capacity(i) && degrees[&j] < instance.capacity(j) {
        *degrees.get_mut(&i).unwrap() += 1;
        *degrees.get_mut(&j).unwrap() += 1;
        chosen.push((i, j));
        enumerate(instance, pairs, idx + 1, degrees, chosen, stable);
        chosen.pop();
        *degrees.get_mut(&i).unwrap() -= 1;
        *degrees.get_mut(&j).unwrap() -= 1;
    }
}

/// Uniformly random instance: 2..=max_n agents, random mutual acceptability,
/// random strict orders, capacities in 1..=max_capacity.
pub fn random_instance<R: Rng>(rng: &mut R, max_n: u32, max_capacity: u32) -> SfInstance {
    let n = rng.random_range(2..=max_n.max(2));
    let edge_prob = rng.random_range(0.3..0.95);
    let ids: Vec<VehicleId> = (0..n).map(VehicleId).collect();

    let mut acceptable: BTreeMap<VehicleId, Vec<VehicleId>> =
        ids.iter().map(|&i| (i, Vec::new())).collect();
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            if rng.random_bool(edge_prob) {
                acceptable.get_mut(&i).unwrap().push(j);
                acceptable.get_mut(&j).unwrap().push(i);
            }
        }
    }
    for list in acceptable.values_mut() {
        list.shuffle(rng);
    }
    let capacities = ids
        .iter()
        .map(|&i| (i, rng.random_range(1..=max_capacity.max(1))))
        .collect();
    SfInstance::new(acceptable, capacities).expect("generated instance is valid")
}

/// Counters from a randomized comparison of the game against the oracle.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct VerificationStats {
    pub instances: u64,
    pub stable_outcomes: u64,
    /// Game returned a matching that fails stability verification.
    pub soundness_failures: u64,
    /// Game returned a matching not present in the oracle's stable set.
    pub oracle_mismatches: u64,
    pub unsolvable_odd: u64,
    pub unsolvable_short: u64,
    /// Game reported unsolvable although the oracle found a stable matching.
    pub deviations: u64,
    /// Phase 1 deleted a pair belonging to some oracle-stable matching.
    pub phase1_lost_pairs: u64,
}

/// Runs `instances` random instances through [`solve`] and the oracle.
pub fn verify_against_oracle<R: Rng>(
    rng: &mut R,
    instances: u64,
    max_n: u32,
    max_capacity: u32,
) -> VerificationStats {
    let mut stats = VerificationStats::default();
    for _ in 0..instances {
        stats.instances += 1;
        let inst = random_instance(rng, max_n, max_capacity);
        let stable_set = brute_force_oracle(&inst).expect("bounded instance");
        match solve(&inst) {
            SfOutcome::Stable(m) => {
                stats.stable_outcomes += 1;
                if !verify_stability(&m, &inst) {
                    stats.soundness_failures += 1;
                }
                if !stable_set.contains(&m) {
                    stats.oracle_mismatches += 1;
                }
            }
            SfOutcome::Unsolvable(reason) => {
                match reason {
                    super::UnsolvableReason::OddDegreeSum => stats.unsolvable_odd += 1,
                    super::UnsolvableReason::ShortList => stats.unsolvable_short += 1,
                }
                if !stable_set.is_empty() {
                    stats.deviations += 1;
                }
            }
        }
        // Phase 1 must never delete a pair that some stable matching uses.
        if !stable_set.is_empty() {
            let reduced = super::sf_phase1(&inst);
            for m in &stable_set {
                for (a, b) in m.iter() {
                    if !reduced.reduced_preferences()[&a].contains(&b) {
                        stats.phase1_lost_pairs += 1;
                    }
                }
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::super::tests::instance;
    use super::super::is_blocking_pair;
    use super::*;
    use rand::SeedableRng;

    fn id(n: u32) -> VehicleId {
        VehicleId(n)
    }

    #[test]
    fn two_agent_oracle() {
        let inst = instance(&[(1, 1, &[2]), (2, 1, &[1])]);
        let stable = brute_force_oracle(&inst).unwrap();
        assert_eq!(
            stable,
            vec![Matching::from_pairs([(id(1), id(2))]).unwrap()]
        );
    }

    #[test]
    fn odd_cycle_has_no_stable_matching() {
        let inst = instance(&[(1, 1, &[2, 3]), (2, 1, &[3, 1]), (3, 1, &[1, 2])]);
        assert!(brute_force_oracle(&inst).unwrap().is_empty());
        // Exhaustively: each of the four capacity-respecting matchings is
        // blocked by some pair.
        let m12 = Matching::from_pairs([(id(1), id(2))]).unwrap();
        assert!(is_blocking_pair(&m12, &inst, id(2), id(3)));
    }

    #[test]
    fn four_agent_oracle_contains_the_pairing() {
        let inst = instance(&[
            (1, 1, &[2, 3, 4]),
            (2, 1, &[1, 3, 4]),
            (3, 1, &[4, 1, 2]),
            (4, 1, &[3, 1, 2]),
        ]);
        let stable = brute_force_oracle(&inst).unwrap();
        let expected = Matching::from_pairs([(id(1), id(2)), (id(3), id(4))]).unwrap();
        assert!(stable.contains(&expected));
    }

    #[test]
    fn oversized_instances_are_rejected() {
        let spec: Vec<(u32, u32, Vec<u32>)> = (0..9)
            .map(|i| (i, 1, (0..9).filter(|&j| j != i).collect()))
            .collect();
        let borrowed: Vec<(u32, u32, &[u32])> = spec
            .iter()
            .map(|(i, c, l)| (*i, *c, l.as_slice()))
            .collect();
        let inst = instance(&borrowed);
        assert!(matches!(
            brute_force_oracle(&inst),
            Err(MatchingError::InstanceTooLarge(9, _))
        ));
    }

    #[test]
    fn quick_randomized_soundness() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(20260809);
        let stats = verify_against_oracle(&mut rng, 1000, 6, 3);
        assert_eq!(stats.soundness_failures, 0, "{stats:?}");
        assert_eq!(stats.oracle_mismatches, 0, "{stats:?}");
        assert_eq!(stats.phase1_lost_pairs, 0, "{stats:?}");
        assert!(stats.stable_outcomes > 0);
    }
}
