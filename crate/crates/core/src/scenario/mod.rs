//! Road geometry, mobility traces and proximity queries.

pub mod geometry;
pub mod mobility;
pub mod trace;

use thiserror::Error;

pub use geometry::{build_manhattan_grid, Axis, Geometry, GeometryConfig, Point, Rect, Road};
pub use mobility::{generate_traces, MobilityConfig};
pub use trace::{OffRoadPolicy, TraceSet};

use crate::vehicle::VehicleId;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("trace parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
    #[error("io error: {0}")]
    Io(String),
}

/// Ids of all vehicles within the closed ball of radius `radius_m` around
/// vehicle `i` at slot `t`, sorted by ascending distance with ties broken by
/// ascending id. The boundary `d == radius_m` counts as inside.
pub fn neighbors_in_radius(
    traces: &TraceSet,
    t: u32,
    i: VehicleId,
    radius_m: f64,
) -> Result<Vec<VehicleId>, ScenarioError> {
    let me = traces.get(t, i).ok_or(ScenarioError::UnknownVehicle(i))?;
    let mut found: Vec<(f64, VehicleId)> = traces
        .vehicles_at(t)
        .filter(|s| s.id != i)
        .filter_map(|s| {
            let d = me.distance_to(s);
            (d <= radius_m).then_some((d, s.id))
        })
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(found.into_iter().map(|(_, id)| id).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::{VehicleKind, VehicleState};

    fn traces_with(positions: &[(u32, f64, f64)]) -> TraceSet {
        let mut t = TraceSet::new(0.1).unwrap();
        for &(id, x, y) in positions {
            t.insert(
                0,
                VehicleState {
                    id: VehicleId(id),
                    kind: VehicleKind::Regular,
                    position: Point::new(x, y),
                    heading: 0.0,
                    speed: 8.0,
                    generated_gbit: 0.5,
                },
            );
        }
        t
    }

    #[test]
    fn single_vehicle_has_no_neighbors() {
        let traces = traces_with(&[(1, 10.0, 50.0)]);
        assert!(neighbors_in_radius(&traces, 0, VehicleId(1), 20.0)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn boundary_distance_counts_as_inside() {
        let traces = traces_with(&[(1, 10.0, 50.0), (2, 30.0, 50.0)]);
        let n = neighbors_in_radius(&traces, 0, VehicleId(1), 20.0).unwrap();
        assert_eq!(n, vec![VehicleId(2)]);
    }

    #[test]
    fn unknown_vehicle_is_an_error() {
        let traces = traces_with(&[(1, 10.0, 50.0)]);
        assert!(neighbors_in_radius(&traces, 0, VehicleId(9), 20.0).is_err());
    }

    #[test]
    fn matches_exhaustive_distance_scan() {
        use crate::scenario::geometry::{build_manhattan_grid, GeometryConfig};
        let g = build_manhattan_grid(&GeometryConfig::default()).unwrap();
        let traces = generate_traces(&g, &MobilityConfig::default(), 7).unwrap();
        for t in [0, 50, 150] {
            for me in traces.vehicles_at(t).collect::<Vec<_>>() {
                let fast = neighbors_in_radius(&traces, t, me.id, 20.0).unwrap();
                let mut brute: Vec<(f64, VehicleId)> = traces
                    .vehicles_at(t)
                    .filter(|s| s.id != me.id && me.distance_to(s) <= 20.0)
                    .map(|s| (me.distance_to(s), s.id))
                    .collect();
                brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                assert_eq!(fast, brute.into_iter().map(|(_, id)| id).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn radius_monotonicity() {
        let traces = traces_with(&[(1, 10.0, 50.0), (2, 18.0, 50.0), (3, 40.0, 50.0)]);
        let small = neighbors_in_radius(&traces, 0, VehicleId(1), 10.0).unwrap();
        let large = neighbors_in_radius(&traces, 0, VehicleId(1), 31.0).unwrap();
        for id in &small {
            assert!(large.contains(id));
        }
    }
}
