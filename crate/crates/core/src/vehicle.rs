//! Vehicle identity and per-timeslot kinematic state.

use serde::{Deserialize, Serialize};

use crate::scenario::geometry::Point;

/// Unique vehicle identifier within one scenario.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct VehicleId(pub u32);

impl std::fmt::Display for VehicleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Vehicle class. Emergency vehicles are prioritised by the utility model
/// and move at twice the regular base speed in generated traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VehicleKind {
    Emergency,
    Regular,
}

impl VehicleKind {
    /// Single-letter code used by the trace CSV format.
    pub fn code(self) -> &'static str {
        match self {
            VehicleKind::Emergency => "E",
            VehicleKind::Regular => "R",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "E" => Some(VehicleKind::Emergency),
            "R" => Some(VehicleKind::Regular),
            _ => None,
        }
    }
}

impl std::fmt::Display for VehicleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

/// Pose, kinematics and generated sensor data of one vehicle at one timeslot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub kind: VehicleKind,
    pub position: Point,
    /// Heading in radians, normalised to `[0, 2*pi)`.
    pub heading: f64,
    /// Speed in m/s.
    pub speed: f64,
    /// Sensor data generated this timeslot, in Gbit. Always `> 0`;
    /// emergency vehicles generate exactly 1 Gbit per timeslot.
    pub generated_gbit: f64,
}

impl VehicleState {
    pub fn distance_to(&self, other: &VehicleState) -> f64 {
        self.position.distance(other.position)
    }
}
