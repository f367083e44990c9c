//! Mobility trace container and its CSV interchange format.
//!
//! One row per `(timeslot, vehicle)`:
//! `t,id,kind,x,y,heading,speed,g` with `kind` in `{E, R}`, SI units,
//! heading in radians and a mandatory header row. Floats are written with
//! Rust's shortest round-trip formatting, so save → load is the identity.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::scenario::geometry::{Geometry, Point};
use crate::scenario::ScenarioError;
use crate::vehicle::{VehicleId, VehicleKind, VehicleState};

pub const TRACE_HEADER: [&str; 8] = ["t", "id", "kind", "x", "y", "heading", "speed", "g"];

/// What to do with a trace sample whose position is not on a road.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffRoadPolicy {
    /// Log a warning and keep the sample.
    #[default]
    Warn,
    /// Reject the trace file.
    Reject,
}

/// All vehicle states of one scenario, indexed by `(timeslot, vehicle id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    slot_duration_s: f64,
    samples: BTreeMap<(u32, VehicleId), VehicleState>,
}

impl TraceSet {
    pub fn new(slot_duration_s: f64) -> Result<Self, ScenarioError> {
        if !(slot_duration_s > 0.0) {
            return Err(ScenarioError::InvalidTrace(
                "slot duration must be > 0".into(),
            ));
        }
        Ok(TraceSet {
            slot_duration_s,
            samples: BTreeMap::new(),
        })
    }

    pub fn slot_duration_s(&self) -> f64 {
        self.slot_duration_s
    }

    pub fn insert(&mut self, t: u32, state: VehicleState) {
        self.samples.insert((t, state.id), state);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of timeslots (largest slot index + 1).
    pub fn num_slots(&self) -> u32 {
        self.samples
            .keys()
            .next_back()
            .map(|&(t, _)| t + 1)
            .unwrap_or(0)
    }

    pub fn get(&self, t: u32, id: VehicleId) -> Option<&VehicleState> {
        self.samples.get(&(t, id))
    }

    /// States of all vehicles alive at `t`, in ascending id order.
    pub fn vehicles_at(&self, t: u32) -> impl Iterator<Item = &VehicleState> {
        self.samples
            .range((t, VehicleId(u32::MIN))..=(t, VehicleId(u32::MAX)))
            .map(|(_, s)| s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, VehicleId), &VehicleState)> {
        self.samples.iter()
    }

    /// Checks the structural invariants: positive generated data, emergency
    /// vehicles generating exactly 1 Gbit per slot, contiguous lifetimes and
    /// on-road positions (subject to `policy`).
    pub fn validate(
        &self,
        geometry: &Geometry,
        policy: OffRoadPolicy,
    ) -> Result<(), ScenarioError> {
        let mut spans: BTreeMap<VehicleId, (u32, u32, u32)> = BTreeMap::new(); // (min, max, count)
        for (&(t, id), state) in &self.samples {
            if !(state.generated_gbit > 0.0) {
                return Err(ScenarioError::InvalidTrace(format!(
                    "vehicle {id} at slot {t}: generated data must be > 0"
                )));
            }
            if state.kind == VehicleKind::Emergency && (state.generated_gbit - 1.0).abs() > 1e-9 {
                return Err(ScenarioError::InvalidTrace(format!(
                    "vehicle {id} at slot {t}: emergency vehicles generate 1 Gbit per slot"
                )));
            }
            if !geometry.is_on_road(state.position) {
                match policy {
                    OffRoadPolicy::Warn => log::warn!(
                        "vehicle {id} at slot {t}: position ({}, {}) is off-road",
                        state.position.x,
                        state.position.y
                    ),
                    OffRoadPolicy::Reject => {
                        return Err(ScenarioError::InvalidTrace(format!(
                            "vehicle {id} at slot {t}: position off-road"
                        )))
                    }
                }
            }
            spans
                .entry(id)
                .and_modify(|(lo, hi, n)| {
                    *lo = (*lo).min(t);
                    *hi = (*hi).max(t);
                    *n += 1;
                })
                .or_insert((t, t, 1));
        }
        for (id, (lo, hi, n)) in spans {
            if hi - lo + 1 != n {
                return Err(ScenarioError::InvalidTrace(format!(
                    "vehicle {id}: missing samples between slots {lo} and {hi}"
                )));
            }
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), ScenarioError> {
        let file = std::fs::File::create(path)
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(file)
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(TRACE_HEADER)?;
        for (&(t, _), s) in &self.samples {
            wtr.write_record([
                t.to_string(),
                s.id.to_string(),
                s.kind.code().to_string(),
                s.position.x.to_string(),
                s.position.y.to_string(),
                s.heading.to_string(),
                s.speed.to_string(),
                s.generated_gbit.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load_csv(
        path: &Path,
        slot_duration_s: f64,
        geometry: &Geometry,
        policy: OffRoadPolicy,
    ) -> Result<Self, ScenarioError> {
        let file = std::fs::File::open(path)
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::read_csv(file, slot_duration_s, geometry, policy)
    }

    pub fn read_csv<R: Read>(
        reader: R,
        slot_duration_s: f64,
        geometry: &Geometry,
        policy: OffRoadPolicy,
    ) -> Result<Self, ScenarioError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        {
            let headers = rdr
                .headers()
                .map_err(|e| ScenarioError::Parse {
                    line: 1,
                    message: e.to_string(),
                })?
                .clone();
            if headers.iter().collect::<Vec<_>>() != TRACE_HEADER {
                return Err(ScenarioError::Parse {
                    line: 1,
                    message: format!(
                        "expected header {:?}, got {:?}",
                        TRACE_HEADER.join(","),
                        headers.iter().collect::<Vec<_>>().join(",")
                    ),
                });
            }
        }

        let mut traces = TraceSet::new(slot_duration_s)?;
        for record in rdr.records() {
            let record = record.map_err(|e| ScenarioError::Parse {
                line: e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or_default(),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or_default();
            let fail = |message: String| ScenarioError::Parse { line, message };
            if record.len() != TRACE_HEADER.len() {
                return Err(fail(format!(
                    "expected {} fields, got {}",
                    TRACE_HEADER.len(),
                    record.len()
                )));
            }
            let field = |idx: usize| record.get(idx).unwrap_or_default();
            let parse_f64 = |idx: usize| -> Result<f64, ScenarioError> {
                field(idx)
                    .parse::<f64>()
                    .map_err(|e| fail(format!("field `{}`: {e}", TRACE_HEADER[idx])))
            };
            let t: u32 = field(0)
                .parse()
                .map_err(|e| fail(format!("field `t`: {e}")))?;
            let id: u32 = field(1)
                .parse()
                .map_err(|e| fail(format!("field `id`: {e}")))?;
            let kind = VehicleKind::from_code(field(2))
                .ok_or_else(|| fail(format!("field `kind`: expected E or R, got `{}`", field(2))))?;
            let x = parse_f64(3)?;
            let y = parse_f64(4)?;
            let heading = parse_f64(5)?;
            let speed = parse_f64(6)?;
            let g = parse_f64(7)?;
            if !(g > 0.0) {
                return Err(fail(format!("field `g`: must be > 0, got {g}")));
            }
            if !heading.is_finite() || !speed.is_finite() {
                return Err(fail("heading and speed must be finite".into()));
            }
            let state = VehicleState {
                id: VehicleId(id),
                kind,
                position: Point::new(x, y),
                heading: heading.rem_euclid(std::f64::consts::TAU),
                speed,
                generated_gbit: g,
            };
            if traces.samples.insert((t, state.id), state).is_some() {
                return Err(fail(format!("duplicate sample for slot {t}, vehicle {id}")));
            }
        }
        traces.validate(geometry, policy)?;
        Ok(traces)
    }
}
