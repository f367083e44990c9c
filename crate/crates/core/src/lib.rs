//! Discrete-timeslot simulator of many-to-many 60 GHz V2V link association
//! between connected autonomous vehicles.
//!
//! The crate is organised around one simulation pipeline:
//!
//! * [`scenario`] — Manhattan-grid road geometry, synthetic mobility traces
//!   (or trace CSV ingestion), line-of-sight and proximity queries.
//! * [`channel`] — 60 GHz link budget: antenna gain, path loss, log-normal
//!   shadowing, noise, optional beam-sector interference, and the
//!   SINR → MCS → rate mapping.
//! * [`utility`] — per-pair utilities built from vehicle type, regional
//!   generated data and a direction/distance score, plus strict preference
//!   lists.
//! * [`matching`] — the Stable Fixtures game (two phases with rotation
//!   elimination), stability verification and an exhaustive oracle for
//!   small instances.
//! * [`engine`] — per-timeslot orchestration: snapshot, effective
//!   capacities, matching, half-duplex link scheduling and data-exchange
//!   accounting.
//! * [`metrics`] — aggregation of per-timeslot reports into link-utilisation
//!   CDFs, exchanged-data and regional-access averages, and CSV output.
//! * [`config`] — the single TOML run configuration with radio defaults.

pub mod channel;
pub mod config;
pub mod engine;
pub mod matching;
pub mod metrics;
pub mod scenario;
pub mod utility;
pub mod vehicle;

pub use vehicle::{VehicleId, VehicleKind, VehicleState};
