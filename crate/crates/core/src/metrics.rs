//! Aggregation of per-timeslot reports into the evaluation quantities:
//! link-utilisation CDFs, average exchanged data, average regional access,
//! and the CSV/JSON output files of a run.
//!
//! All aggregations take a slice of results so multi-seed averaging is the
//! same code path as a single run: samples are pooled over every
//! `(seed, timeslot, vehicle)` triple that passes the filter.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::{SimulationResult, VehicleReport};
use crate::vehicle::VehicleKind;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty sample set for filter `{0}`")]
    EmptySampleSet(&'static str),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// Vehicle-kind filter for aggregations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindFilter {
    All,
    Emergency,
    Regular,
}

impl KindFilter {
    pub const EVERY: [KindFilter; 3] = [KindFilter::All, KindFilter::Emergency, KindFilter::Regular];

    pub fn matches(self, kind: VehicleKind) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Emergency => kind == VehicleKind::Emergency,
            KindFilter::Regular => kind == VehicleKind::Regular,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KindFilter::All => "all",
            KindFilter::Emergency => "emergency",
            KindFilter::Regular => "regular",
        }
    }
}

/// Empirical CDF: sorted sample values with cumulative fractions
/// (non-decreasing, ending at 1; duplicates share their final fraction).
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    values: Vec<f64>,
    fractions: Vec<f64>,
}

impl CdfSeries {
    pub fn from_samples(samples: &[f64]) -> Result<Self, MetricsError> {
        if samples.is_empty() {
            return Err(MetricsError::EmptySampleSet("cdf"));
        }
        let mut values = samples.to_vec();
        values.sort_by(|a, b| a.total_cmp(b));
        let n = values.len() as f64;
        let mut fractions = vec![0.0; values.len()];
        let mut idx = 0;
        while idx < values.len() {
            let mut end = idx;
            while end + 1 < values.len() && values[end + 1] == values[idx] {
                end += 1;
            }
            let fraction = (end + 1) as f64 / n;
            for f in fractions.iter_mut().take(end + 1).skip(idx) {
                *f = fraction;
            }
            idx = end + 1;
        }
        Ok(CdfSeries { values, fractions })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn samples<F: Fn(&VehicleReport) -> f64>(
    results: &[SimulationResult],
    filter: KindFilter,
    extract: F,
) -> Vec<f64> {
    let mut out = Vec::new();
    for result in results {
        for report in &result.reports {
            for v in &report.vehicles {
                if filter.matches(v.kind) {
                    out.push(extract(v));
                }
            }
        }
    }
    out
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Empirical CDF of per-(timeslot, vehicle) link utilisation.
pub fn link_utilisation_cdf(
    results: &[SimulationResult],
    filter: KindFilter,
) -> Result<CdfSeries, MetricsError> {
    let s = samples(results, filter, |v| v.utilisation);
    if s.is_empty() {
        return Err(MetricsError::EmptySampleSet(filter.label()));
    }
    CdfSeries::from_samples(&s)
}

/// Mean utilisation over all samples passing the filter.
pub fn mean_utilisation(
    results: &[SimulationResult],
    filter: KindFilter,
) -> Result<f64, MetricsError> {
    mean(&samples(results, filter, |v| v.utilisation))
        .ok_or(MetricsError::EmptySampleSet(filter.label()))
}

/// Mean data exchanged per (timeslot, vehicle) sample, Gbit.
pub fn average_exchanged(
    results: &[SimulationResult],
    filter: KindFilter,
) -> Result<f64, MetricsError> {
    mean(&samples(results, filter, |v| v.data_exchanged_gbit))
        .ok_or(MetricsError::EmptySampleSet(filter.label()))
}

/// Mean regional-data access per (timeslot, vehicle) sample, Gbit.
pub fn average_regional_access(
    results: &[SimulationResult],
    filter: KindFilter,
) -> Result<f64, MetricsError> {
    mean(&samples(results, filter, |v| v.regional_access_gbit))
        .ok_or(MetricsError::EmptySampleSet(filter.label()))
}

pub const REPORT_HEADER: &str =
    "t,id,kind,degree,C_i_gbps,D_i_gbit,utilisation,regional_access_gbit,fallback_flag";

/// Writes the per-run files into `dir`: `report.csv` (one row per timeslot
/// and vehicle), `cdf_<filter>.csv` for each kind filter, `summary.csv` with
/// the pooled means, and `meta.json` with the seed and config digest. Output
/// is byte-stable for identical results.
pub fn write_outputs(result: &SimulationResult, dir: &Path) -> Result<Vec<PathBuf>, MetricsError> {
    std::fs::create_dir_all(dir).map_err(|e| MetricsError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut written = Vec::new();

    let report_path = dir.join("report.csv");
    let mut report = String::from(REPORT_HEADER);
    report.push('\n');
    for slot in &result.reports {
        for v in &slot.vehicles {
            report.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                slot.t,
                v.id,
                v.kind.code(),
                v.degree(),
                v.avg_rate_gbps,
                v.data_exchanged_gbit,
                v.utilisation,
                v.regional_access_gbit,
                u8::from(slot.sf_fallback),
            ));
        }
    }
    write_file(&report_path, report.as_bytes())?;
    written.push(report_path);

    let results = std::slice::from_ref(result);
    for filter in KindFilter::EVERY {
        let path = dir.join(format!("cdf_{}.csv", filter.label()));
        let mut text = String::from("value,fraction\n");
        if let Ok(cdf) = link_utilisation_cdf(results, filter) {
            for (v, f) in cdf.values().iter().zip(cdf.fractions()) {
                text.push_str(&format!("{v},{f}\n"));
            }
        }
        write_file(&path, text.as_bytes())?;
        written.push(path);
    }

    let summary_path = dir.join("summary.csv");
    let mut summary = String::from("filter,metric,value\n");
    for filter in KindFilter::EVERY {
        let rows: [(&str, Result<f64, MetricsError>); 3] = [
            ("mean_utilisation", mean_utilisation(results, filter)),
            ("mean_exchanged_gbit", average_exchanged(results, filter)),
            (
                "mean_regional_access_gbit",
                average_regional_access(results, filter),
            ),
        ];
        for (metric, value) in rows {
            if let Ok(v) = value {
                summary.push_str(&format!("{},{metric},{v}\n", filter.label()));
            }
        }
    }
    write_file(&summary_path, summary.as_bytes())?;
    written.push(summary_path);

    let meta_path = dir.join("meta.json");
    let meta = serde_json::json!({
        "seed": result.meta.seed,
        "config_digest": result.meta.config_digest,
        "vehicle_count": result.meta.vehicle_count,
        "duration_slots": result.meta.duration_slots,
        "slot_duration_s": result.meta.slot_duration_s,
        "fallback_slots": result.meta.fallback_slots,
    });
    let text = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    write_file(&meta_path, text.as_bytes())?;
    written.push(meta_path);

    Ok(written)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), MetricsError> {
    let fail = |e: std::io::Error| MetricsError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut file = std::fs::File::create(path).map_err(fail)?;
    file.write_all(bytes).map_err(fail)?;
    Ok(())
}

/// Per-kind sample counts, mostly for run summaries and sanity checks.
pub fn sample_counts(results: &[SimulationResult]) -> BTreeMap<&'static str, usize> {
    KindFilter::EVERY
        .iter()
        .map(|&f| (f.label(), samples(results, f, |_| 0.0).len()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{RunMetadata, TimeslotReport};
    use crate::vehicle::VehicleId;

    fn vehicle_sample(
        id: u32,
        kind: VehicleKind,
        utilisation: f64,
        exchanged: f64,
        access: f64,
    ) -> VehicleReport {
        VehicleReport {
            id: VehicleId(id),
            kind,
            links: Vec::new(),
            data_exchanged_gbit: exchanged,
            avg_rate_gbps: 0.0,
            utilisation,
            regional_access_gbit: access,
        }
    }

    fn result_with(vehicles: Vec<VehicleReport>) -> SimulationResult {
        SimulationResult {
            reports: vec![TimeslotReport {
                t: 0,
                vehicles,
                sf_fallback: false,
                aggregate_utility: 0.0,
            }],
            meta: RunMetadata {
                seed: 1,
                config_digest: "test".into(),
                vehicle_count: 0,
                duration_slots: 1,
                slot_duration_s: 0.1,
                fallback_slots: 0,
            },
        }
    }

    #[test]
    fn cdf_of_constant_samples_is_one_step() {
        let cdf = CdfSeries::from_samples(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(cdf.values(), &[0.5, 0.5, 0.5]);
        assert!(cdf.fractions().iter().all(|&f| f == 1.0));
    }

    #[test]
    fn cdf_hand_computed_fractions() {
        let cdf = CdfSeries::from_samples(&[0.8, 0.4, 0.2, 0.4]).unwrap();
        assert_eq!(cdf.values(), &[0.2, 0.4, 0.4, 0.8]);
        assert_eq!(cdf.fractions(), &[0.25, 0.75, 0.75, 1.0]);
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let cdf = CdfSeries::from_samples(&[0.9, 0.1, 0.5, 0.3, 0.5]).unwrap();
        let f = cdf.fractions();
        assert!(f.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(*f.last().unwrap(), 1.0);
        assert!(CdfSeries::from_samples(&[]).is_err());
    }

    #[test]
    fn averages_over_filters() {
        let result = result_with(vec![
            vehicle_sample(1, VehicleKind::Emergency, 0.8, 0.6, 3.5),
            vehicle_sample(2, VehicleKind::Regular, 0.4, 0.2, 1.5),
            vehicle_sample(3, VehicleKind::Regular, 0.0, 0.0, 0.0),
        ]);
        let results = [result];
        let all = average_exchanged(&results, KindFilter::All).unwrap();
        assert!((all - 0.26666666666666666).abs() < 1e-12);
        let e = average_exchanged(&results, KindFilter::Emergency).unwrap();
        assert_eq!(e, 0.6);
        let access = average_regional_access(&results, KindFilter::Emergency).unwrap();
        assert_eq!(access, 3.5);
        // Unmatched vehicle contributes a zero: mean over regulars.
        let r = average_regional_access(&results, KindFilter::Regular).unwrap();
        assert_eq!(r, 0.75);
    }

    #[test]
    fn union_of_kind_filters_reproduces_all() {
        let result = result_with(vec![
            vehicle_sample(1, VehicleKind::Emergency, 0.8, 0.6, 3.5),
            vehicle_sample(2, VehicleKind::Regular, 0.4, 0.2, 1.5),
        ]);
        let results = [result];
        let counts = sample_counts(&results);
        assert_eq!(counts["all"], counts["emergency"] + counts["regular"]);
        let all_mean = mean_utilisation(&results, KindFilter::All).unwrap();
        let e = mean_utilisation(&results, KindFilter::Emergency).unwrap();
        let r = mean_utilisation(&results, KindFilter::Regular).unwrap();
        let weighted = (e * counts["emergency"] as f64 + r * counts["regular"] as f64)
            / counts["all"] as f64;
        assert!((all_mean - weighted).abs() < 1e-12);
    }

    #[test]
    fn empty_filter_is_an_error() {
        let result = result_with(vec![vehicle_sample(1, VehicleKind::Regular, 0.4, 0.2, 1.0)]);
        assert!(average_exchanged(&[result], KindFilter::Emergency).is_err());
    }

    #[test]
    fn outputs_are_written_and_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let result = result_with(vec![
            vehicle_sample(1, VehicleKind::Emergency, 0.8, 0.6, 3.5),
            vehicle_sample(2, VehicleKind::Regular, 0.4, 0.2, 1.5),
        ]);

        let first = write_outputs(&result, dir.path()).unwrap();
        assert_eq!(first.len(), 6);
        let snapshot: Vec<Vec<u8>> = first
            .iter()
            .map(|p| std::fs::read(p).unwrap())
            .collect();

        let second = write_outputs(&result, dir.path()).unwrap();
        for (path, expected) in second.iter().zip(&snapshot) {
            assert_eq!(&std::fs::read(path).unwrap(), expected);
        }

        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        // 3 filters x 3 metrics, all non-empty here.
        assert_eq!(summary.lines().count(), 1 + 9);
    }

    #[test]
    fn empty_results_still_produce_valid_files() {
        let dir = tempfile::tempdir().unwrap();
        let result = result_with(Vec::new());
        write_outputs(&result, dir.path()).unwrap();
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 1);
        let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert_eq!(report.trim(), REPORT_HEADER);
    }
}
