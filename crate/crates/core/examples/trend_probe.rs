// Scratch probe for trend calibration; not part of the deliverable surface.
use mmv2v_core::config::RunConfig;
use mmv2v_core::engine::run_scenario;
use mmv2v_core::metrics::{
    average_exchanged, average_regional_access, mean_utilisation, KindFilter,
};

fn main() {
    let seeds: Vec<u64> = (1..=10).collect();
    println!("== utilisation vs capacity (R=20, theta=15) ==");
    for c in 1..=4u32 {
        let mut cfg = RunConfig::default();
        cfg.matching.capacity = c;
        cfg.utility.radius_m = 20.0;
        let results: Vec<_> = seeds
            .iter()
            .map(|&s| run_scenario(&cfg, s).unwrap())
            .collect();
        let util = mean_utilisation(&results, KindFilter::All).unwrap();
        let d_all = average_exchanged(&results, KindFilter::All).unwrap();
        let d_e = average_exchanged(&results, KindFilter::Emergency).unwrap();
        let a_all = average_regional_access(&results, KindFilter::All).unwrap();
        let a_e = average_regional_access(&results, KindFilter::Emergency).unwrap();
        let fallbacks: u32 = results.iter().map(|r| r.meta.fallback_slots).sum();
        let deg_of = |emergency: Option<bool>| -> (f64, f64) {
            let vehicles: Vec<_> = results
                .iter()
                .flat_map(|r| &r.reports)
                .flat_map(|t| &t.vehicles)
                .filter(|v| {
                    emergency
                        .map(|e| {
                            (v.kind == mmv2v_core::VehicleKind::Emergency) == e
                        })
                        .unwrap_or(true)
                })
                .collect();
            let mean_deg = vehicles.iter().map(|v| v.degree() as f64).sum::<f64>()
                / vehicles.len() as f64;
            let matched =
                vehicles.iter().filter(|v| v.degree() > 0).count() as f64 / vehicles.len() as f64;
            (mean_deg, matched)
        };
        let (deg_all, cov_all) = deg_of(None);
        let (deg_e, cov_e) = deg_of(Some(true));
        println!(
            "c={c}: util={util:.4} D_all={d_all:.4} D_e={d_e:.4} (ratio {:.3}) A_all={a_all:.3} A_e={a_e:.3} deg={deg_all:.2}/{deg_e:.2} cov={cov_all:.2}/{cov_e:.2} fb={fallbacks}",
            d_e / d_all
        );
    }
    println!("== regional access at c=4, R in {{20, 40}} ==");
    for r in [20.0, 40.0] {
        let mut cfg = RunConfig::default();
        cfg.matching.capacity = 4;
        cfg.utility.radius_m = r;
        let results: Vec<_> = seeds
            .iter()
            .map(|&s| run_scenario(&cfg, s).unwrap())
            .collect();
        let a_all = average_regional_access(&results, KindFilter::All).unwrap();
        let a_e = average_regional_access(&results, KindFilter::Emergency).unwrap();
        println!("R={r}: A_all={a_all:.3} A_e={a_e:.3}");
    }
}
