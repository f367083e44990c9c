// Scratch calibration sweep over mobility knobs; not part of the deliverable.
use mmv2v_core::config::RunConfig;
use mmv2v_core::engine::run_scenario;
use mmv2v_core::metrics::{
    average_exchanged, average_regional_access, mean_utilisation, KindFilter,
};

fn main() {
    let seeds: Vec<u64> = (1..=10).collect();
    println!("size head turn | util c1..c4 (strict?) | D ratio c2 c3 c4 | A20 all/e  A40 all/e | ok?");
    for &platoon in &[1u32, 2, 3, 4, 5] {
        for &headway in &[8.0f64, 12.0, 16.0] {
            for &turn in &[0.0f64, 0.1] {
                let run = |c: u32, r: f64| -> Vec<_> {
                    let mut cfg = RunConfig::default();
                    cfg.matching.capacity = c;
                    cfg.utility.radius_m = r;
                    cfg.scenario.platoon_size = platoon;
                    cfg.scenario.headway_m = headway;
                    cfg.scenario.turn_probability = turn;
                    seeds.iter().map(|&s| run_scenario(&cfg, s).unwrap()).collect()
                };
                let mut utils = Vec::new();
                let mut ratios = Vec::new();
                for c in 1..=4 {
                    let results = run(c, 20.0);
                    utils.push(mean_utilisation(&results, KindFilter::All).unwrap());
                    let d_all = average_exchanged(&results, KindFilter::All).unwrap();
                    let d_e = average_exchanged(&results, KindFilter::Emergency).unwrap();
                    ratios.push(d_e / d_all);
                }
                let r20 = run(4, 20.0);
                let r40 = run(4, 40.0);
                let a20_all = average_regional_access(&r20, KindFilter::All).unwrap();
                let a20_e = average_regional_access(&r20, KindFilter::Emergency).unwrap();
                let a40_all = average_regional_access(&r40, KindFilter::All).unwrap();
                let a40_e = average_regional_access(&r40, KindFilter::Emergency).unwrap();
                let strict = utils.windows(2).all(|w| w[0] < w[1]);
                let c5 = ratios[0] >= 0.8 && ratios[0] <= 1.2 && ratios[1..].iter().all(|&r| r >= 1.0);
                let c6 = a20_e > a20_all
                    && a40_e > a40_all
                    && a40_all > a20_all
                    && a40_e > a20_e
                    && [a20_all, a20_e, a40_all, a40_e].iter().all(|&a| (2.0..=10.0).contains(&a));
                let ok = strict && c5 && c6;
                println!(
                    "{platoon:4} {headway:4} {turn:4} | {:.3} {:.3} {:.3} {:.3} ({}) | {:.3} {:.3} {:.3} | {a20_all:.2}/{a20_e:.2} {a40_all:.2}/{a40_e:.2} | {}",
                    utils[0], utils[1], utils[2], utils[3],
                    if strict { "Y" } else { "n" },
                    ratios[1], ratios[2], ratios[3],
                    if ok { "PASS" } else { "-" }
                );
            }
        }
    }
}
