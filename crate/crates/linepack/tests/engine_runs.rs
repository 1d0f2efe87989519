use linepack::execlog::{verify_log, write_log};
use linepack::model::Overrides;
use linepack::router::run_paper;
use linepack::workload::{gen_crossing, gen_uniform};
use linepack::{validate_config, NetConfig, RawConfig};

fn small_tiles(n: u64, horizon: u64, side: u32) -> NetConfig {
    validate_config(&RawConfig::new(n, 5, 5, horizon).with_overrides(Overrides { k: Some(2), lh: Some(side), lv: Some(side) })).unwrap()
}

fn check(cfg: &NetConfig, reqs: &[linepack::Request]) -> linepack::Summary {
    let out = run_paper(cfg, reqs, true).unwrap_or_else(|e| panic!("{e}"));
    assert_eq!(out.summary.accepted_total, out.summary.delivered_total);
    assert!(out.summary.violations.is_empty());
    verify_log(&write_log(&out.events)).unwrap_or_else(|e| panic!("{e}"));
    out.summary
}

#[test]
fn far_heavy_uniform_runs_clean() {
    for seed in 0..6 {
        let cfg = small_tiles(40, 300, 12);
        let s = check(&cfg, &gen_uniform(40, 300, 4.0, seed));
        let far: u64 = (1..=4).map(|j| s.per_class.get(&format!("far{j}")).map_or(0, |c| c.accepted)).sum();
        assert!(far > 0, "seed {seed}: no far traffic accepted");
    }
}

#[test]
fn crossing_saturation_runs_clean() {
    for seed in 0..4 {
        let cfg = small_tiles(48, 300, 12);
        check(&cfg, &gen_crossing(48, 300, 6.0, seed));
    }
}

#[test]
fn mixed_capacities_and_sides() {
    let mut far_total = 0;
    for (b, c, k, lh, lv) in [(10, 5, 2, 12, 6), (5, 10, 2, 6, 12), (15, 15, 3, 6, 6), (5, 5, 3, 18, 18), (10, 10, 4, 12, 12), (5, 5, 1, 6, 6)] {
        let cfg = validate_config(&RawConfig::new(40, b, c, 250).with_overrides(Overrides { k: Some(k), lh: Some(lh), lv: Some(lv) })).unwrap();
        for seed in 0..3 {
            let s = check(&cfg, &gen_uniform(40, 250, 6.0, seed));
            far_total += (1..=4).map(|j| s.per_class.get(&format!("far{j}")).map_or(0, |c| c.accepted)).sum::<u64>();
            let s = check(&cfg, &gen_crossing(40, 250, 8.0, seed));
            far_total += (1..=4).map(|j| s.per_class.get(&format!("far{j}")).map_or(0, |c| c.accepted)).sum::<u64>();
        }
    }
    println!("far accepted: {far_total}");
    assert!(far_total > 1000);
}
