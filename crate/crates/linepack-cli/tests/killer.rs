use linepack::workload::TraceSpec;
use linepack_cli::suite::Suite;
use linepack_cli::{compare, run_policy, PolicyKind};

fn killers(suite: &Suite) -> impl Iterator<Item = &linepack_cli::suite::SuiteEntry> {
    suite.entries.iter().filter(|e| matches!(e.trace, TraceSpec::GreedyKiller { .. }))
}

#[test]
fn router_beats_greedy_on_long_killer_traces() {
    let suite = Suite::bundled();
    let mut seen = 0;
    for e in killers(&suite).filter(|e| !e.calibrate) {
        let cfg = e.config().unwrap();
        let reqs = e.requests();
        let router = run_policy(&cfg, &reqs, PolicyKind::Paper, false).unwrap().summary.delivered_total;
        let greedy = run_policy(&cfg, &reqs, PolicyKind::Greedy, false).unwrap().summary.delivered_total;
        assert!(greedy < router, "{}: greedy {greedy}, router {router}", e.name);
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn greedy_gets_at_most_half_the_optimum() {
    let suite = Suite::bundled();
    let e = suite.entries.iter().find(|e| e.name == "cal-killer-n32").unwrap();
    let rep = compare(&e.config().unwrap(), &e.requests(), PolicyKind::Greedy).unwrap();
    assert!(2.0 * rep.alg as f64 <= rep.frac_opt, "greedy {} against optimum {}", rep.alg, rep.frac_opt);
}
