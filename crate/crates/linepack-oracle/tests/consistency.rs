use linepack::Request;
use linepack_oracle::{
    arc_lp_opt, cut_upper_bound, fractional_opt, fractional_opt_with, integral_opt, verify_flow, Limits, LpMethod, Network,
};

const CAP: u64 = 2_000_000;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

fn random_instance(rng: &mut ChaCha8Rng, n: usize, count: usize, window: u64) -> Vec<Request> {
    let mut reqs: Vec<Request> = (0..count)
        .map(|_| {
            let src = rng.random_range(0..n - 1);
            let dst = rng.random_range(src + 1..n);
            Request { id: 0, src, dst, t: rng.random_range(0..window) }
        })
        .collect();
    reqs.sort_by_key(|r| r.t);
    for (i, r) in reqs.iter_mut().enumerate() {
        r.id = i as u64;
    }
    reqs
}

fn check(net: &Network, reqs: &[Request], horizon: u64) {
    let frac = fractional_opt(net, reqs, horizon, None).unwrap();
    verify_flow(net, reqs, &frac).unwrap();
    let int = integral_opt(net, reqs, horizon, Limits::default()).unwrap();
    verify_flow(net, reqs, &int.to_flow(reqs)).unwrap();
    let cut = cut_upper_bound(net, reqs, horizon);
    assert!(int.count as f64 <= frac.objective + TOL, "integral {} > fractional {}", int.count, frac.objective);
    assert!(frac.objective <= cut as f64 + TOL, "fractional {} > cut {cut}", frac.objective);
    let arc = arc_lp_opt(net, reqs, horizon, None).unwrap();
    assert!((arc - frac.objective).abs() < TOL, "per-request LP {arc} vs {}", frac.objective);
    both_methods_agree(net, reqs, horizon, None);
}

fn both_methods_agree(net: &Network, reqs: &[Request], horizon: u64, bound: Option<u64>) -> f64 {
    let paths = fractional_opt_with(net, reqs, horizon, bound, LpMethod::Paths, CAP).unwrap();
    let arcs = fractional_opt_with(net, reqs, horizon, bound, LpMethod::Arcs, CAP).unwrap();
    verify_flow(net, reqs, &paths).unwrap();
    verify_flow(net, reqs, &arcs).unwrap();
    assert!((paths.objective - arcs.objective).abs() < TOL, "paths {} vs arcs {}", paths.objective, arcs.objective);
    paths.objective
}

#[test]
fn tiny_suite_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..300 {
        let n = rng.random_range(2..=6);
        let net = Network::new(n, rng.random_range(1..=3), rng.random_range(1..=3));
        let count = rng.random_range(1..=10);
        let horizon = rng.random_range(4..=14);
        let reqs = random_instance(&mut rng, n, count, horizon.min(4));
        eprintln!("case {case}: {net:?} h={horizon} {reqs:?}");
        check(&net, &reqs, horizon);
    }
}

#[test]
fn eight_requests_on_four_nodes() {
    let net = Network::new(4, 5, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let reqs = random_instance(&mut rng, 4, 8, 3);
        let frac = fractional_opt(&net, &reqs, 12, None).unwrap();
        let int = integral_opt(&net, &reqs, 12, Limits::default()).unwrap();
        // Plenty of capacity: everything reachable is served, integrally.
        assert!((frac.objective - int.count as f64).abs() < TOL);
        assert_eq!(int.count, 8);
    }
}

#[test]
fn pmax_bound_never_helps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let net = Network::new(5, 1, 1);
        let reqs = random_instance(&mut rng, 5, 12, 4);
        let free = fractional_opt(&net, &reqs, 12, None).unwrap();
        for bound in [4, 6, 8] {
            let tight = fractional_opt(&net, &reqs, 12, Some(bound)).unwrap();
            verify_flow(&net, &reqs, &tight).unwrap();
            assert!(tight.objective <= free.objective + TOL);
            let arc = arc_lp_opt(&net, &reqs, 12, Some(bound)).unwrap();
            assert!((arc - tight.objective).abs() < TOL);
            both_methods_agree(&net, &reqs, 12, Some(bound));
        }
    }
}

#[test]
fn methods_agree_on_congested_lines() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..25 {
        let n = rng.random_range(3..=10);
        let net = Network::new(n, rng.random_range(1..=4), rng.random_range(1..=4));
        let count = rng.random_range(10..=60);
        let reqs = random_instance(&mut rng, n, count, 6);
        let horizon = rng.random_range(6..=20);
        let opt = both_methods_agree(&net, &reqs, horizon, None);
        assert!(opt <= cut_upper_bound(&net, &reqs, horizon) as f64 + TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracles_bracket_each_other(
        n in 2usize..=6,
        b in 1u32..=2,
        c in 1u32..=2,
        horizon in 3u64..=10,
        raw in prop::collection::vec((0usize..5, 1usize..6, 0u64..3), 1..=10),
    ) {
        let mut reqs: Vec<Request> = raw
            .into_iter()
            .map(|(s, span, t)| {
                let src = s % (n - 1);
                let dst = (src + span).min(n - 1);
                Request { id: 0, src, dst, t }
            })
            .collect();
        reqs.sort_by_key(|r| r.t);
        for (i, r) in reqs.iter_mut().enumerate() {
            r.id = i as u64;
        }
        check(&Network::new(n, b, c), &reqs, horizon);
    }
}
