//! Seeded trace generators.
//!
//! All generators draw from ChaCha8 seeded with `seed_from_u64(seed)`, with a
//! separate stream per generator, so a `(generator, parameters, seed)` triple
//! names one trace on every platform. Ids are assigned in output order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::model::Request;

/// Steps between two burst episodes of [`gen_burst`].
pub const BURST_PERIOD: u64 = 8;

/// Per-step probability that a node receives its group of short requests in
/// [`gen_greedy_killer`].
pub const KILLER_SHORT_PROB: f64 = 0.9;

/// Short requests per node and step in [`gen_greedy_killer`].
pub const KILLER_SHORT_WIDTH: usize = 5;

/// Long requests per burst in [`gen_greedy_killer`].
pub const KILLER_LONG_BURST: usize = 10;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

struct Builder {
    out: Vec<Request>,
}

impl Builder {
    fn new() -> Self {
        Builder { out: Vec::new() }
    }

    fn push(&mut self, src: usize, dst: usize, t: u64) {
        debug_assert!(src < dst);
        let id = self.out.len() as u64;
        self.out.push(Request { id, src, dst, t });
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Poisson(`rate`) arrivals per step, each with a uniform pair `a < b`.
pub fn gen_uniform(n: usize, horizon: u64, rate: f64, seed: u64) -> Vec<Request> {
    assert!(n >= 2);
    let mut rng = rng(seed, 1);
    let mut b = Builder::new();
    for t in 0..horizon {
        for _ in 0..poisson(&mut rng, rate) {
            let x = rng.random_range(0..n);
            let mut y = rng.random_range(0..n - 1);
            if y >= x {
                y += 1;
            }
            b.push(x.min(y), x.max(y), t);
        }
    }
    b.out
}

/// Every [`BURST_PERIOD`] steps, `burst` requests at one random source vertex
/// with random destinations above it.
pub fn gen_burst(n: usize, horizon: u64, burst: usize, seed: u64) -> Vec<Request> {
    assert!(n >= 2);
    let mut rng = rng(seed, 2);
    let mut b = Builder::new();
    for t in (0..horizon).step_by(BURST_PERIOD as usize) {
        let src = rng.random_range(0..n - 1);
        for _ in 0..burst {
            let dst = rng.random_range(src + 1..n);
            b.push(src, dst, t);
        }
    }
    b.out
}

/// Long-haul packets that greedy forwarding favours, then short requests
/// everywhere. Every other step [`KILLER_LONG_BURST`] requests `0 -> n-1`
/// arrive. From step `n - 1` on, once the first burst has reached the last
/// link, each node `1 <= v < n-1` receives with probability
/// [`KILLER_SHORT_PROB`] a group of [`KILLER_SHORT_WIDTH`] requests to
/// `v + 1`. Greedy serves the older long packets first, so its links are
/// full of long traffic and the short requests only get buffer space.
pub fn gen_greedy_killer(n: usize, horizon: u64, seed: u64) -> Vec<Request> {
    assert!(n >= 2);
    let mut rng = rng(seed, 3);
    let mut b = Builder::new();
    for t in 0..horizon {
        if t % 2 == 0 {
            for _ in 0..KILLER_LONG_BURST {
                b.push(0, n - 1, t);
            }
        }
        if t + 1 < n as u64 {
            continue;
        }
        for v in 1..n - 1 {
            if rng.random_bool(KILLER_SHORT_PROB) {
                for _ in 0..KILLER_SHORT_WIDTH {
                    b.push(v, v + 1, t);
                }
            }
        }
    }
    b.out
}

/// Poisson(`density`) long requests per step from the lowest quarter of the
/// line to the highest quarter, so they all share the interior links.
pub fn gen_crossing(n: usize, horizon: u64, density: f64, seed: u64) -> Vec<Request> {
    assert!(n >= 2);
    let mut rng = rng(seed, 4);
    let mut b = Builder::new();
    let low = (n / 4).max(1);
    let high = (n - n / 4).min(n - 1).max(low);
    for t in 0..horizon {
        for _ in 0..poisson(&mut rng, density) {
            let src = rng.random_range(0..low);
            let dst = rng.random_range(high..n).max(src + 1);
            b.push(src, dst, t);
        }
    }
    b.out
}

/// `per_step` requests at one source node every step, with spans drawn
/// uniformly from `1..=max_span`. The node is fixed for the whole trace.
pub fn gen_near_flood(n: usize, horizon: u64, per_step: usize, max_span: usize, seed: u64) -> Vec<Request> {
    assert!(n >= 2 && max_span >= 1);
    let mut rng = rng(seed, 5);
    let src = rng.random_range(0..n - 1);
    let max_span = max_span.min(n - 1 - src);
    let mut b = Builder::new();
    for t in 0..horizon {
        for _ in 0..per_step {
            let span = rng.random_range(1..=max_span);
            b.push(src, src + span, t);
        }
    }
    b.out
}

/// A named generator with its parameters, as stored in suite manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TraceSpec {
    Uniform { n: usize, horizon: u64, rate: f64, seed: u64 },
    Burst { n: usize, horizon: u64, burst: usize, seed: u64 },
    GreedyKiller { n: usize, horizon: u64, seed: u64 },
    Crossing { n: usize, horizon: u64, density: f64, seed: u64 },
    NearFlood { n: usize, horizon: u64, per_step: usize, max_span: usize, seed: u64 },
}

impl TraceSpec {
    pub fn n(&self) -> usize {
        match *self {
            TraceSpec::Uniform { n, .. }
            | TraceSpec::Burst { n, .. }
            | TraceSpec::GreedyKiller { n, .. }
            | TraceSpec::Crossing { n, .. }
            | TraceSpec::NearFlood { n, .. } => n,
        }
    }

    pub fn horizon(&self) -> u64 {
        match *self {
            TraceSpec::Uniform { horizon, .. }
            | TraceSpec::Burst { horizon, .. }
            | TraceSpec::GreedyKiller { horizon, .. }
            | TraceSpec::Crossing { horizon, .. }
            | TraceSpec::NearFlood { horizon, .. } => horizon,
        }
    }

    pub fn generate(&self) -> Vec<Request> {
        match *self {
            TraceSpec::Uniform { n, horizon, rate, seed } => gen_uniform(n, horizon, rate, seed),
            TraceSpec::Burst { n, horizon, burst, seed } => gen_burst(n, horizon, burst, seed),
            TraceSpec::GreedyKiller { n, horizon, seed } => gen_greedy_killer(n, horizon, seed),
            TraceSpec::Crossing { n, horizon, density, seed } => gen_crossing(n, horizon, density, seed),
            TraceSpec::NearFlood { n, horizon, per_step, max_span, seed } => gen_near_flood(n, horizon, per_step, max_span, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid(reqs: &[Request], n: usize, horizon: u64) {
        for (i, r) in reqs.iter().enumerate() {
            assert_eq!(r.id, i as u64);
            r.validate(n).unwrap();
            assert!(r.t < horizon);
            if i > 0 {
                assert!(reqs[i - 1].t <= r.t);
            }
        }
    }

    #[test]
    fn zero_rate_is_empty() {
        assert!(gen_uniform(8, 100, 0.0, 1).is_empty());
        assert!(gen_crossing(8, 100, 0.0, 1).is_empty());
    }

    #[test]
    fn deterministic() {
        assert_eq!(gen_uniform(16, 50, 2.0, 7), gen_uniform(16, 50, 2.0, 7));
        assert_ne!(gen_uniform(16, 50, 2.0, 7), gen_uniform(16, 50, 2.0, 8));
        assert_eq!(gen_greedy_killer(16, 20, 3), gen_greedy_killer(16, 20, 3));
    }

    #[test]
    fn all_generators_valid() {
        for spec in [
            TraceSpec::Uniform { n: 8, horizon: 40, rate: 3.0, seed: 1 },
            TraceSpec::Burst { n: 8, horizon: 40, burst: 15, seed: 2 },
            TraceSpec::GreedyKiller { n: 4, horizon: 10, seed: 3 },
            TraceSpec::GreedyKiller { n: 2, horizon: 10, seed: 3 },
            TraceSpec::Crossing { n: 2, horizon: 40, density: 2.0, seed: 4 },
            TraceSpec::Crossing { n: 32, horizon: 40, density: 2.0, seed: 4 },
            TraceSpec::NearFlood { n: 8, horizon: 40, per_step: 6, max_span: 20, seed: 5 },
        ] {
            valid(&spec.generate(), spec.n(), spec.horizon());
        }
    }

    #[test]
    fn burst_of_one() {
        let tr = gen_burst(8, 4 * BURST_PERIOD, 1, 9);
        assert_eq!(tr.len(), 4);
    }

    #[test]
    fn uniform_count_concentrates() {
        let (rate, h) = (3.0, 2000u64);
        let count = gen_uniform(16, h, rate, 11).len() as f64;
        let mean = rate * h as f64;
        assert!((count - mean).abs() <= 5.0 * mean.sqrt(), "{count} vs {mean}");
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = TraceSpec::Burst { n: 8, horizon: 40, burst: 15, seed: 2 };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"kind":"burst","n":8,"horizon":40,"burst":15,"seed":2}"#);
        assert_eq!(serde_json::from_str::<TraceSpec>(&j).unwrap(), s);
    }
}
