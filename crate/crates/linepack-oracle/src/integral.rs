//! Exact integral optimum for tiny instances.
//!
//! Packets with the same position and destination are interchangeable, so
//! the search runs step by step over multisets of `(node, destination)`
//! pairs and memoizes on `(step, multiset)`. At each node the forwarded and
//! stored counts of every destination group are chosen within the link and
//! buffer capacities; whatever is neither forwarded nor stored is dropped,
//! which offline is the same as never accepting it.

use std::collections::{BTreeMap, HashMap};

use linepack::{Move, Request};
use serde::Serialize;

use crate::flow::{FlowSolution, PathFlow, RequestFlow};
use crate::{Network, OracleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub max_requests: usize,
    pub max_n: usize,
    pub max_horizon: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_requests: 10, max_n: 6, max_horizon: 14 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegralSolution {
    pub horizon: u64,
    pub count: usize,
    /// Moves of every delivered request, keyed by id.
    pub schedule: BTreeMap<u64, Vec<Move>>,
}

impl IntegralSolution {
    /// The witness as a flow, for checking with [`crate::verify_flow`].
    pub fn to_flow(&self, reqs: &[Request]) -> FlowSolution {
        let requests = reqs
            .iter()
            .map(|r| match self.schedule.get(&r.id) {
                Some(m) => RequestFlow { id: r.id, amount: 1.0, paths: vec![PathFlow { amount: 1.0, moves: m.clone() }] },
                None => RequestFlow { id: r.id, amount: 0.0, paths: Vec::new() },
            })
            .collect();
        FlowSolution { horizon: self.horizon, pmax_bound: None, objective: self.count as f64, requests }
    }
}

type State = Vec<(u8, u8)>;

/// Per node and destination: how many are forwarded and how many stored.
type Choice = Vec<(u8, u8, u8, u8)>;

struct Search<'a> {
    horizon: u64,
    buffer: u32,
    link: u32,
    arrivals: &'a BTreeMap<u64, Vec<(u8, u8)>>,
    memo: HashMap<(u64, State), (usize, Choice)>,
}

fn groups(pool: &[(u8, u8)]) -> Vec<(u8, u8, u8)> {
    let mut out: Vec<(u8, u8, u8)> = Vec::new();
    for &(v, d) in pool {
        match out.last_mut() {
            Some(g) if g.0 == v && g.1 == d => g.2 += 1,
            _ => out.push((v, d, 1)),
        }
    }
    out
}

impl Search<'_> {
    fn pool(&self, t: u64, carried: &[(u8, u8)]) -> State {
        let mut pool: State = carried.to_vec();
        if let Some(a) = self.arrivals.get(&t) {
            pool.extend_from_slice(a);
        }
        pool.retain(|&(v, d)| u64::from(d - v) <= self.horizon - t);
        pool.sort_unstable();
        pool
    }

    fn best(&mut self, t: u64, carried: State) -> usize {
        if t >= self.horizon {
            return 0;
        }
        let pool = self.pool(t, &carried);
        if pool.is_empty() && self.arrivals.range(t + 1..).next().is_none() {
            return 0;
        }
        if let Some((v, _)) = self.memo.get(&(t, pool.clone())) {
            return *v;
        }
        let gs = groups(&pool);
        let mut best = (0usize, Vec::new());
        let mut choice = Vec::with_capacity(gs.len());
        self.enumerate(t, &gs, 0, 0, 0, &mut choice, &mut best);
        let v = best.0;
        self.memo.insert((t, pool), best);
        v
    }

    /// Chooses `(forward, store)` for group `i` onward; `fw`/`st` are the
    /// amounts already used at the node of group `i`.
    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &mut self,
        t: u64,
        gs: &[(u8, u8, u8)],
        i: usize,
        fw: u32,
        st: u32,
        choice: &mut Choice,
        best: &mut (usize, Choice),
    ) {
        if i == gs.len() {
            let mut next = State::new();
            let mut now = 0;
            for &(v, d, f, s) in choice.iter() {
                if v + 1 == d {
                    now += f as usize;
                } else {
                    next.extend(std::iter::repeat_n((v + 1, d), f as usize));
                }
                next.extend(std::iter::repeat_n((v, d), s as usize));
            }
            next.sort_unstable();
            let total = now + self.best(t + 1, next);
            if total > best.0 || best.1.is_empty() {
                *best = (total, choice.clone());
            }
            return;
        }
        let (v, d, cnt) = gs[i];
        let same_node = i > 0 && gs[i - 1].0 == v;
        let (fw, st) = if same_node { (fw, st) } else { (0, 0) };
        let node_end = i + 1 == gs.len() || gs[i + 1].0 != v;
        let dropped_before: u32 = choice
            .iter()
            .zip(gs)
            .filter(|((cv, ..), _)| *cv == v)
            .map(|((_, _, f, s), g)| u32::from(g.2 - f - s))
            .sum();
        for f in (0..=cnt.min((self.link - fw).min(255) as u8)).rev() {
            for s in (0..=(cnt - f).min((self.buffer - st).min(255) as u8)).rev() {
                let (fw2, st2) = (fw + u32::from(f), st + u32::from(s));
                // A superset of packets is never worse, since any of them can
                // be dropped later: drop only when both capacities are full.
                let dropped = dropped_before + u32::from(cnt - f - s);
                if node_end && dropped > 0 && (fw2 < self.link || st2 < self.buffer) {
                    continue;
                }
                choice.push((v, d, f, s));
                self.enumerate(t, gs, i + 1, fw2, st2, choice, best);
                choice.pop();
            }
        }
    }
}

/// Maximum number of requests that can be delivered by `horizon`.
pub fn integral_opt(net: &Network, reqs: &[Request], horizon: u64, limits: Limits) -> Result<IntegralSolution, OracleError> {
    if reqs.len() > limits.max_requests || net.n > limits.max_n || horizon > limits.max_horizon {
        return Err(OracleError::TooLarge { size: reqs.len() as u64, cap: limits.max_requests as u64 });
    }
    if net.n > u8::MAX as usize {
        return Err(OracleError::TooLarge { size: net.n as u64, cap: u64::from(u8::MAX) });
    }
    for r in reqs {
        r.validate(net.n).map_err(|e| OracleError::BadInput(format!("request {}: {e}", r.id)))?;
    }
    let mut arrivals: BTreeMap<u64, Vec<(u8, u8)>> = BTreeMap::new();
    for r in reqs {
        arrivals.entry(r.t).or_default().push((r.src as u8, r.dst as u8));
    }
    let mut s = Search { horizon, buffer: net.buffer, link: net.link, arrivals: &arrivals, memo: HashMap::new() };
    let count = s.best(0, State::new());

    // Replay the memoized decisions with concrete ids, lowest ids first.
    let mut live: Vec<(u8, u8, u64)> = Vec::new();
    let mut moves: BTreeMap<u64, Vec<Move>> = BTreeMap::new();
    let mut schedule = BTreeMap::new();
    for t in 0..horizon {
        for r in reqs.iter().filter(|r| r.t == t) {
            live.push((r.src as u8, r.dst as u8, r.id));
            moves.insert(r.id, Vec::new());
        }
        live.retain(|&(v, d, _)| u64::from(d - v) <= horizon - t);
        live.sort_unstable();
        if live.is_empty() {
            continue;
        }
        let key: State = live.iter().map(|&(v, d, _)| (v, d)).collect();
        let choice = s.memo.get(&(t, key)).expect("reachable states are memoized").1.clone();
        let mut next = Vec::new();
        for (v, d, f, st) in choice {
            let ids: Vec<u64> = live.iter().filter(|x| x.0 == v && x.1 == d).map(|x| x.2).collect();
            for (k, &id) in ids.iter().enumerate() {
                let path = moves.get_mut(&id).expect("live ids have paths");
                if k < f as usize {
                    path.push(Move::North);
                    if v + 1 == d {
                        schedule.insert(id, std::mem::take(path));
                    } else {
                        next.push((v + 1, d, id));
                    }
                } else if k < (f + st) as usize {
                    path.push(Move::East);
                    next.push((v, d, id));
                }
            }
        }
        live = next;
    }
    debug_assert_eq!(schedule.len(), count);
    Ok(IntegralSolution { horizon, count, schedule })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify_flow;

    fn req(id: u64, src: usize, dst: usize, t: u64) -> Request {
        Request { id, src, dst, t }
    }

    #[test]
    fn single_request() {
        let cfg = Network::new(4, 5, 5);
        let reqs = [req(0, 1, 3, 2)];
        let sol = integral_opt(&cfg, &reqs, 10, Limits::default()).unwrap();
        assert_eq!(sol.count, 1);
        assert_eq!(sol.schedule[&0], vec![Move::North, Move::North]);
        verify_flow(&cfg, &reqs, &sol.to_flow(&reqs)).unwrap();
    }

    #[test]
    fn out_capacity_bottleneck() {
        let cfg = Network::new(4, 5, 5);
        let reqs: Vec<Request> = (0..11).map(|i| req(i, 0, 1, 0)).collect();
        let limits = Limits { max_requests: 11, ..Limits::default() };
        let sol = integral_opt(&cfg, &reqs, 10, limits).unwrap();
        assert_eq!(sol.count, 10);
        verify_flow(&cfg, &reqs, &sol.to_flow(&reqs)).unwrap();
    }

    #[test]
    fn too_large() {
        let cfg = Network::new(8, 5, 5);
        assert!(matches!(integral_opt(&cfg, &[], 10, Limits::default()), Err(OracleError::TooLarge { .. })));
    }
}
