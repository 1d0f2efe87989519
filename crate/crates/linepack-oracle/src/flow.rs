//! Maximum fractional routing on the space-time graph cut off at a horizon.
//!
//! Two exact solvers share the preprocessing: column generation over
//! monotone paths, priced by a shortest path in each request's space-time
//! box, and an edge-flow LP with one commodity per destination and
//! deadline. Capacity rows exist only for edges that could be overloaded. A
//! dense per-request edge-flow LP is kept for cross-checking small instances.

use std::collections::BTreeMap;

use linepack::{EdgeKind, Move, NetConfig, Request, STEdge, STVertex};
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome};
use serde::Serialize;

use crate::arcs;
use crate::lp::{self, CgLimits, Column, Pricer};
use crate::{Network, OracleError};

/// Default cap on the size of an LP (master nonzeros, or edge-flow variables).
pub const DEFAULT_SIZE_CAP: u64 = 2_000_000;

pub const OBJ_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFlow {
    pub amount: f64,
    /// Moves from the request's source vertex; `East` stores, `North` forwards.
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequestFlow {
    pub id: u64,
    pub amount: f64,
    pub paths: Vec<PathFlow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSolution {
    pub horizon: u64,
    pub pmax_bound: Option<u64>,
    pub objective: f64,
    /// One entry per input request, in input order.
    pub requests: Vec<RequestFlow>,
}

fn walk(src: STVertex, moves: &[Move]) -> Vec<STEdge> {
    let mut cur = src;
    moves
        .iter()
        .map(|&m| {
            let e = STEdge { tail: cur, kind: m.kind() };
            cur = e.head();
            e
        })
        .collect()
}

impl FlowSolution {
    /// Per-edge flow of request `i`.
    pub fn edge_flow(&self, i: usize, src: STVertex) -> BTreeMap<STEdge, f64> {
        let mut out = BTreeMap::new();
        for p in &self.requests[i].paths {
            for e in walk(src, &p.moves) {
                *out.entry(e).or_insert(0.0) += p.amount;
            }
        }
        out
    }

    pub fn loads(&self, reqs: &[Request]) -> BTreeMap<STEdge, f64> {
        let mut out = BTreeMap::new();
        for (i, r) in reqs.iter().enumerate() {
            for (e, f) in self.edge_flow(i, r.source()) {
                *out.entry(e).or_insert(0.0) += f;
            }
        }
        out
    }
}

/// Splits `reqs` into those whose whole `p_max` window fits before `horizon`
/// and the ids of the rest.
pub fn window_requests(cfg: &NetConfig, reqs: &[Request], horizon: u64) -> (Vec<Request>, Vec<u64>) {
    let (kept, out): (Vec<Request>, Vec<Request>) = reqs.iter().partition(|r| r.t + cfg.p_max() <= horizon);
    (kept, out.into_iter().map(|r| r.id).collect())
}

/// Latest arrival step allowed for `r`, or `None` if its destination is out
/// of reach.
fn deadline(r: &Request, horizon: u64, pmax: Option<u64>) -> Option<u64> {
    let last = pmax.map_or(horizon, |p| horizon.min(r.t.saturating_add(p)));
    (r.t + r.span() as u64 <= last).then_some(last)
}

/// Cheapest path of `r` to its destination arriving by `last`; ties go to
/// the earlier arrival, then to forwarding first.
fn cheapest(r: &Request, last: u64, cost: &dyn Fn(&STEdge) -> f64) -> Option<(f64, Vec<STEdge>)> {
    let span = r.span();
    let steps = (last - r.t) as usize;
    let width = span + 1;
    let mut dist = vec![f64::INFINITY; (steps + 1) * width];
    let mut from_fwd = vec![false; (steps + 1) * width];
    dist[0] = 0.0;
    for dt in 0..steps {
        let t = r.t + dt as u64;
        // Vertices that can still reach the destination by `last`.
        let hi = dt.min(span);
        for dv in 0..=hi {
            let d = dist[dt * width + dv];
            if !d.is_finite() || dv == span {
                continue;
            }
            let v = r.src + dv;
            let nxt = (dt + 1) * width;
            let cs = d + cost(&STEdge::store(v, t));
            if cs < dist[nxt + dv] {
                dist[nxt + dv] = cs;
                from_fwd[nxt + dv] = false;
            }
            let cf = d + cost(&STEdge::forward(v, t));
            if cf <= dist[nxt + dv + 1] {
                dist[nxt + dv + 1] = cf;
                from_fwd[nxt + dv + 1] = true;
            }
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for dt in span..=steps {
        let d = dist[dt * width + span];
        if d.is_finite() && best.is_none_or(|(b, _)| d < b) {
            best = Some((d, dt));
        }
    }
    let (total, mut dt) = best?;
    let mut dv = span;
    let mut edges = Vec::with_capacity(dt);
    while dt > 0 {
        let fwd = from_fwd[dt * width + dv];
        dt -= 1;
        if fwd {
            dv -= 1;
        }
        let (v, t) = (r.src + dv, r.t + dt as u64);
        edges.push(if fwd { STEdge::forward(v, t) } else { STEdge::store(v, t) });
    }
    edges.reverse();
    Some((total, edges))
}

struct StPricer<'a> {
    reqs: &'a [Request],
    last: Vec<Option<u64>>,
}

impl Pricer<STEdge> for StPricer<'_> {
    fn price(&mut self, req: usize, y: &dyn Fn(&STEdge) -> f64) -> Option<(f64, Vec<STEdge>)> {
        cheapest(&self.reqs[req], self.last[req]?, y)
    }
}

/// Edges that the admissible paths of all commodities together could
/// overload: their total demand over the edge exceeds its capacity.
fn overloadable(net: &Network, reps: &[Request], demand: &[u32], last: &[Option<u64>]) -> Vec<STEdge> {
    let Some(end) = last.iter().flatten().max().copied() else { return Vec::new() };
    let width = end as usize;
    // Demand per (node, step), store then forward.
    let mut load = vec![[0u64; 2]; net.n * width];
    for ((r, &d), l) in reps.iter().zip(demand).zip(last) {
        let Some(l) = *l else { continue };
        let (span, steps) = (r.span(), (l - r.t) as usize);
        for dt in 0..steps {
            for dv in 0..dt.min(span - 1) + 1 {
                let slack = steps - dt - 1;
                let at = &mut load[(r.src + dv) * width + r.t as usize + dt];
                if span - dv <= slack {
                    at[0] += u64::from(d);
                }
                if span - dv - 1 <= slack {
                    at[1] += u64::from(d);
                }
            }
        }
    }
    let mut out = Vec::new();
    for v in 0..net.n {
        for t in 0..width {
            let [st, fw] = load[v * width + t];
            if st > u64::from(net.buffer) {
                out.push(STEdge::store(v, t as u64));
            }
            if fw > u64::from(net.link) {
                out.push(STEdge::forward(v, t as u64));
            }
        }
    }
    out.sort();
    out
}

fn to_moves(edges: &[STEdge]) -> Vec<Move> {
    edges.iter().map(|e| Move::of_kind(e.kind)).collect()
}

fn check_ids(reqs: &[Request], n: usize) -> Result<(), OracleError> {
    for r in reqs {
        r.validate(n).map_err(|e| OracleError::BadInput(format!("request {}: {e}", r.id)))?;
    }
    Ok(())
}

/// How [`fractional_opt_with`] solves the LP. Both methods are exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum LpMethod {
    /// Arcs if that model stays under [`ARC_AUTO_CAP`] cells, else paths.
    #[default]
    Auto,
    /// Column generation over paths, one commodity per distinct request.
    Paths,
    /// Edge flows, one commodity per destination and deadline.
    Arcs,
}

/// Largest arc model that [`LpMethod::Auto`] will try.
pub const ARC_AUTO_CAP: u64 = 60_000;

/// Maximum fractional routing of `reqs` with every edge used before `horizon`
/// and, if `pmax_bound` is set, every request delivered within that many
/// steps of its arrival.
pub fn fractional_opt(
    net: &Network,
    reqs: &[Request],
    horizon: u64,
    pmax_bound: Option<u64>,
) -> Result<FlowSolution, OracleError> {
    fractional_opt_with(net, reqs, horizon, pmax_bound, LpMethod::Auto, DEFAULT_SIZE_CAP)
}

/// [`fractional_opt`] with an explicit method and a cap on the model size.
pub fn fractional_opt_with(
    net: &Network,
    reqs: &[Request],
    horizon: u64,
    pmax_bound: Option<u64>,
    method: LpMethod,
    size_cap: u64,
) -> Result<FlowSolution, OracleError> {
    check_ids(reqs, net.n)?;
    let cap = |e: &STEdge| net.capacity(e.kind);

    // Identical requests form one commodity whose demand is their count.
    let mut by_key: BTreeMap<(usize, usize, u64), Vec<usize>> = BTreeMap::new();
    for (i, r) in reqs.iter().enumerate() {
        by_key.entry((r.src, r.dst, r.t)).or_default().push(i);
    }
    let members: Vec<Vec<usize>> = by_key.into_values().collect();
    let reps: Vec<Request> = members.iter().map(|m| reqs[m[0]]).collect();
    let demand: Vec<u32> = members.iter().map(|m| m.len() as u32).collect();
    let last: Vec<Option<u64>> = reps.iter().map(|r| deadline(r, horizon, pmax_bound)).collect();

    // Seed with earliest-arrival paths in residual capacity, copy by copy.
    let mut used: BTreeMap<STEdge, u32> = BTreeMap::new();
    let mut seeds: Vec<Column<STEdge>> = Vec::new();
    let mut routed = 0u64;
    for (g, r) in reps.iter().enumerate() {
        let Some(l) = last[g] else { continue };
        for _ in 0..demand[g] {
            let blocked = |e: &STEdge| if used.get(e).copied().unwrap_or(0) < cap(e) { 0.0 } else { f64::INFINITY };
            let Some((0.0, edges)) = cheapest(r, l, &blocked) else { break };
            for e in &edges {
                *used.entry(*e).or_insert(0) += 1;
            }
            routed += 1;
            let col = Column { req: g, edges };
            if !seeds.contains(&col) {
                seeds.push(col);
            }
        }
    }
    let reachable: u64 = (0..reps.len()).filter(|&g| last[g].is_some()).map(|g| u64::from(demand[g])).sum();
    let mut per_group: Vec<Vec<PathFlow>> = vec![Vec::new(); reps.len()];
    let mut add = |g: usize, amount: f64, edges: &[STEdge]| {
        if amount > 0.0 {
            per_group[g].push(PathFlow { amount, moves: to_moves(edges) });
        }
    };
    if routed == reachable {
        // Every reachable request is routed integrally: already optimal.
        let (_, x) = lp::primal(&demand, &seeds, &cap)?;
        for (c, &a) in seeds.iter().zip(&x) {
            add(c.req, a, &c.edges);
        }
    } else {
        let candidates = overloadable(net, &reps, &demand, &last);
        let arcs = match method {
            LpMethod::Paths => None,
            LpMethod::Arcs => Some(arcs::solve(net, &reps, &demand, &last, &candidates, size_cap)?),
            LpMethod::Auto => match arcs::solve(net, &reps, &demand, &last, &candidates, size_cap.min(ARC_AUTO_CAP)) {
                Ok(p) => Some(p),
                Err(OracleError::TooLarge { .. }) => None,
                Err(e) => return Err(e),
            },
        };
        if let Some(paths) = arcs {
            for (g, ps) in paths.into_iter().enumerate() {
                for (a, edges) in ps {
                    add(g, a, &edges);
                }
            }
        } else {
            let mut pricer = StPricer { reqs: &reps, last: last.clone() };
            let limits = CgLimits { max_entries: size_cap, max_rounds: 10_000 };
            let cols = lp::column_generation(&demand, seeds, &candidates, &cap, &mut pricer, &limits)?;
            let (_, x) = lp::primal(&demand, &cols, &cap)?;
            for (c, &a) in cols.iter().zip(&x) {
                add(c.req, a, &c.edges);
            }
        }
    }

    // Hand each commodity's path flows to its requests, filling them in order.
    let mut out: Vec<RequestFlow> =
        reqs.iter().map(|r| RequestFlow { id: r.id, amount: 0.0, paths: Vec::new() }).collect();
    for (g, mut flows) in per_group.into_iter().enumerate() {
        flows.sort_by(|a, b| a.moves.cmp(&b.moves));
        let mut who = members[g].iter();
        let mut cur = who.next();
        for mut pf in flows {
            while pf.amount > 0.0 {
                let Some(&i) = cur else { break };
                let room = 1.0 - out[i].amount;
                let take = pf.amount.min(room);
                if take > 0.0 {
                    out[i].paths.push(PathFlow { amount: take, moves: pf.moves.clone() });
                    out[i].amount += take;
                    pf.amount -= take;
                }
                if out[i].amount >= 1.0 - 1e-12 {
                    cur = who.next();
                }
            }
        }
    }
    for rf in &mut out {
        rf.amount = rf.amount.min(1.0);
    }
    let objective = out.iter().map(|r| r.amount).sum();
    Ok(FlowSolution { horizon, pmax_bound, objective, requests: out })
}

/// Independent feasibility check of a flow solution from its per-edge flows:
/// conservation, capacities, amounts, horizon, delivery bound and objective.
pub fn verify_flow(net: &Network, reqs: &[Request], sol: &FlowSolution) -> Result<(), String> {
    const TOL: f64 = 1e-6;
    if sol.requests.len() != reqs.len() {
        return Err(format!("{} request flows for {} requests", sol.requests.len(), reqs.len()));
    }
    let mut total = 0.0;
    for (i, (r, rf)) in reqs.iter().zip(&sol.requests).enumerate() {
        if rf.id != r.id {
            return Err(format!("flow {i} names request {} instead of {}", rf.id, r.id));
        }
        if !(-TOL..=1.0 + TOL).contains(&rf.amount) {
            return Err(format!("request {} has amount {}", r.id, rf.amount));
        }
        let last = sol.pmax_bound.map_or(sol.horizon, |p| sol.horizon.min(r.t + p));
        let mut net: BTreeMap<STVertex, f64> = BTreeMap::new();
        for (e, f) in sol.edge_flow(i, r.source()) {
            if f < -TOL {
                return Err(format!("request {} has negative flow on {e:?}", r.id));
            }
            let h = e.head();
            if e.tail.v < r.src || h.v > r.dst || e.tail.t < r.t || h.t > last || e.tail.v == r.dst {
                return Err(format!("request {} uses {e:?} outside its window", r.id));
            }
            *net.entry(e.tail).or_insert(0.0) -= f;
            *net.entry(h).or_insert(0.0) += f;
        }
        let mut delivered = 0.0;
        for (w, f) in net {
            if w.v == r.dst {
                delivered += f;
            } else if w == r.source() {
                if (f + rf.amount).abs() > TOL {
                    return Err(format!("request {} sends {} but claims {}", r.id, -f, rf.amount));
                }
            } else if f.abs() > TOL {
                return Err(format!("request {} violates conservation at {w}", r.id));
            }
        }
        if (delivered - rf.amount).abs() > TOL {
            return Err(format!("request {} delivers {delivered} but claims {}", r.id, rf.amount));
        }
        total += rf.amount;
    }
    for (e, f) in sol.loads(reqs) {
        if e.head().t > sol.horizon {
            return Err(format!("edge {e:?} lies past the horizon"));
        }
        let cap = f64::from(net.capacity(e.kind));
        if f > cap + TOL {
            return Err(format!("edge {e:?} carries {f} > {cap}"));
        }
    }
    if (total - sol.objective).abs() > TOL {
        return Err(format!("objective {} but amounts sum to {total}", sol.objective));
    }
    Ok(())
}

/// The same optimum as [`fractional_opt`] from the per-request edge-flow LP.
/// Only practical for small instances.
pub fn arc_lp_opt(net: &Network, reqs: &[Request], horizon: u64, pmax_bound: Option<u64>) -> Result<f64, OracleError> {
    check_ids(reqs, net.n)?;
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let mut on_edge: BTreeMap<STEdge, LinearExpr> = BTreeMap::new();
    let mut size = 0u64;
    for r in reqs {
        let Some(last) = deadline(r, horizon, pmax_bound) else { continue };
        let mut balance: BTreeMap<STVertex, LinearExpr> = BTreeMap::new();
        let mut out_of_src = LinearExpr::empty();
        for t in r.t..last {
            for v in r.src..r.dst {
                let dv = (v - r.src) as u64;
                if dv > t - r.t || (r.dst - v) as u64 > last - t {
                    continue;
                }
                for kind in [EdgeKind::Store, EdgeKind::Forward] {
                    let e = STEdge { tail: STVertex { v, t }, kind };
                    let h = e.head();
                    if (r.dst - h.v) as u64 > last - h.t {
                        continue;
                    }
                    size += 1;
                    if size > DEFAULT_SIZE_CAP {
                        return Err(OracleError::TooLarge { size, cap: DEFAULT_SIZE_CAP });
                    }
                    // The objective counts what leaves the source.
                    let obj = if e.tail == r.source() { 1.0 } else { 0.0 };
                    let x = p.add_var(obj, (0.0, 1.0));
                    on_edge.entry(e).or_insert_with(LinearExpr::empty).add(x, 1.0);
                    if e.tail == r.source() {
                        out_of_src.add(x, 1.0);
                    } else {
                        balance.entry(e.tail).or_insert_with(LinearExpr::empty).add(x, -1.0);
                    }
                    if h.v != r.dst {
                        balance.entry(h).or_insert_with(LinearExpr::empty).add(x, 1.0);
                    }
                }
            }
        }
        p.add_constraint(out_of_src, ComparisonOp::Le, 1.0);
        for (_, expr) in balance {
            p.add_constraint(expr, ComparisonOp::Eq, 0.0);
        }
    }
    for (e, expr) in on_edge {
        p.add_constraint(expr, ComparisonOp::Le, f64::from(net.capacity(e.kind)));
    }
    match p.solve() {
        Ok(SolveOutcome::Solution(s)) => Ok(s.objective()),
        Ok(_) => Err(OracleError::Solver("interrupted".into())),
        Err(e) => Err(OracleError::Solver(e.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use linepack::{validate_config, RawConfig};

    fn cfg(n: usize, b: u32, c: u32) -> Network {
        Network::new(n, b, c)
    }

    fn req(id: u64, src: usize, dst: usize, t: u64) -> Request {
        Request { id, src, dst, t }
    }

    #[test]
    fn one_request() {
        let cfg = cfg(4, 5, 5);
        let reqs = [req(0, 0, 3, 0)];
        let sol = fractional_opt(&cfg, &reqs, 10, None).unwrap();
        assert!((sol.objective - 1.0).abs() < OBJ_TOL);
        verify_flow(&cfg, &reqs, &sol).unwrap();
    }

    #[test]
    fn unit_link_without_slack() {
        let cfg = cfg(2, 5, 1);
        let reqs = [req(0, 0, 1, 0), req(1, 0, 1, 0)];
        let sol = fractional_opt(&cfg, &reqs, 1, None).unwrap();
        assert!((sol.objective - 1.0).abs() < OBJ_TOL);
        verify_flow(&cfg, &reqs, &sol).unwrap();
        // One step of slack lets the second one wait.
        let sol = fractional_opt(&cfg, &reqs, 2, None).unwrap();
        assert!((sol.objective - 2.0).abs() < OBJ_TOL);
    }

    #[test]
    fn out_of_reach_gets_nothing() {
        let cfg = cfg(8, 5, 5);
        let reqs = [req(0, 0, 7, 5)];
        let sol = fractional_opt(&cfg, &reqs, 10, None).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.requests[0].paths.is_empty());
    }

    #[test]
    fn pmax_bound_limits_waiting() {
        let cfg = cfg(3, 1, 1);
        // Three packets at node 0, all for node 1: one per step.
        let reqs = [req(0, 0, 1, 0), req(1, 0, 1, 0)];
        let free = fractional_opt(&cfg, &reqs, 10, None).unwrap();
        let tight = fractional_opt(&cfg, &reqs, 10, Some(1)).unwrap();
        assert!((free.objective - 2.0).abs() < OBJ_TOL);
        assert!((tight.objective - 1.0).abs() < OBJ_TOL);
        verify_flow(&cfg, &reqs, &tight).unwrap();
    }

    #[test]
    fn colgen_matches_arc_lp() {
        let cfg = cfg(5, 1, 1);
        let mut reqs = Vec::new();
        let mut id = 0;
        for t in 0..3 {
            for (s, d) in [(0, 4), (1, 3), (0, 2), (2, 4), (1, 4)] {
                reqs.push(req(id, s, d, t));
                id += 1;
            }
        }
        for bound in [None, Some(5)] {
            let sol = fractional_opt(&cfg, &reqs, 9, bound).unwrap();
            verify_flow(&cfg, &reqs, &sol).unwrap();
            let arc = arc_lp_opt(&cfg, &reqs, 9, bound).unwrap();
            assert!((sol.objective - arc).abs() < OBJ_TOL, "{} vs {arc}", sol.objective);
        }
    }

    #[test]
    fn verifier_rejects_overload() {
        let cfg = cfg(3, 1, 1);
        let reqs = [req(0, 0, 1, 0), req(1, 0, 1, 0)];
        let p = PathFlow { amount: 1.0, moves: vec![Move::North] };
        let sol = FlowSolution {
            horizon: 4,
            pmax_bound: None,
            objective: 2.0,
            requests: vec![
                RequestFlow { id: 0, amount: 1.0, paths: vec![p.clone()] },
                RequestFlow { id: 1, amount: 1.0, paths: vec![p] },
            ],
        };
        assert!(verify_flow(&cfg, &reqs, &sol).unwrap_err().contains("carries"));
    }

    #[test]
    fn window_split() {
        let cfg = validate_config(&RawConfig::new(4, 5, 5, 100)).unwrap();
        let p = cfg.p_max();
        let reqs = [req(0, 0, 1, 0), req(1, 0, 1, 1)];
        let (kept, out) = window_requests(&cfg, &reqs, p);
        assert_eq!(kept.len(), 1);
        assert_eq!(out, vec![1]);
    }
}
