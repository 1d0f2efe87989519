//! Edge-flow formulation with one commodity per `(destination, deadline)`.
//!
//! Requests that share a destination and a deadline are interchangeable in
//! the fractional problem, so their flows can be merged and split again
//! afterwards by path stripping. On traces with few destinations this model
//! is far smaller than one commodity per request, and it is solved in a
//! single simplex run.

use std::collections::{BTreeMap, HashSet};

use linepack::spacetime::{EdgeKind, STEdge};
use linepack::Request;
use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome, Variable};

use crate::{Network, OracleError};

/// Flow below this is treated as zero when stripping paths.
const EPS: f64 = 1e-9;

struct Commodity {
    dst: usize,
    vmin: usize,
    tmin: u64,
    /// Store and forward variables per vertex of the box, if present.
    out: Vec<[Option<Variable>; 2]>,
    supply: Vec<(usize, Variable)>,
}

impl Commodity {
    fn width(&self) -> usize {
        self.dst - self.vmin
    }

    fn idx(&self, v: usize, t: u64) -> usize {
        (t - self.tmin) as usize * self.width() + (v - self.vmin)
    }
}

/// Weighted paths of one request group.
pub(crate) type GroupPaths = Vec<(f64, Vec<STEdge>)>;

/// Path flows per group. Fails with `TooLarge` once the model would exceed
/// `size_cap` variables.
pub(crate) fn solve(
    net: &Network,
    reps: &[Request],
    demand: &[u32],
    last: &[Option<u64>],
    overloadable: &[STEdge],
    size_cap: u64,
) -> Result<Vec<GroupPaths>, OracleError> {
    let mut by_key: BTreeMap<(usize, u64), Vec<usize>> = BTreeMap::new();
    for (g, r) in reps.iter().enumerate() {
        if let Some(l) = last[g] {
            by_key.entry((r.dst, l)).or_default().push(g);
        }
    }
    let tight: HashSet<&STEdge> = overloadable.iter().collect();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let mut on_edge: BTreeMap<STEdge, LinearExpr> = BTreeMap::new();
    let mut size = 0u64;
    let mut coms = Vec::with_capacity(by_key.len());
    for ((dst, last), groups) in by_key {
        let vmin = groups.iter().map(|&g| reps[g].src).min().expect("nonempty");
        let tmin = groups.iter().map(|&g| reps[g].t).min().expect("nonempty");
        let mut c = Commodity { dst, vmin, tmin, out: Vec::new(), supply: Vec::new() };
        let cells = c.width() * (last - tmin) as usize;
        size += cells as u64;
        if size > size_cap {
            return Err(OracleError::TooLarge { size, cap: size_cap });
        }
        let mut reached = vec![false; cells];
        let mut at_source: BTreeMap<usize, usize> = BTreeMap::new();
        for &g in &groups {
            let i = c.idx(reps[g].src, reps[g].t);
            reached[i] = true;
            at_source.insert(i, g);
        }
        c.out = vec![[None, None]; cells];
        let mut balance: Vec<Option<LinearExpr>> = vec![None; cells];
        for t in tmin..last {
            for v in vmin..dst {
                let i = c.idx(v, t);
                if !reached[i] || (dst - v) as u64 > last - t {
                    continue;
                }
                let bal = balance[i].get_or_insert_with(LinearExpr::empty);
                if let Some(&g) = at_source.get(&i) {
                    let a = p.add_var(1.0, (0.0, f64::from(demand[g])));
                    bal.add(a, 1.0);
                    c.supply.push((g, a));
                }
                for (k, e) in [STEdge::store(v, t), STEdge::forward(v, t)].into_iter().enumerate() {
                    let h = e.head();
                    if (dst - h.v) as u64 > last - h.t {
                        continue;
                    }
                    let x = p.add_var(0.0, (0.0, f64::INFINITY));
                    size += 1;
                    c.out[i][k] = Some(x);
                    balance[i].as_mut().expect("set above").add(x, -1.0);
                    if tight.contains(&e) {
                        on_edge.entry(e).or_insert_with(LinearExpr::empty).add(x, 1.0);
                    }
                    if h.v != dst {
                        let j = c.idx(h.v, h.t);
                        reached[j] = true;
                        balance[j].get_or_insert_with(LinearExpr::empty).add(x, 1.0);
                    }
                }
            }
        }
        if size > size_cap {
            return Err(OracleError::TooLarge { size, cap: size_cap });
        }
        for expr in balance.into_iter().flatten() {
            p.add_constraint(expr, ComparisonOp::Eq, 0.0);
        }
        coms.push(c);
    }
    for (e, expr) in on_edge {
        p.add_constraint(expr, ComparisonOp::Le, f64::from(net.capacity(e.kind)));
    }
    let s = match p.solve() {
        Ok(SolveOutcome::Solution(s)) => s,
        Ok(_) => return Err(OracleError::Solver("interrupted".into())),
        Err(e) => return Err(OracleError::Solver(e.to_string())),
    };

    let mut paths = vec![Vec::new(); reps.len()];
    for c in &coms {
        let mut rest: Vec<[f64; 2]> =
            c.out.iter().map(|o| o.map(|x| x.map_or(0.0, |x| s.var_value(x).max(0.0)))).collect();
        for &(g, a) in &c.supply {
            let mut want = s.var_value(a).min(f64::from(demand[g]));
            let r = &reps[g];
            while want > EPS {
                let (mut v, mut t) = (r.src, r.t);
                let mut edges = Vec::new();
                let mut amount = want;
                while v != c.dst {
                    let i = c.idx(v, t);
                    // Conservation leaves flow on some outgoing edge.
                    let k = if rest[i][1] > EPS {
                        1
                    } else if rest[i][0] > EPS {
                        0
                    } else {
                        break;
                    };
                    amount = amount.min(rest[i][k]);
                    edges.push(if k == 1 { STEdge::forward(v, t) } else { STEdge::store(v, t) });
                    if k == 1 {
                        v += 1;
                    }
                    t += 1;
                }
                if v != c.dst {
                    // Only rounding noise is left.
                    break;
                }
                let (mut v, mut t) = (r.src, r.t);
                for e in &edges {
                    let k = usize::from(e.kind == EdgeKind::Forward);
                    let i = c.idx(v, t);
                    rest[i][k] -= amount;
                    v += k;
                    t += 1;
                }
                want -= amount;
                paths[g].push((amount, edges));
            }
        }
    }
    Ok(paths)
}
