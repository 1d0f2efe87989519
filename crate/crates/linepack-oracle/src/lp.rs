//! Path-formulation packing LPs.
//!
//! `max sum x_p` subject to `sum_{p of r} x_p <= demand(r)` per commodity
//! and `sum_{p ∋ e} x_p <= cap(e)` per edge. An edge whose commodities have
//! total demand at most `cap(e)` can never be overloaded, so its row is
//! omitted.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::hash::Hash;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome};

use crate::OracleError;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct Column<E> {
    pub req: usize,
    pub edges: Vec<E>,
}

/// Minimum-cost admissible path of request `req` under edge prices `y`.
pub(crate) trait Pricer<E> {
    fn price(&mut self, req: usize, y: &dyn Fn(&E) -> f64) -> Option<(f64, Vec<E>)>;
}

fn solved(p: &Problem) -> Result<microlp::Solution, OracleError> {
    match p.solve() {
        Ok(SolveOutcome::Solution(s)) => Ok(s),
        Ok(_) => Err(OracleError::Solver("interrupted".into())),
        Err(e) => Err(OracleError::Solver(e.to_string())),
    }
}

fn can_overload(users: &BTreeSet<usize>, demand: &[u32], cap: u32) -> bool {
    users.iter().map(|&r| u64::from(demand[r])).sum::<u64>() > u64::from(cap)
}

/// Optimal path flows over a fixed column set. Returns the objective and one
/// amount per column.
pub(crate) fn primal<E: Ord + Clone>(
    demand: &[u32],
    cols: &[Column<E>],
    cap: &dyn Fn(&E) -> u32,
) -> Result<(f64, Vec<f64>), OracleError> {
    if cols.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let nreq = demand.len();
    let x: Vec<_> = cols.iter().map(|c| p.add_var(1.0, (0.0, f64::from(demand[c.req])))).collect();
    let mut per_req: Vec<LinearExpr> = (0..nreq).map(|_| LinearExpr::empty()).collect();
    let mut used = vec![false; nreq];
    for (c, &xv) in cols.iter().zip(&x) {
        per_req[c.req].add(xv, 1.0);
        used[c.req] = true;
    }
    for (r, e) in per_req.into_iter().enumerate() {
        if used[r] {
            p.add_constraint(e, ComparisonOp::Le, f64::from(demand[r]));
        }
    }
    let mut users: BTreeMap<&E, Vec<usize>> = BTreeMap::new();
    for (i, c) in cols.iter().enumerate() {
        for e in &c.edges {
            users.entry(e).or_default().push(i);
        }
    }
    for (e, on) in users {
        let reqs: BTreeSet<usize> = on.iter().map(|&i| cols[i].req).collect();
        if !can_overload(&reqs, demand, cap(e)) {
            continue;
        }
        let mut expr = LinearExpr::empty();
        for i in on {
            expr.add(x[i], 1.0);
        }
        p.add_constraint(expr, ComparisonOp::Le, f64::from(cap(e)));
    }
    let s = solved(&p)?;
    Ok((s.objective(), x.iter().zip(cols).map(|(&v, c)| s.var_value(v).clamp(0.0, f64::from(demand[c.req]))).collect()))
}

pub(crate) struct CgLimits {
    /// Cap on the master's nonzeros (sum of column lengths).
    pub max_entries: u64,
    pub max_rounds: usize,
}

/// Column generation from `seeds`. The master is solved in dual form
/// (`min sum demand*u + sum cap*y`, one row per column) because the prices
/// are needed for pricing. `candidates` must contain every edge that some
/// admissible set of paths could overload; prices exist only for those, which
/// lets each new column be added to the previous solution as one more row
/// instead of re-solving from scratch. Stops when no path has positive
/// reduced cost, so the final column set supports an optimal primal.
pub(crate) fn column_generation<E: Ord + Clone + Hash>(
    demand: &[u32],
    seeds: Vec<Column<E>>,
    candidates: &[E],
    cap: &dyn Fn(&E) -> u32,
    pricer: &mut dyn Pricer<E>,
    limits: &CgLimits,
) -> Result<Vec<Column<E>>, OracleError> {
    let mut seen: HashSet<Column<E>> = seeds.iter().cloned().collect();
    let mut cols = seeds;
    let mut entries: u64 = cols.iter().map(|c| c.edges.len() as u64 + 1).sum();
    let yidx: BTreeMap<&E, usize> = candidates.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let u: Vec<_> = demand.iter().map(|&d| p.add_var(f64::from(d), (0.0, f64::INFINITY))).collect();
    let y: Vec<_> = candidates.iter().map(|e| p.add_var(f64::from(cap(e)), (0.0, f64::INFINITY))).collect();
    let row = |c: &Column<E>| {
        let mut expr = LinearExpr::empty();
        expr.add(u[c.req], 1.0);
        let mut on: Vec<usize> = c.edges.iter().filter_map(|e| yidx.get(e).copied()).collect();
        on.sort_unstable();
        on.dedup();
        for i in on {
            expr.add(y[i], 1.0);
        }
        expr
    };
    for c in &cols {
        p.add_constraint(row(c), ComparisonOp::Ge, 1.0);
    }
    let mut s = solved(&p)?;
    for round in 0.. {
        if round >= limits.max_rounds {
            return Err(OracleError::NoConvergence(round));
        }
        let uval: Vec<f64> = u.iter().map(|&v| s.var_value(v)).collect();
        let yval: Vec<f64> = y.iter().map(|&v| s.var_value(v)).collect();
        let price = |e: &E| yidx.get(e).map_or(0.0, |&i| yval[i]);
        let mut fresh = Vec::new();
        for (r, &ur) in uval.iter().enumerate() {
            if let Some((cost, edges)) = pricer.price(r, &price) {
                if 1.0 - ur - cost > 1e-9 {
                    let c = Column { req: r, edges };
                    if seen.insert(c.clone()) {
                        entries += c.edges.len() as u64 + 1;
                        fresh.push(c);
                    }
                }
            }
        }
        log::debug!("colgen round {round}: master {:.6}, {} columns, {} new", s.objective(), cols.len(), fresh.len());
        if entries > limits.max_entries {
            return Err(OracleError::TooLarge { size: entries, cap: limits.max_entries });
        }
        if fresh.is_empty() {
            break;
        }
        for c in fresh {
            s = match s.add_constraint(row(&c), ComparisonOp::Ge, 1.0) {
                Ok(SolveOutcome::Solution(s)) => s,
                Ok(_) => return Err(OracleError::Solver("interrupted".into())),
                Err(e) => return Err(OracleError::Solver(e.to_string())),
            };
            cols.push(c);
        }
    }
    Ok(cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_unit_edge() {
        let cols = vec![Column { req: 0, edges: vec![1] }, Column { req: 1, edges: vec![1, 2] }];
        let (obj, x) = primal(&[1, 1], &cols, &|_| 1).unwrap();
        assert!((obj - 1.0).abs() < 1e-9);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn odd_cycle_is_fractional() {
        // Three requests, each with one path over two of three unit edges.
        let cols = vec![
            Column { req: 0, edges: vec![0, 1] },
            Column { req: 1, edges: vec![1, 2] },
            Column { req: 2, edges: vec![0, 2] },
        ];
        let (obj, _) = primal(&[1, 1, 1], &cols, &|_| 1).unwrap();
        assert!((obj - 1.5).abs() < 1e-9);
    }

    #[test]
    fn demand_counts_copies() {
        let cols = vec![Column { req: 0, edges: vec![0] }, Column { req: 1, edges: vec![0] }];
        let (obj, x) = primal(&[3, 1], &cols, &|_| 2).unwrap();
        assert!((obj - 2.0).abs() < 1e-9);
        assert!(x[0] <= 2.0 + 1e-9);
    }
}
