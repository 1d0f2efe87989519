//! Exhaustive crossbar feasibility.
//!
//! Requests of one kind (wanting the east side, or the north side) are
//! interchangeable, so a routing is a pair of integral flows. The search
//! sweeps vertices in row-major order and keeps, per column, the pair
//! `(east-wanting, north-wanting)` on the vertical edge entering the current
//! row, plus the pair on the horizontal edge entering the current vertex.

use std::collections::HashSet;

use linepack::intratile::CrossbarInstance;

type Pair = (u32, u32);

struct Search<'a> {
    inst: &'a CrossbarInstance,
    west: Vec<Pair>,
    south: Vec<Pair>,
    dead: HashSet<(usize, Vec<Pair>, Pair)>,
}

impl Search<'_> {
    /// `cols` holds the vertical inflow of every column for the current row;
    /// entries `< c` have already been replaced by this row's outflow.
    fn go(&mut self, cell: usize, cols: &mut Vec<Pair>, from_w: Pair) -> bool {
        let (rows, ncols) = (self.inst.rows, self.inst.cols);
        if cell == rows * ncols {
            // Every column's outflow leaves through the north side.
            return cols.iter().all(|&(e, _)| e == 0);
        }
        let (r, c) = (cell / ncols, cell % ncols);
        let from_w = if c == 0 { self.west[r] } else { from_w };
        let from_s = if r == 0 { self.south[c] } else { cols[c] };
        let key = (cell, cols.clone(), from_w);
        if self.dead.contains(&key) {
            return false;
        }
        let (e_in, n_in) = (from_w.0 + from_s.0, from_w.1 + from_s.1);
        let (h, v) = (self.inst.h_cap, self.inst.v_cap);
        let saved = cols[c];
        for e_east in 0..=e_in {
            for n_east in 0..=n_in {
                let east = (e_east, n_east);
                let north = (e_in - e_east, n_in - n_east);
                if east.0 + east.1 > h || north.0 + north.1 > v {
                    continue;
                }
                // The last column's east edge is the exit: only east-wanting packets.
                if c + 1 == ncols && east.1 > 0 {
                    continue;
                }
                cols[c] = north;
                if self.go(cell + 1, cols, east) {
                    cols[c] = saved;
                    return true;
                }
            }
        }
        cols[c] = saved;
        self.dead.insert(key);
        false
    }
}

/// True iff every request can reach its exit side within the edge capacities.
pub fn exhaustive_feasible(inst: &CrossbarInstance) -> bool {
    if inst.rows == 0 || inst.cols == 0 {
        return inst.wn.is_empty() && inst.we.is_empty() && inst.sn.is_empty() && inst.se.is_empty();
    }
    let mut west = vec![(0, 0); inst.rows];
    let mut south = vec![(0, 0); inst.cols];
    for &(i, _) in &inst.we {
        west[i].0 += 1;
    }
    for &(i, _) in &inst.wn {
        west[i].1 += 1;
    }
    for &(i, _) in &inst.se {
        south[i].0 += 1;
    }
    for &(i, _) in &inst.sn {
        south[i].1 += 1;
    }
    let mut s = Search { inst, west, south, dead: HashSet::new() };
    let mut cols = vec![(0, 0); inst.cols];
    s.go(0, &mut cols, (0, 0))
}

/// Every way to put `(north-wanting, east-wanting)` counts on `sides`
/// entries, each entry carrying at most `cap` requests.
fn side_loads(sides: usize, cap: u32) -> Vec<Vec<(u32, u32)>> {
    let mut out = vec![Vec::new()];
    for _ in 0..sides {
        let mut next = Vec::new();
        for prefix in &out {
            for a in 0..=cap {
                for b in 0..=cap - a {
                    let mut p = prefix.clone();
                    p.push((a, b));
                    next.push(p);
                }
            }
        }
        out = next;
    }
    out
}

fn build(rows: usize, cols: usize, h: u32, v: u32, west: &[(u32, u32)], south: &[(u32, u32)]) -> CrossbarInstance {
    let mut inst = CrossbarInstance { rows, cols, h_cap: h, v_cap: v, ..Default::default() };
    let mut id = 0;
    for (i, &(n, e)) in west.iter().enumerate() {
        inst.wn.extend((0..n).map(|k| (i, id + u64::from(k))));
        id += u64::from(n);
        inst.we.extend((0..e).map(|k| (i, id + u64::from(k))));
        id += u64::from(e);
    }
    for (i, &(n, e)) in south.iter().enumerate() {
        inst.sn.extend((0..n).map(|k| (i, id + u64::from(k))));
        id += u64::from(n);
        inst.se.extend((0..e).map(|k| (i, id + u64::from(k))));
        id += u64::from(e);
    }
    inst
}

/// All crossbar instances with `rows, cols <= max_side`, capacities up to
/// `max_cap`, entry loads within capacity and at most `max_per_class`
/// requests in each of the four classes.
pub fn small_instances(max_side: usize, max_cap: u32, max_per_class: usize) -> Vec<CrossbarInstance> {
    let mut out = Vec::new();
    for rows in 1..=max_side {
        for cols in 1..=max_side {
            for h in 1..=max_cap {
                for v in 1..=max_cap {
                    let souths = side_loads(cols, v);
                    for west in &side_loads(rows, h) {
                        for south in &souths {
                            let inst = build(rows, cols, h, v, west, south);
                            if [&inst.wn, &inst.we, &inst.sn, &inst.se].iter().all(|c| c.len() <= max_per_class) {
                                out.push(inst);
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_east_through_one_row() {
        let mut inst = CrossbarInstance::unit(1, 2);
        inst.we = vec![(0, 1)];
        inst.se = vec![(1, 2)];
        assert!(!exhaustive_feasible(&inst));
        inst.se.clear();
        inst.sn = vec![(1, 2)];
        assert!(exhaustive_feasible(&inst));
    }

    #[test]
    fn turn_needs_room() {
        // A west-entering packet wanting north must cross a column that
        // carries nothing else north.
        let mut inst = CrossbarInstance::unit(1, 1);
        inst.wn = vec![(0, 1)];
        assert!(exhaustive_feasible(&inst));
        inst.sn = vec![(0, 2)];
        assert!(!exhaustive_feasible(&inst));
    }
}
