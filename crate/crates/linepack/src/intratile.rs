//! Routing inside one tile.
//!
//! A quadrant is an `rows x cols` directed grid whose horizontal edges carry
//! `h_cap` packets and vertical edges `v_cap`. Requests enter on the west or
//! south side and must leave on the north or east side. Quadrant coordinates
//! are `(row, col)` with `(0, 0)` in the south-west corner; a path lists the
//! moves from its entry vertex up to and including the edge that leaves the
//! quadrant.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::spacetime::Move;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    West,
    South,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrossbarError {
    #[error("invalid crossbar instance: {0}")]
    Invalid(String),
    #[error("crossbar instance is infeasible")]
    Infeasible,
}

/// Requests of one quadrant by class. Each entry is `(row or column, id)`:
/// west entries name a row, south entries a column.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrossbarInstance {
    pub rows: usize,
    pub cols: usize,
    pub h_cap: u32,
    pub v_cap: u32,
    pub wn: Vec<(usize, u64)>,
    pub sn: Vec<(usize, u64)>,
    pub we: Vec<(usize, u64)>,
    pub se: Vec<(usize, u64)>,
}

impl CrossbarInstance {
    pub fn unit(rows: usize, cols: usize) -> Self {
        CrossbarInstance { rows, cols, h_cap: 1, v_cap: 1, ..Default::default() }
    }

    /// Indices in range, ids unique, and no side edge entered by more
    /// requests than it carries.
    pub fn validate(&self) -> Result<(), CrossbarError> {
        let bad = |m: String| Err(CrossbarError::Invalid(m));
        if self.h_cap == 0 || self.v_cap == 0 {
            return bad("zero capacity".into());
        }
        let mut ids = BTreeSet::new();
        let mut west = vec![0u32; self.rows];
        let mut south = vec![0u32; self.cols];
        for (list, side) in [(&self.wn, Side::West), (&self.we, Side::West), (&self.sn, Side::South), (&self.se, Side::South)] {
            for &(i, id) in list {
                if !ids.insert(id) {
                    return bad(format!("request {id} listed twice"));
                }
                let count = match side {
                    Side::West => west.get_mut(i),
                    Side::South => south.get_mut(i),
                };
                let Some(count) = count else {
                    return bad(format!("request {id}: entry {i} outside the {}x{} grid", self.rows, self.cols));
                };
                *count += 1;
                let cap = if side == Side::West { self.h_cap } else { self.v_cap };
                if *count > cap {
                    return bad(format!("more than {cap} requests enter through {side:?} index {i}"));
                }
            }
        }
        Ok(())
    }

    fn packets(&self) -> Vec<GPacket> {
        let mut out = Vec::new();
        let mut push = |list: &[(usize, u64)], entry: Side, exit: Move| {
            for &(index, id) in list {
                out.push(GPacket { id, entry, index, exit, absorb_row: None });
            }
        };
        push(&self.wn, Side::West, Move::North);
        push(&self.we, Side::West, Move::East);
        push(&self.sn, Side::South, Move::North);
        push(&self.se, Side::South, Move::East);
        out
    }
}

/// A monotone path from an entry vertex `(row, col)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticePath {
    pub start: (usize, usize),
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CrossbarSolution {
    pub paths: BTreeMap<u64, LatticePath>,
}

/// Counting condition: east exits fit the east side, north exits the north side.
pub fn crossbar_feasible(inst: &CrossbarInstance) -> bool {
    let east = inst.we.len() + inst.se.len();
    let north = inst.wn.len() + inst.sn.len();
    east as u64 <= inst.rows as u64 * u64::from(inst.h_cap) && north as u64 <= inst.cols as u64 * u64::from(inst.v_cap)
}

/// Checks that `sol` routes every request of `inst` from its entry to its
/// required side without exceeding any edge capacity.
pub fn check_solution(inst: &CrossbarInstance, sol: &CrossbarSolution) -> Result<(), String> {
    let mut h = vec![0u32; inst.rows * inst.cols];
    let mut v = vec![0u32; inst.rows * inst.cols];
    let mut seen = 0;
    for p in inst.packets() {
        let path = sol.paths.get(&p.id).ok_or_else(|| format!("request {} not routed", p.id))?;
        seen += 1;
        let start = match p.entry {
            Side::West => (p.index, 0),
            Side::South => (0, p.index),
        };
        if path.start != start {
            return Err(format!("request {} starts at {:?}, entry is {:?}", p.id, path.start, start));
        }
        let (mut r, mut c) = start;
        let mut exited = None;
        for (i, &m) in path.moves.iter().enumerate() {
            if exited.is_some() {
                return Err(format!("request {} moves after leaving the quadrant", p.id));
            }
            match m {
                Move::East => {
                    h[r * inst.cols + c] += 1;
                    if c + 1 == inst.cols {
                        exited = Some(Move::East);
                    } else {
                        c += 1;
                    }
                }
                Move::North => {
                    v[r * inst.cols + c] += 1;
                    if r + 1 == inst.rows {
                        exited = Some(Move::North);
                    } else {
                        r += 1;
                    }
                }
            }
            let _ = i;
        }
        if exited != Some(p.exit) {
            return Err(format!("request {} leaves via {:?}, wants {:?}", p.id, exited, p.exit));
        }
    }
    if seen != sol.paths.len() {
        return Err("solution routes requests not in the instance".into());
    }
    if let Some(i) = h.iter().position(|&u| u > inst.h_cap) {
        return Err(format!("horizontal edge at ({}, {}) carries {}", i / inst.cols, i % inst.cols, h[i]));
    }
    if let Some(i) = v.iter().position(|&u| u > inst.v_cap) {
        return Err(format!("vertical edge at ({}, {}) carries {}", i / inst.cols, i % inst.cols, v[i]));
    }
    Ok(())
}

/// Diagonal construction. Straight requests (west-to-east, south-to-north)
/// take their own lane; the remaining turning requests turn on the diagonal
/// from the south-west corner, and the surplus class looks for the first
/// vacant lane. Capacities are handled by splitting every row into `h_cap`
/// lanes and every column into `v_cap` lanes, assigned first-fit by id.
pub fn crossbar_route(inst: &CrossbarInstance) -> Result<CrossbarSolution, CrossbarError> {
    inst.validate()?;
    if !crossbar_feasible(inst) {
        return Err(CrossbarError::Infeasible);
    }
    let (hc, vc) = (inst.h_cap as usize, inst.v_cap as usize);
    let big_r = inst.rows * hc;
    let big_c = inst.cols * vc;

    // Lane assignment on each side, by id within an entry index.
    let mut west: Vec<(usize, u64, Move)> = inst.wn.iter().map(|&(i, id)| (i, id, Move::North)).collect();
    west.extend(inst.we.iter().map(|&(i, id)| (i, id, Move::East)));
    west.sort_by_key(|&(i, id, _)| (i, id));
    let mut south: Vec<(usize, u64, Move)> = inst.sn.iter().map(|&(i, id)| (i, id, Move::North)).collect();
    south.extend(inst.se.iter().map(|&(i, id)| (i, id, Move::East)));
    south.sort_by_key(|&(i, id, _)| (i, id));
    let lanes = |list: &[(usize, u64, Move)], width: usize| -> Vec<(usize, u64, Move)> {
        let mut used: BTreeMap<usize, usize> = BTreeMap::new();
        list.iter()
            .map(|&(i, id, m)| {
                let k = used.entry(i).or_insert(0);
                let lane = i * width + *k;
                *k += 1;
                (lane, id, m)
            })
            .collect()
    };
    let west = lanes(&west, hc);
    let south = lanes(&south, vc);

    let deleted_rows: BTreeSet<usize> = west.iter().filter(|w| w.2 == Move::East).map(|w| w.0).collect();
    let deleted_cols: BTreeSet<usize> = south.iter().filter(|s| s.2 == Move::North).map(|s| s.0).collect();
    let kept_rows: Vec<usize> = (0..big_r).filter(|r| !deleted_rows.contains(r)).collect();
    let kept_cols: Vec<usize> = (0..big_c).filter(|c| !deleted_cols.contains(c)).collect();
    let row_rank: BTreeMap<usize, usize> = kept_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let col_rank: BTreeMap<usize, usize> = kept_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let (a, b) = (kept_rows.len(), kept_cols.len());

    // Expanded-grid paths as (start, moves).
    let mut expanded: BTreeMap<u64, ((usize, usize), Vec<Move>)> = BTreeMap::new();
    for &(lane, id, m) in &west {
        if m == Move::East {
            expanded.insert(id, ((lane, 0), vec![Move::East; big_c]));
        }
    }
    for &(lane, id, m) in &south {
        if m == Move::North {
            expanded.insert(id, ((0, lane), vec![Move::North; big_r]));
        }
    }

    // Reduced grid: (row index, id) for WN and (col index, id) for SE.
    let wn: Vec<(usize, u64)> = west.iter().filter(|w| w.2 == Move::North).map(|w| (row_rank[&w.0], w.1)).collect();
    let se: Vec<(usize, u64)> = south.iter().filter(|s| s.2 == Move::East).map(|s| (col_rank[&s.0], s.1)).collect();
    // Reduced path: start vertex plus moves, in reduced coordinates.
    let mut reduced: Vec<(u64, (usize, usize), Vec<Move>)> = Vec::new();
    let straight = |first: Move, n1: usize, second: Move, n2: usize| {
        let mut v = vec![first; n1];
        v.extend(std::iter::repeat_n(second, n2));
        v
    };
    if a <= b {
        let mut occupied = BTreeSet::new();
        for &(i, id) in &wn {
            reduced.push((id, (i, 0), straight(Move::East, i, Move::North, a - i)));
        }
        for &(j, id) in se.iter().filter(|s| s.0 < a) {
            occupied.insert(j);
            reduced.push((id, (0, j), straight(Move::North, j, Move::East, b - j)));
        }
        let mut late: Vec<(usize, u64)> = se.iter().copied().filter(|s| s.0 >= a).collect();
        late.sort();
        for (j, id) in late {
            let r = (0..a).find(|r| !occupied.contains(r)).ok_or(CrossbarError::Infeasible)?;
            occupied.insert(r);
            reduced.push((id, (0, j), straight(Move::North, r, Move::East, b - j)));
        }
    } else {
        let mut occupied = BTreeSet::new();
        for &(j, id) in &se {
            reduced.push((id, (0, j), straight(Move::North, j, Move::East, b - j)));
        }
        for &(i, id) in wn.iter().filter(|w| w.0 < b) {
            occupied.insert(i);
            reduced.push((id, (i, 0), straight(Move::East, i, Move::North, a - i)));
        }
        let mut late: Vec<(usize, u64)> = wn.iter().copied().filter(|w| w.0 >= b).collect();
        late.sort();
        for (i, id) in late {
            let c = (0..b).find(|c| !occupied.contains(c)).ok_or(CrossbarError::Infeasible)?;
            occupied.insert(c);
            reduced.push((id, (i, 0), straight(Move::East, c, Move::North, a - i)));
        }
    }

    // Reduced moves to expanded moves: deleted lanes are crossed straight.
    for (id, (ri, ci), moves) in reduced {
        let mut out = Vec::new();
        let start = if ci == 0 && west.iter().any(|w| w.1 == id) {
            out.extend(std::iter::repeat_n(Move::East, kept_cols[0]));
            (kept_rows[ri], 0)
        } else {
            out.extend(std::iter::repeat_n(Move::North, kept_rows[0]));
            (0, kept_cols[ci])
        };
        let (mut r, mut c) = (ri, ci);
        for m in moves {
            match m {
                Move::East => {
                    let next = if c + 1 < b { kept_cols[c + 1] } else { big_c };
                    out.extend(std::iter::repeat_n(Move::East, next - kept_cols[c]));
                    c += 1;
                }
                Move::North => {
                    let next = if r + 1 < a { kept_rows[r + 1] } else { big_r };
                    out.extend(std::iter::repeat_n(Move::North, next - kept_rows[r]));
                    r += 1;
                }
            }
        }
        expanded.insert(id, (start, out));
    }

    // Expanded moves to original moves: only lane-block boundaries are real edges.
    let mut sol = CrossbarSolution::default();
    for (id, ((er, ec), moves)) in expanded {
        let (mut r, mut c) = (er, ec);
        let mut out = Vec::new();
        for m in moves {
            match m {
                Move::East => {
                    c += 1;
                    if c % vc == 0 {
                        out.push(Move::East);
                    }
                }
                Move::North => {
                    r += 1;
                    if r % hc == 0 {
                        out.push(Move::North);
                    }
                }
            }
        }
        sol.paths.insert(id, LatticePath { start: (er / hc, ec / vc), moves: out });
    }
    debug_assert_eq!(check_solution(inst, &sol), Ok(()));
    Ok(sol)
}

/// Causal variant used by the router: vertices are processed in row-major
/// order and each decision depends only on the packets that reach that
/// vertex. At a vertex, west arrivals that want north swap with south
/// arrivals that want east; remaining turners use spare exit capacity; all
/// others continue straight. Lower ids win every choice.
pub fn crossbar_route_causal(inst: &CrossbarInstance) -> Result<CrossbarSolution, CrossbarError> {
    inst.validate()?;
    if !crossbar_feasible(inst) {
        return Err(CrossbarError::Infeasible);
    }
    let routes = route_greedy(inst.rows, inst.cols, inst.h_cap, inst.v_cap, &inst.packets())?;
    let mut sol = CrossbarSolution::default();
    for (id, r) in routes {
        sol.paths.insert(id, LatticePath { start: r.start, moves: r.moves });
    }
    Ok(sol)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GPacket {
    pub id: u64,
    pub entry: Side,
    pub index: usize,
    pub exit: Move,
    /// Quadrant row at which the packet leaves the network.
    pub absorb_row: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GEnd {
    /// Left the quadrant; `pos` is the row for east exits and the column for north exits.
    Exit { dir: Move, pos: usize },
    Absorbed,
}

#[derive(Debug, Clone)]
pub(crate) struct GRoute {
    pub start: (usize, usize),
    pub moves: Vec<Move>,
    pub end: GEnd,
}

pub(crate) fn route_greedy(
    rows: usize,
    cols: usize,
    h_cap: u32,
    v_cap: u32,
    packets: &[GPacket],
) -> Result<BTreeMap<u64, GRoute>, CrossbarError> {
    let (hc, vc) = (h_cap as usize, v_cap as usize);
    let mut from_w: Vec<Vec<usize>> = vec![Vec::new(); rows * cols];
    let mut from_s: Vec<Vec<usize>> = vec![Vec::new(); rows * cols];
    let mut routes: Vec<GRoute> = Vec::with_capacity(packets.len());
    for (k, p) in packets.iter().enumerate() {
        let start = match p.entry {
            Side::West => (p.index, 0),
            Side::South => (0, p.index),
        };
        if start.0 >= rows || start.1 >= cols {
            return Err(CrossbarError::Invalid(format!("request {} enters outside the quadrant", p.id)));
        }
        match p.entry {
            Side::West => from_w[start.0 * cols].push(k),
            Side::South => from_s[start.1].push(k),
        }
        routes.push(GRoute { start, moves: Vec::new(), end: GEnd::Absorbed });
    }
    let by_id = |v: &mut Vec<usize>| v.sort_by_key(|&k| packets[k].id);
    for r in 0..rows {
        for c in 0..cols {
            let cell = r * cols + c;
            let mut w = std::mem::take(&mut from_w[cell]);
            let mut s = std::mem::take(&mut from_s[cell]);
            w.retain(|&k| packets[k].absorb_row != Some(r));
            s.retain(|&k| packets[k].absorb_row != Some(r));
            if w.len() > hc || s.len() > vc {
                return Err(CrossbarError::Infeasible);
            }
            by_id(&mut w);
            by_id(&mut s);
            let (w_n, w_e): (Vec<usize>, Vec<usize>) = w.iter().partition(|&&k| packets[k].exit == Move::North);
            let (s_e, s_n): (Vec<usize>, Vec<usize>) = s.iter().partition(|&&k| packets[k].exit == Move::East);
            let swap = w_n.len().min(s_e.len());
            let spare_n = (w_n.len() - swap).min(vc - s.len());
            let spare_e = (s_e.len() - swap).min(hc - w.len());
            let mut go_east: Vec<usize> = w_e;
            let mut go_north: Vec<usize> = s_n;
            go_north.extend(&w_n[..swap + spare_n]);
            go_east.extend(&w_n[swap + spare_n..]);
            go_east.extend(&s_e[..swap + spare_e]);
            go_north.extend(&s_e[swap + spare_e..]);
            debug_assert!(go_east.len() <= hc && go_north.len() <= vc);
            for k in go_east {
                routes[k].moves.push(Move::East);
                if c + 1 < cols {
                    from_w[cell + 1].push(k);
                } else if packets[k].exit == Move::East && packets[k].absorb_row.is_none() {
                    routes[k].end = GEnd::Exit { dir: Move::East, pos: r };
                } else {
                    return Err(CrossbarError::Infeasible);
                }
            }
            for k in go_north {
                routes[k].moves.push(Move::North);
                if r + 1 < rows {
                    from_s[cell + cols].push(k);
                } else if packets[k].exit == Move::North && packets[k].absorb_row.is_none() {
                    routes[k].end = GEnd::Exit { dir: Move::North, pos: c };
                } else {
                    return Err(CrossbarError::Infeasible);
                }
            }
        }
    }
    Ok(packets.iter().zip(routes).map(|(p, r)| (p.id, r)).collect())
}

/// Straight-lane reservations of one SW quadrant, `width` columns by `height`
/// rows. Lanes start at a request's source and end with the edge that leaves
/// the quadrant. East edges carry `h_cap`, north edges `v_cap`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuadrantLedger {
    width: usize,
    height: usize,
    h_cap: u32,
    v_cap: u32,
    east: Vec<u32>,
    north: Vec<u32>,
}

impl QuadrantLedger {
    pub fn new(width: usize, height: usize, h_cap: u32, v_cap: u32) -> Self {
        QuadrantLedger { width, height, h_cap, v_cap, east: vec![0; width * height], north: vec![0; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn north_free(&self, col: usize, row: usize) -> bool {
        (row..self.height).all(|r| self.north[r * self.width + col] < self.v_cap)
    }

    fn east_free(&self, col: usize, row: usize) -> bool {
        (col..self.width).all(|c| self.east[row * self.width + c] < self.h_cap)
    }

    /// Direction of the straight lane a request at `(col, row)` would get:
    /// north if that lane has room on every edge, else east, else `None`.
    pub fn initial_route(&self, col: usize, row: usize) -> Option<Move> {
        assert!(col < self.width && row < self.height, "source outside the quadrant");
        if self.north_free(col, row) {
            Some(Move::North)
        } else if self.east_free(col, row) {
            Some(Move::East)
        } else {
            None
        }
    }

    pub fn reserve(&mut self, col: usize, row: usize, dir: Move) {
        match dir {
            Move::North => {
                assert!(self.north_free(col, row), "north lane from ({col}, {row}) is full");
                for r in row..self.height {
                    self.north[r * self.width + col] += 1;
                }
            }
            Move::East => {
                assert!(self.east_free(col, row), "east lane from ({col}, {row}) is full");
                for c in col..self.width {
                    self.east[row * self.width + c] += 1;
                }
            }
        }
    }

    /// Reservations on the east edge out of `(col, row)` and the north edge out of it.
    pub fn usage(&self, col: usize, row: usize) -> (u32, u32) {
        (self.east[row * self.width + col], self.north[row * self.width + col])
    }
}

/// Where a packet is headed inside a tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    /// Leave the tile through this side.
    Exit(Move),
    /// Leave the network at this tile-local row.
    Absorb(usize),
}

/// A request whose straight lane left the SW quadrant at `pos` (column for
/// north lanes, row for east lanes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitialIn {
    pub id: u64,
    pub lane: Move,
    pub pos: usize,
    pub goal: Goal,
}

/// A request entering the tile from a neighbour: west entries name a
/// tile-local row in the north half, south entries a column in the east half.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryIn {
    pub id: u64,
    pub side: Side,
    pub pos: usize,
    pub goal: Goal,
}

#[derive(Debug, Clone, Copy)]
pub struct TileSpec {
    pub lh: usize,
    pub lv: usize,
    pub h_cap: u32,
    pub v_cap: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileEnd {
    Exit { dir: Move, pos: usize },
    Absorbed,
}

/// A request's route through the NW, SE and NE quadrants, in tile-local
/// `(row, col)` coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileRoute {
    pub start: (usize, usize),
    pub moves: Vec<Move>,
    pub end: TileEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StitchError {
    #[error("invalid tile traffic: {0}")]
    Invalid(String),
    #[error("{quadrant} quadrant cannot be routed")]
    InfeasibleTile { quadrant: &'static str },
}

/// Routes the traffic of one tile. NW collects west traversals and north
/// lanes and sends everything east; SE collects south traversals and east
/// lanes and sends everything north; NE sorts packets onto the tile's east
/// and north exits and delivers finals at their row.
pub fn stitch_tile(spec: TileSpec, initials: &[InitialIn], entries: &[EntryIn]) -> Result<BTreeMap<u64, TileRoute>, StitchError> {
    let (hx, hy) = (spec.lh / 2, spec.lv / 2);
    let invalid = |m: String| Err(StitchError::Invalid(m));
    let infeasible = |quadrant| move |_| StitchError::InfeasibleTile { quadrant };

    let mut nw = Vec::new();
    let mut se = Vec::new();
    let mut goals: BTreeMap<u64, Goal> = BTreeMap::new();
    let mut starts: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for p in initials {
        let Goal::Exit(_) = p.goal else {
            return invalid(format!("request {} ends in its source tile", p.id));
        };
        match p.lane {
            Move::North if p.pos < hx => {
                nw.push(GPacket { id: p.id, entry: Side::South, index: p.pos, exit: Move::East, absorb_row: None });
                starts.insert(p.id, (hy, p.pos));
            }
            Move::East if p.pos < hy => {
                se.push(GPacket { id: p.id, entry: Side::West, index: p.pos, exit: Move::North, absorb_row: None });
                starts.insert(p.id, (p.pos, hx));
            }
            _ => return invalid(format!("request {} leaves the SW quadrant outside its sides", p.id)),
        }
        goals.insert(p.id, p.goal);
    }
    for p in entries {
        match (p.side, p.goal) {
            (Side::West, Goal::Exit(_)) if (hy..spec.lv).contains(&p.pos) => {
                nw.push(GPacket { id: p.id, entry: Side::West, index: p.pos - hy, exit: Move::East, absorb_row: None });
                starts.insert(p.id, (p.pos, 0));
            }
            (Side::South, goal) if (hx..spec.lh).contains(&p.pos) => {
                let absorb_row = match goal {
                    Goal::Absorb(row) if row < hy => Some(row),
                    _ => None,
                };
                se.push(GPacket { id: p.id, entry: Side::South, index: p.pos - hx, exit: Move::North, absorb_row });
                starts.insert(p.id, (0, p.pos));
            }
            _ => return invalid(format!("request {} enters through {:?} at {} with goal {:?}", p.id, p.side, p.pos, p.goal)),
        }
        if let Goal::Absorb(row) = p.goal {
            if row >= spec.lv {
                return invalid(format!("request {} absorbs outside the tile", p.id));
            }
        }
        if goals.insert(p.id, p.goal).is_some() {
            return invalid(format!("request {} appears twice", p.id));
        }
    }

    let nw_routes = route_greedy(hy, hx, spec.h_cap, spec.v_cap, &nw).map_err(infeasible("NW"))?;
    let se_routes = route_greedy(hy, spec.lh - hx, spec.h_cap, spec.v_cap, &se).map_err(infeasible("SE"))?;

    let mut out: BTreeMap<u64, TileRoute> = BTreeMap::new();
    let mut ne = Vec::new();
    for (routes, quadrant) in [(&nw_routes, "NW"), (&se_routes, "SE")] {
        for (&id, r) in routes {
            let start = starts[&id];
            match r.end {
                GEnd::Absorbed => {
                    out.insert(id, TileRoute { start, moves: r.moves.clone(), end: TileEnd::Absorbed });
                }
                GEnd::Exit { pos, .. } => {
                    let (exit, absorb_row) = match goals[&id] {
                        Goal::Exit(m) => (m, None),
                        Goal::Absorb(row) if row >= hy => (Move::North, Some(row - hy)),
                        Goal::Absorb(_) => return Err(StitchError::InfeasibleTile { quadrant }),
                    };
                    let entry = if quadrant == "NW" { Side::West } else { Side::South };
                    ne.push(GPacket { id, entry, index: pos, exit, absorb_row });
                    out.insert(id, TileRoute { start, moves: r.moves.clone(), end: TileEnd::Absorbed });
                }
            }
        }
    }
    let ne_routes = route_greedy(spec.lv - hy, spec.lh - hx, spec.h_cap, spec.v_cap, &ne).map_err(infeasible("NE"))?;
    for (id, r) in ne_routes {
        let route = out.get_mut(&id).expect("NE packets come from NW or SE");
        route.moves.extend(r.moves);
        route.end = match r.end {
            GEnd::Absorbed => TileEnd::Absorbed,
            GEnd::Exit { dir: Move::East, pos } => TileEnd::Exit { dir: Move::East, pos: hy + pos },
            GEnd::Exit { dir: Move::North, pos } => TileEnd::Exit { dir: Move::North, pos: hx + pos },
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasibility_examples() {
        let mut inst = CrossbarInstance::unit(2, 3);
        inst.we = vec![(0, 1)];
        inst.se = vec![(1, 2)];
        inst.wn = vec![(1, 3)];
        inst.sn = vec![(0, 4)];
        assert!(crossbar_feasible(&inst));
        assert!(crossbar_feasible(&CrossbarInstance::unit(2, 2)));
        let mut inst = CrossbarInstance::unit(2, 3);
        inst.we = vec![(0, 1)];
        inst.se = vec![(0, 2), (1, 3)];
        assert!(!crossbar_feasible(&inst));
        assert_eq!(crossbar_route(&inst), Err(CrossbarError::Infeasible));
    }

    #[test]
    fn wn_turns_on_diagonal() {
        for i in 0..3 {
            let mut inst = CrossbarInstance::unit(3, 4);
            inst.wn = vec![(i, 9)];
            let sol = crossbar_route(&inst).unwrap();
            let mut want = vec![Move::East; i];
            want.extend(vec![Move::North; 3 - i]);
            assert_eq!(sol.paths[&9].moves, want);
        }
    }

    #[test]
    fn surplus_se_finds_vacant_row() {
        let mut inst = CrossbarInstance::unit(2, 4);
        inst.se = vec![(0, 1), (3, 2)];
        let sol = crossbar_route(&inst).unwrap();
        assert_eq!(sol.paths[&1].moves, vec![Move::East; 4]);
        assert_eq!(sol.paths[&2].moves, vec![Move::North, Move::East]);
        check_solution(&inst, &sol).unwrap();
    }

    #[test]
    fn capacitated_lanes() {
        let mut inst = CrossbarInstance { rows: 1, cols: 2, h_cap: 2, v_cap: 1, ..Default::default() };
        inst.se = vec![(0, 1), (1, 2)];
        inst.sn = vec![];
        inst.wn = vec![(0, 3)];
        let sol = crossbar_route(&inst).unwrap();
        check_solution(&inst, &sol).unwrap();
        let sol = crossbar_route_causal(&inst).unwrap();
        check_solution(&inst, &sol).unwrap();
    }

    #[test]
    fn entry_overflow_is_invalid() {
        let mut inst = CrossbarInstance::unit(2, 2);
        inst.wn = vec![(0, 1)];
        inst.we = vec![(0, 2)];
        assert!(matches!(inst.validate(), Err(CrossbarError::Invalid(_))));
    }

    #[test]
    fn ledger_prefers_north_then_east() {
        let mut led = QuadrantLedger::new(3, 3, 1, 1);
        assert_eq!(led.initial_route(1, 1), Some(Move::North));
        led.reserve(1, 1, Move::North);
        assert_eq!(led.initial_route(1, 1), Some(Move::East));
        led.reserve(1, 1, Move::East);
        assert_eq!(led.initial_route(1, 1), None);
        // A lane below shares the north edges above row 1.
        assert_eq!(led.initial_route(1, 0), Some(Move::East));
        assert_eq!(led.usage(1, 2), (0, 1));
    }

    #[test]
    fn empty_tile() {
        let spec = TileSpec { lh: 4, lv: 4, h_cap: 1, v_cap: 1 };
        assert!(stitch_tile(spec, &[], &[]).unwrap().is_empty());
    }

    #[test]
    fn south_traversal_goes_straight() {
        let spec = TileSpec { lh: 4, lv: 4, h_cap: 1, v_cap: 1 };
        let e = EntryIn { id: 5, side: Side::South, pos: 3, goal: Goal::Exit(Move::North) };
        let out = stitch_tile(spec, &[], &[e]).unwrap();
        assert_eq!(out[&5].moves, vec![Move::North; 4]);
        assert_eq!(out[&5].end, TileEnd::Exit { dir: Move::North, pos: 3 });
    }

    #[test]
    fn final_stops_at_its_row() {
        let spec = TileSpec { lh: 4, lv: 6, h_cap: 1, v_cap: 1 };
        let e = EntryIn { id: 5, side: Side::South, pos: 2, goal: Goal::Absorb(4) };
        let out = stitch_tile(spec, &[], &[e]).unwrap();
        assert_eq!(out[&5].moves, vec![Move::North; 4]);
        assert_eq!(out[&5].end, TileEnd::Absorbed);
    }

    #[test]
    fn initial_north_lane_crosses_nw_then_ne() {
        let spec = TileSpec { lh: 4, lv: 4, h_cap: 1, v_cap: 1 };
        let p = InitialIn { id: 1, lane: Move::North, pos: 0, goal: Goal::Exit(Move::North) };
        let out = stitch_tile(spec, &[p], &[]).unwrap();
        let r = &out[&1];
        assert_eq!(r.start, (2, 0));
        assert_eq!(r.end, TileEnd::Exit { dir: Move::North, pos: 2 });
        assert_eq!(r.moves.iter().filter(|&&m| m == Move::East).count(), 2);
    }
}
