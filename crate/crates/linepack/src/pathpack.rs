//! Online integral path packing on a sketch graph.
//!
//! Edge weights are `2^load - 1`. A request is offered its lightest monotone
//! sketch path to a tile of its destination row, and accepted iff that path
//! weighs strictly less than the threshold. Offers never change state, so the
//! state is a function of the committed paths alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spacetime::Move;
use crate::tiling::{SketchGraph, TileId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PackError {
    #[error("no admissible sketch path")]
    NoPath,
    #[error("request {0} already committed")]
    DoubleCommit(u64),
    #[error("sketch path weight overflows u64")]
    WeightOverflow,
}

/// An edge of a sketch graph, named by its tail tile and direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SketchEdge {
    pub ix: i64,
    pub iy: i64,
    pub dir: Move,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SketchPath {
    pub src: (i64, i64),
    pub moves: Vec<Move>,
}

impl SketchPath {
    pub fn hops(&self) -> usize {
        self.moves.len()
    }

    pub fn tiles(&self) -> Vec<(i64, i64)> {
        let mut cur = self.src;
        let mut out = vec![cur];
        for &m in &self.moves {
            cur = step(cur, m);
            out.push(cur);
        }
        out
    }

    pub fn edges(&self) -> Vec<SketchEdge> {
        let mut cur = self.src;
        self.moves
            .iter()
            .map(|&m| {
                let e = SketchEdge { ix: cur.0, iy: cur.1, dir: m };
                cur = step(cur, m);
                e
            })
            .collect()
    }

    pub fn east_hops(&self) -> usize {
        self.moves.iter().filter(|&&m| m == Move::East).count()
    }
}

fn step((ix, iy): (i64, i64), m: Move) -> (i64, i64) {
    match m {
        Move::East => (ix + 1, iy),
        Move::North => (ix, iy + 1),
    }
}

/// Which sketch edges exist.
pub trait SketchTopology {
    fn has_edge(&self, from: (i64, i64), m: Move) -> bool;
}

impl SketchTopology for SketchGraph {
    fn has_edge(&self, from: (i64, i64), m: Move) -> bool {
        SketchGraph::has_edge(self, TileId { j: self.tiling().j(), ix: from.0, iy: from.1 }, m)
    }
}

/// A finite `width x height` grid with every east and north edge present.
#[derive(Debug, Clone, Copy)]
pub struct GridSketch {
    pub width: i64,
    pub height: i64,
}

impl SketchTopology for GridSketch {
    fn has_edge(&self, (ix, iy): (i64, i64), m: Move) -> bool {
        let inside = (0..self.width).contains(&ix) && (0..self.height).contains(&iy);
        inside
            && match m {
                Move::East => ix + 1 < self.width,
                Move::North => iy + 1 < self.height,
            }
    }
}

/// Constraints on the admissible paths of one request.
pub struct PathQuery<'a> {
    pub src: (i64, i64),
    /// Tiles at which a path ends. Paths stop at the first sink they reach.
    pub is_sink: &'a dyn Fn((i64, i64)) -> bool,
    pub max_hops: u32,
    pub max_east: Option<u32>,
}

#[derive(Clone)]
struct Label {
    weight: u64,
    moves: Vec<Move>,
}

/// Minimum-weight admissible path. Ties go to fewer hops, then to the
/// lexicographically smaller move sequence (`East < North`).
pub fn lightest_path<T: SketchTopology + ?Sized>(
    topo: &T,
    weight: &dyn Fn(SketchEdge) -> Result<u64, PackError>,
    q: &PathQuery<'_>,
) -> Result<(SketchPath, u64), PackError> {
    // Every path to a given tile has the same hop count, so a layer-by-layer
    // sweep with one best label per tile is exact.
    let mut best: Option<(u64, usize, Vec<Move>)> = None;
    let mut layer: BTreeMap<(i64, i64), Label> = BTreeMap::new();
    layer.insert(q.src, Label { weight: 0, moves: Vec::new() });
    for hops in 0..=q.max_hops as usize {
        let mut next: BTreeMap<(i64, i64), Label> = BTreeMap::new();
        for (&tile, label) in &layer {
            if hops > 0 && (q.is_sink)(tile) {
                let cand = (label.weight, hops, label.moves.clone());
                if best.as_ref().is_none_or(|b| cand < *b) {
                    best = Some(cand);
                }
                continue;
            }
            if hops == q.max_hops as usize {
                continue;
            }
            let easts = label.moves.iter().filter(|&&m| m == Move::East).count() as u32;
            for m in [Move::East, Move::North] {
                if m == Move::East && q.max_east.is_some_and(|cap| easts >= cap) {
                    continue;
                }
                if !topo.has_edge(tile, m) {
                    continue;
                }
                let e = SketchEdge { ix: tile.0, iy: tile.1, dir: m };
                let w = label.weight.checked_add(weight(e)?).ok_or(PackError::WeightOverflow)?;
                let mut moves = label.moves.clone();
                moves.push(m);
                let cand = Label { weight: w, moves };
                let to = step(tile, m);
                match next.get(&to) {
                    Some(old) if (old.weight, &old.moves) <= (cand.weight, &cand.moves) => {}
                    _ => {
                        next.insert(to, cand);
                    }
                }
            }
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    best.map(|(w, _, moves)| (SketchPath { src: q.src, moves }, w)).ok_or(PackError::NoPath)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PackParams {
    /// Load bound; also the exponent limit of the weights.
    pub k: u32,
    /// Offers weighing at least this much are rejected.
    pub threshold: u64,
    pub max_hops: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Offer {
    Accept { path: SketchPath, weight: u64 },
    Reject { path: SketchPath, weight: u64 },
}

/// Loads and committed paths of one sketch graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackState {
    params: PackParams,
    loads: BTreeMap<SketchEdge, u32>,
    archived: BTreeMap<SketchEdge, u32>,
    committed: BTreeMap<u64, SketchPath>,
}

impl PackState {
    pub fn new(params: PackParams) -> Self {
        PackState { params, loads: BTreeMap::new(), archived: BTreeMap::new(), committed: BTreeMap::new() }
    }

    pub fn params(&self) -> PackParams {
        self.params
    }

    pub fn load(&self, e: SketchEdge) -> u32 {
        self.loads.get(&e).or_else(|| self.archived.get(&e)).copied().unwrap_or(0)
    }

    pub fn weight(&self, e: SketchEdge) -> Result<u64, PackError> {
        let load = self.load(e);
        1u64.checked_shl(load).map(|p| p - 1).filter(|_| load < 64).ok_or(PackError::WeightOverflow)
    }

    pub fn max_load(&self) -> u32 {
        self.loads.values().chain(self.archived.values()).copied().max().unwrap_or(0)
    }

    /// Lightest admissible path and the admission verdict. Does not mutate.
    pub fn ipp_offer<T: SketchTopology + ?Sized>(&self, topo: &T, q: &PathQuery<'_>) -> Result<Offer, PackError> {
        let w = |e: SketchEdge| self.weight(e);
        let (path, weight) = lightest_path(topo, &w, q)?;
        Ok(if weight < self.params.threshold {
            Offer::Accept { path, weight }
        } else {
            Offer::Reject { path, weight }
        })
    }

    pub fn ipp_commit(&mut self, id: u64, path: SketchPath) -> Result<(), PackError> {
        if self.committed.contains_key(&id) {
            return Err(PackError::DoubleCommit(id));
        }
        for e in path.edges() {
            *self.loads.entry(e).or_insert(0) += 1;
        }
        self.committed.insert(id, path);
        Ok(())
    }

    /// Moves the loads of edges leaving tiles selected by `done` out of the live
    /// set. Loads stay queryable; only their storage changes.
    pub fn archive(&mut self, done: impl Fn((i64, i64)) -> bool) {
        let keys: Vec<SketchEdge> = self.loads.keys().copied().filter(|e| done((e.ix, e.iy))).collect();
        for e in keys {
            let l = self.loads.remove(&e).expect("key just listed");
            self.archived.insert(e, l);
        }
    }

    pub fn committed(&self) -> &BTreeMap<u64, SketchPath> {
        &self.committed
    }

    /// All loads, live and archived, for replay comparisons.
    pub fn all_loads(&self) -> BTreeMap<SketchEdge, u32> {
        let mut all = self.archived.clone();
        all.extend(self.loads.iter().map(|(&e, &l)| (e, l)));
        all
    }
}
