//! The space-time graph: vertex `(v, t)` is node `v` at step `t`.
//!
//! Embedded at `(x, y) = (t - v, v)`, store edges point east and forward edges
//! point north, so every path is a monotone lattice path.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Track, TRACKS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct STVertex {
    pub v: usize,
    pub t: u64,
}

impl fmt::Display for STVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.v, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    /// `(v, t) -> (v, t+1)`.
    Store,
    /// `(v, t) -> (v+1, t+1)`.
    Forward,
}

/// A lattice step in embedded coordinates. `East < North`, which is the
/// tie-break order used for move sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    East,
    North,
}

impl Move {
    pub fn kind(self) -> EdgeKind {
        match self {
            Move::East => EdgeKind::Store,
            Move::North => EdgeKind::Forward,
        }
    }

    pub fn of_kind(kind: EdgeKind) -> Move {
        match kind {
            EdgeKind::Store => Move::East,
            EdgeKind::Forward => Move::North,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Move::East => 'E',
            Move::North => 'N',
        }
    }

    pub fn from_letter(c: char) -> Option<Move> {
        match c {
            'E' => Some(Move::East),
            'N' => Some(Move::North),
            _ => None,
        }
    }
}

pub fn moves_to_string(moves: &[Move]) -> String {
    moves.iter().map(|m| m.letter()).collect()
}

pub fn moves_from_str(s: &str) -> Option<Vec<Move>> {
    s.chars().map(Move::from_letter).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct STEdge {
    pub tail: STVertex,
    pub kind: EdgeKind,
}

impl STEdge {
    pub fn store(v: usize, t: u64) -> STEdge {
        STEdge { tail: STVertex { v, t }, kind: EdgeKind::Store }
    }

    pub fn forward(v: usize, t: u64) -> STEdge {
        STEdge { tail: STVertex { v, t }, kind: EdgeKind::Forward }
    }

    pub fn head(&self) -> STVertex {
        match self.kind {
            EdgeKind::Store => STVertex { v: self.tail.v, t: self.tail.t + 1 },
            EdgeKind::Forward => STVertex { v: self.tail.v + 1, t: self.tail.t + 1 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EmbeddedPoint {
    pub x: i64,
    pub y: i64,
}

impl EmbeddedPoint {
    pub fn step(self, m: Move) -> EmbeddedPoint {
        match m {
            Move::East => EmbeddedPoint { x: self.x + 1, y: self.y },
            Move::North => EmbeddedPoint { x: self.x, y: self.y + 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceTimeError {
    #[error("embedded point ({x}, {y}) is not a vertex of the {n}-node space-time graph")]
    OutOfRange { x: i64, y: i64, n: usize },
}

pub fn embed(w: STVertex) -> EmbeddedPoint {
    EmbeddedPoint { x: w.t as i64 - w.v as i64, y: w.v as i64 }
}

pub fn unembed(p: EmbeddedPoint, n: usize) -> Result<STVertex, SpaceTimeError> {
    let t = p.x + p.y;
    if p.y < 0 || p.y >= n as i64 || t < 0 {
        return Err(SpaceTimeError::OutOfRange { x: p.x, y: p.y, n });
    }
    Ok(STVertex { v: p.y as usize, t: t as u64 })
}

/// The store edge, plus the forward edge unless `w` is on the last node.
pub fn out_edges(n: usize, w: STVertex) -> impl Iterator<Item = STEdge> {
    let fwd = (w.v + 1 < n).then(|| STEdge::forward(w.v, w.t));
    std::iter::once(STEdge::store(w.v, w.t)).chain(fwd)
}

/// All edges whose tail lies in steps `t0..t1`.
pub fn window_edges(n: usize, t0: u64, t1: u64) -> impl Iterator<Item = STEdge> {
    (t0..t1).flat_map(move |t| (0..n).flat_map(move |v| out_edges(n, STVertex { v, t })))
}

/// Per-track usage counters over a sliding window of steps.
///
/// Columns are created on demand as reservations reach into the future and
/// dropped by [`EdgeLedger::retire_before`].
#[derive(Debug, Clone)]
pub struct EdgeLedger {
    n: usize,
    base: u64,
    cols: VecDeque<Vec<[u16; 2 * TRACKS]>>,
}

fn slot(kind: EdgeKind, track: Track) -> usize {
    match kind {
        EdgeKind::Store => track.index(),
        EdgeKind::Forward => TRACKS + track.index(),
    }
}

impl EdgeLedger {
    pub fn new(n: usize) -> Self {
        EdgeLedger { n, base: 0, cols: VecDeque::new() }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn usage(&self, e: STEdge, track: Track) -> u32 {
        if e.tail.t < self.base {
            return 0;
        }
        let i = (e.tail.t - self.base) as usize;
        self.cols.get(i).map_or(0, |col| u32::from(col[e.tail.v][slot(e.kind, track)]))
    }

    pub fn add(&mut self, e: STEdge, track: Track) {
        assert!(e.tail.t >= self.base, "reservation on retired step {}", e.tail.t);
        assert!(e.tail.v < self.n);
        let i = (e.tail.t - self.base) as usize;
        while self.cols.len() <= i {
            self.cols.push_back(vec![[0; 2 * TRACKS]; self.n]);
        }
        self.cols[i][e.tail.v][slot(e.kind, track)] += 1;
    }

    /// Drops every column with step below `t`.
    pub fn retire_before(&mut self, t: u64) {
        while self.base < t {
            self.cols.pop_front();
            self.base += 1;
        }
    }

    /// Nonzero counters as `(edge, track, usage)`, in edge order.
    pub fn entries(&self) -> Vec<(STEdge, Track, u32)> {
        let mut out = Vec::new();
        for (i, col) in self.cols.iter().enumerate() {
            let t = self.base + i as u64;
            for (v, slots) in col.iter().enumerate() {
                for (s, &u) in slots.iter().enumerate() {
                    if u > 0 {
                        let kind = if s < TRACKS { EdgeKind::Store } else { EdgeKind::Forward };
                        let track = Track::from_index(s % TRACKS).expect("slot in range");
                        out.push((STEdge { tail: STVertex { v, t }, kind }, track, u32::from(u)));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_examples() {
        assert_eq!(embed(STVertex { v: 0, t: 0 }), EmbeddedPoint { x: 0, y: 0 });
        assert_eq!(embed(STVertex { v: 3, t: 7 }), EmbeddedPoint { x: 4, y: 3 });
        assert_eq!(embed(STVertex { v: 5, t: 2 }), EmbeddedPoint { x: -3, y: 5 });
    }

    #[test]
    fn unembed_examples() {
        assert_eq!(unembed(EmbeddedPoint { x: 0, y: 0 }, 4), Ok(STVertex { v: 0, t: 0 }));
        assert_eq!(unembed(EmbeddedPoint { x: 4, y: 3 }, 4), Ok(STVertex { v: 3, t: 7 }));
        assert!(unembed(EmbeddedPoint { x: 0, y: 4 }, 4).is_err());
        assert!(unembed(EmbeddedPoint { x: 0, y: -1 }, 4).is_err());
        assert!(unembed(EmbeddedPoint { x: -3, y: 2 }, 4).is_err());
    }

    #[test]
    fn round_trip_exhaustive() {
        let n = 9;
        for v in 0..n {
            for t in 0..40 {
                let w = STVertex { v, t };
                assert_eq!(unembed(embed(w), n), Ok(w));
            }
        }
    }

    #[test]
    fn out_edge_counts() {
        assert_eq!(out_edges(4, STVertex { v: 3, t: 0 }).count(), 1);
        assert_eq!(out_edges(4, STVertex { v: 2, t: 9 }).count(), 2);
        assert_eq!(window_edges(4, 0, 5).count(), 35);
    }

    #[test]
    fn moves_are_embedded_east_and_north() {
        let w = STVertex { v: 2, t: 5 };
        for e in out_edges(4, w) {
            let d = embed(e.head());
            let p = embed(w).step(Move::of_kind(e.kind));
            assert_eq!(d, p);
        }
    }

    #[test]
    fn ledger_window() {
        let mut led = EdgeLedger::new(3);
        let e = STEdge::forward(1, 4);
        led.add(e, Track::Near);
        led.add(e, Track::Near);
        led.add(STEdge::store(0, 4), Track::Far(2));
        assert_eq!(led.usage(e, Track::Near), 2);
        assert_eq!(led.usage(e, Track::Far(1)), 0);
        assert_eq!(led.usage(STEdge::store(0, 4), Track::Far(2)), 1);
        assert_eq!(led.entries().len(), 2);
        led.retire_before(5);
        assert_eq!(led.usage(e, Track::Near), 0);
        assert!(led.entries().is_empty());
    }
}
