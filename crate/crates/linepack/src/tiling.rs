//! The four half-shifted tilings of the embedded grid and their sketch graphs.
//!
//! Tiling `j` has offsets `(phi_x, phi_y)`: `(0,0)`, `(-lh/2,0)`, `(0,-lv/2)` and
//! `(-lh/2,-lv/2)` for `j = 1..=4`. Tile `(ix, iy)` covers
//! `[phi_x + ix*lh, phi_x + (ix+1)*lh) x [phi_y + iy*lv, phi_y + (iy+1)*lv)`.

use serde::{Deserialize, Serialize};

use crate::model::NetConfig;
use crate::spacetime::{embed, EmbeddedPoint, Move, STVertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    SW,
    SE,
    NW,
    NE,
}

/// Tile coordinates within one tiling. The derived order is column-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileId {
    pub j: u8,
    pub ix: i64,
    pub iy: i64,
}

impl TileId {
    pub fn coords(self) -> (i64, i64) {
        (self.ix, self.iy)
    }

    pub fn step(self, m: Move) -> TileId {
        match m {
            Move::East => TileId { ix: self.ix + 1, ..self },
            Move::North => TileId { iy: self.iy + 1, ..self },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tiling {
    j: u8,
    phi_x: i64,
    phi_y: i64,
    lh: i64,
    lv: i64,
}

impl Tiling {
    /// Tiling `j` (1..=4) for tile sides `lh x lv` (both even).
    pub fn new(j: u8, lh: u32, lv: u32) -> Tiling {
        assert!((1..=4).contains(&j), "tiling index {j}");
        assert!(lh >= 2 && lv >= 2 && lh.is_multiple_of(2) && lv.is_multiple_of(2), "tile sides {lh}x{lv}");
        let (lh, lv) = (i64::from(lh), i64::from(lv));
        let phi_x = if j == 2 || j == 4 { -lh / 2 } else { 0 };
        let phi_y = if j >= 3 { -lv / 2 } else { 0 };
        Tiling { j, phi_x, phi_y, lh, lv }
    }

    pub fn j(&self) -> u8 {
        self.j
    }
    pub fn offsets(&self) -> (i64, i64) {
        (self.phi_x, self.phi_y)
    }
    pub fn lh(&self) -> i64 {
        self.lh
    }
    pub fn lv(&self) -> i64 {
        self.lv
    }

    pub fn tile_of_point(&self, p: EmbeddedPoint) -> TileId {
        TileId { j: self.j, ix: (p.x - self.phi_x).div_euclid(self.lh), iy: (p.y - self.phi_y).div_euclid(self.lv) }
    }

    pub fn tile_of(&self, w: STVertex) -> TileId {
        self.tile_of_point(embed(w))
    }

    /// South-west corner of a tile.
    pub fn origin(&self, ix: i64, iy: i64) -> EmbeddedPoint {
        EmbeddedPoint { x: self.phi_x + ix * self.lh, y: self.phi_y + iy * self.lv }
    }

    /// Offsets of `p` inside its tile.
    pub fn local(&self, p: EmbeddedPoint) -> (i64, i64) {
        ((p.x - self.phi_x).rem_euclid(self.lh), (p.y - self.phi_y).rem_euclid(self.lv))
    }

    pub fn quadrant_of_point(&self, p: EmbeddedPoint) -> Quadrant {
        let (lx, ly) = self.local(p);
        match (lx >= self.lh / 2, ly >= self.lv / 2) {
            (false, false) => Quadrant::SW,
            (true, false) => Quadrant::SE,
            (false, true) => Quadrant::NW,
            (true, true) => Quadrant::NE,
        }
    }

    pub fn quadrant_of(&self, w: STVertex) -> Quadrant {
        self.quadrant_of_point(embed(w))
    }

    /// Smallest and largest step `t = x + y` over the tile's lattice points.
    pub fn time_span(&self, ix: i64, iy: i64) -> (i64, i64) {
        let o = self.origin(ix, iy);
        (o.x + o.y, o.x + self.lh - 1 + o.y + self.lv - 1)
    }
}

/// The four tilings for one configuration.
#[derive(Debug, Clone)]
pub struct TilingSet {
    tilings: [Tiling; 4],
}

impl TilingSet {
    pub fn new(cfg: &NetConfig) -> TilingSet {
        TilingSet::with_sides(cfg.lh(), cfg.lv())
    }

    pub fn with_sides(lh: u32, lv: u32) -> TilingSet {
        TilingSet { tilings: [1, 2, 3, 4].map(|j| Tiling::new(j, lh, lv)) }
    }

    pub fn get(&self, j: u8) -> &Tiling {
        &self.tilings[usize::from(j) - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tiling> {
        self.tilings.iter()
    }

    /// The unique tiling in which `w` lies in a SW quadrant.
    pub fn sw_tiling_of_point(&self, p: EmbeddedPoint) -> u8 {
        let t = &self.tilings[0];
        let (lx, ly) = t.local(p);
        let shift_x = lx >= t.lh / 2;
        let shift_y = ly >= t.lv / 2;
        match (shift_x, shift_y) {
            (false, false) => 1,
            (true, false) => 2,
            (false, true) => 3,
            (true, true) => 4,
        }
    }

    pub fn sw_tiling(&self, w: STVertex) -> u8 {
        self.sw_tiling_of_point(embed(w))
    }
}

/// Sketch graph of one tiling over an `n`-node line: tiles are nodes, and an
/// east or north edge joins neighbouring tiles whenever some real space-time
/// edge crosses their common side. Each sketch edge has capacity 1; loads are
/// kept by the path packer.
#[derive(Debug, Clone, Copy)]
pub struct SketchGraph {
    tiling: Tiling,
    n: usize,
}

impl SketchGraph {
    pub fn new(tiling: Tiling, n: usize) -> SketchGraph {
        SketchGraph { tiling, n }
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Store edges leave the tile's east column on rows `0..n` with `t >= 0`.
    pub fn has_edge(&self, s: TileId, m: Move) -> bool {
        let o = self.tiling.origin(s.ix, s.iy);
        let (lh, lv) = (self.tiling.lh, self.tiling.lv);
        let n = self.n as i64;
        match m {
            Move::East => {
                let x = o.x + lh - 1;
                let y_lo = o.y.max(0);
                let y_hi = (o.y + lv - 1).min(n - 1);
                y_lo <= y_hi && x + y_hi >= 0
            }
            Move::North => {
                let y = o.y + lv - 1;
                (0..n - 1).contains(&y) && o.x + lh - 1 + y >= 0
            }
        }
    }

    pub fn neighbors(&self, s: TileId) -> Vec<(TileId, Move)> {
        [Move::East, Move::North].into_iter().filter(|&m| self.has_edge(s, m)).map(|m| (s.step(m), m)).collect()
    }

    /// Tile row holding node `b`; every tile in this row is wired to the sink of `b`.
    pub fn sink_row(&self, b: usize) -> i64 {
        (b as i64 - self.tiling.phi_y).div_euclid(self.tiling.lv)
    }

    pub fn is_sink(&self, s: TileId, b: usize) -> bool {
        s.iy == self.sink_row(b)
    }

    /// Sink tiles of `b` with column index in `ix_range`.
    pub fn sink_wiring(&self, b: usize, ix_range: std::ops::RangeInclusive<i64>) -> Vec<TileId> {
        let iy = self.sink_row(b);
        ix_range.map(|ix| TileId { j: self.tiling.j, ix, iy }).collect()
    }
}

/// Total capacity of the store edges crossing a vertical tile side.
pub fn horizontal_crossing_capacity(cfg: &NetConfig) -> u64 {
    u64::from(cfg.lv()) * u64::from(cfg.buffer())
}

/// Total capacity of the forward edges crossing a horizontal tile side.
pub fn vertical_crossing_capacity(cfg: &NetConfig) -> u64 {
    u64::from(cfg.lh()) * u64::from(cfg.link())
}
