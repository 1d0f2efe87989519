//! Configuration, requests and the constants every other module derives from.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spacetime::{EdgeKind, STVertex};
use crate::tiling::TilingSet;

/// Number of tracks each edge is split into: one near track and one per tiling.
pub const TRACKS: usize = 5;

/// Largest `k` accepted; sketch weights `2^k - 1` must fit in a `u64` sum.
const MAX_K: u32 = 48;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("missing configuration value `{0}`")]
    Missing(&'static str),
    #[error("bad parameter `{name}`: {reason}")]
    BadParameter { name: &'static str, reason: String },
}

fn bad(name: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadParameter { name, reason: reason.into() }
}

/// Explicit tile parameters. Only meant for tests that need far requests on
/// small networks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lh: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lv: Option<u32>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.k.is_none() && self.lh.is_none() && self.lv.is_none()
    }
}

/// Unvalidated configuration as read from a file or flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    pub n: Option<u64>,
    pub buffer: Option<u64>,
    pub link: Option<u64>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub overrides: Overrides,
}

impl RawConfig {
    pub fn new(n: u64, buffer: u64, link: u64, horizon: u64) -> Self {
        RawConfig {
            n: Some(n),
            buffer: Some(buffer),
            link: Some(link),
            horizon: Some(horizon),
            seed: None,
            overrides: Overrides::default(),
        }
    }

    pub fn with_overrides(mut self, overrides: Overrides) -> Self {
        self.overrides = overrides;
        self
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merged_with(&self, other: &RawConfig) -> RawConfig {
        RawConfig {
            n: other.n.or(self.n),
            buffer: other.buffer.or(self.buffer),
            link: other.link.or(self.link),
            horizon: other.horizon.or(self.horizon),
            seed: other.seed.or(self.seed),
            overrides: Overrides {
                k: other.overrides.k.or(self.overrides.k),
                lh: other.overrides.lh.or(self.overrides.lh),
                lv: other.overrides.lv.or(self.overrides.lv),
            },
        }
    }
}

/// Validated network and algorithm parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetConfig {
    n: usize,
    #[serde(rename = "B")]
    buffer: u32,
    #[serde(rename = "c")]
    link: u32,
    horizon: u64,
    #[serde(skip_serializing_if = "Overrides::is_empty")]
    overrides: Overrides,
    #[serde(skip)]
    buffer_track: u32,
    #[serde(skip)]
    link_track: u32,
    #[serde(skip)]
    p_max: u64,
    #[serde(skip)]
    k: u32,
    #[serde(skip)]
    lh: u32,
    #[serde(skip)]
    lv: u32,
}

/// `ceil(6k / cap)` rounded up to an even number.
fn tile_side(k: u32, track_cap: u32) -> u32 {
    let side = (6 * k).div_ceil(track_cap);
    side + side % 2
}

pub fn validate_config(raw: &RawConfig) -> Result<NetConfig, ConfigError> {
    let n = raw.n.ok_or(ConfigError::Missing("n"))?;
    let buffer = raw.buffer.ok_or(ConfigError::Missing("B"))?;
    let link = raw.link.ok_or(ConfigError::Missing("c"))?;
    let horizon = raw.horizon.ok_or(ConfigError::Missing("horizon"))?;

    if n < 2 {
        return Err(bad("n", format!("need at least 2 nodes, got {n}")));
    }
    if n > 1 << 20 {
        return Err(bad("n", format!("{n} nodes is beyond the supported range")));
    }
    if buffer < 5 {
        return Err(bad("B", format!("B = {buffer} leaves no buffer track (need B >= 5)")));
    }
    if link < 5 {
        return Err(bad("c", format!("c = {link} leaves no link track (need c >= 5)")));
    }
    if buffer > 1 << 20 || link > 1 << 20 {
        return Err(bad("B", "capacities above 2^20 are not supported"));
    }
    if horizon < 1 {
        return Err(bad("horizon", "horizon must be at least 1"));
    }

    let buffer_track = (buffer / 5) as u32;
    let link_track = (link / 5) as u32;
    // p_max = ceil(2n (c + B) / c), exact in integers.
    let p_max = (2 * n * (link + buffer)).div_ceil(link);
    // Smallest k with 2^k >= 1 + 3 p_max.
    let target = 1 + 3 * p_max;
    let natural_k = 64 - (target - 1).leading_zeros();

    let k = match raw.overrides.k {
        Some(k) if k == 0 || k > MAX_K => return Err(bad("overrides.k", format!("k = {k} outside 1..={MAX_K}"))),
        Some(k) => k,
        None => natural_k,
    };
    if k > MAX_K {
        return Err(bad("B", format!("k = {k} exceeds {MAX_K}; B/c is too large for this n")));
    }
    let lh = match raw.overrides.lh {
        Some(lh) => lh,
        None => tile_side(k, link_track),
    };
    let lv = match raw.overrides.lv {
        Some(lv) => lv,
        None => tile_side(k, buffer_track),
    };
    for (name, side, cap) in [("overrides.lh", lh, link_track), ("overrides.lv", lv, buffer_track)] {
        if side < 2 || side % 2 != 0 {
            return Err(bad(name, format!("tile side {side} must be even and at least 2")));
        }
        if u64::from(side) * u64::from(cap) < 6 * u64::from(k) {
            return Err(bad(name, format!("tile side {side} times track capacity {cap} is below 6k = {}", 6 * k)));
        }
    }

    Ok(NetConfig {
        n: n as usize,
        buffer: buffer as u32,
        link: link as u32,
        horizon,
        overrides: raw.overrides,
        buffer_track,
        link_track,
        p_max,
        k,
        lh,
        lv,
    })
}

impl NetConfig {
    pub fn n(&self) -> usize {
        self.n
    }
    /// Buffer size `B`.
    pub fn buffer(&self) -> u32 {
        self.buffer
    }
    /// Link capacity `c`.
    pub fn link(&self) -> u32 {
        self.link
    }
    pub fn horizon(&self) -> u64 {
        self.horizon
    }
    pub fn overrides(&self) -> Overrides {
        self.overrides
    }
    /// `B' = floor(B/5)`, the store capacity of one track.
    pub fn buffer_track(&self) -> u32 {
        self.buffer_track
    }
    /// `c' = floor(c/5)`, the forward capacity of one track.
    pub fn link_track(&self) -> u32 {
        self.link_track
    }
    /// Upper bound on the number of steps any accepted packet spends in the network.
    pub fn p_max(&self) -> u64 {
        self.p_max
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    /// Tile width (embedded x extent).
    pub fn lh(&self) -> u32 {
        self.lh
    }
    /// Tile height (embedded y extent).
    pub fn lv(&self) -> u32 {
        self.lv
    }

    /// Admission threshold of the path packer: a sketch path is accepted only
    /// if its weight is strictly below this value. `2^k - 1` caps it so that
    /// an edge at load `k` can never be used again.
    pub fn threshold(&self) -> u64 {
        (3 * self.p_max).min((1u64 << self.k) - 1)
    }

    /// Maximum number of sketch hops of a far request.
    pub fn hop_bound(&self) -> u32 {
        let half_h = u64::from(self.lh / 2);
        let half_v = u64::from(self.lv / 2);
        (self.p_max.div_ceil(half_h) + self.p_max.div_ceil(half_v) + 2) as u32
    }

    pub fn edge_capacity(&self, kind: EdgeKind) -> u32 {
        match kind {
            EdgeKind::Store => self.buffer,
            EdgeKind::Forward => self.link,
        }
    }

    pub fn track_capacity(&self, kind: EdgeKind) -> u32 {
        match kind {
            EdgeKind::Store => self.buffer_track,
            EdgeKind::Forward => self.link_track,
        }
    }

    /// The raw values this configuration was built from.
    pub fn raw(&self) -> RawConfig {
        RawConfig::new(self.n as u64, u64::from(self.buffer), u64::from(self.link), self.horizon)
            .with_overrides(self.overrides)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("request {id}: source {src} must be strictly below destination {dst}")]
    Backward { id: u64, src: usize, dst: usize },
    #[error("request {id}: node {node} outside 0..{n}")]
    OutOfRange { id: u64, node: usize, n: usize },
}

/// A packet request `(a, b, t)`: enter at node `src` at step `t`, leave at `dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub t: u64,
}

impl Request {
    pub fn new(id: u64, src: usize, dst: usize, t: u64, n: usize) -> Result<Request, RequestError> {
        let r = Request { id, src, dst, t };
        r.validate(n)?;
        Ok(r)
    }

    pub fn validate(&self, n: usize) -> Result<(), RequestError> {
        if self.src >= self.dst {
            return Err(RequestError::Backward { id: self.id, src: self.src, dst: self.dst });
        }
        if self.dst >= n {
            return Err(RequestError::OutOfRange { id: self.id, node: self.dst, n });
        }
        Ok(())
    }

    /// `b - a`.
    pub fn span(&self) -> usize {
        self.dst - self.src
    }

    pub fn source(&self) -> STVertex {
        STVertex { v: self.src, t: self.t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RequestClass {
    Near,
    /// Tiling index `j` in `1..=4`.
    Far(u8),
}

impl RequestClass {
    pub fn track(self) -> Track {
        match self {
            RequestClass::Near => Track::Near,
            RequestClass::Far(j) => Track::Far(j),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RequestClass::Near => "near",
            RequestClass::Far(1) => "far1",
            RequestClass::Far(2) => "far2",
            RequestClass::Far(3) => "far3",
            RequestClass::Far(_) => "far4",
        }
    }

    pub fn from_label(s: &str) -> Option<RequestClass> {
        match s {
            "near" => Some(RequestClass::Near),
            "far1" => Some(RequestClass::Far(1)),
            "far2" => Some(RequestClass::Far(2)),
            "far3" => Some(RequestClass::Far(3)),
            "far4" => Some(RequestClass::Far(4)),
            _ => None,
        }
    }
}

/// One fifth of every edge. Track index 0 is the near track, `j` the far track of tiling `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Track {
    Near,
    Far(u8),
}

impl Track {
    pub fn index(self) -> usize {
        match self {
            Track::Near => 0,
            Track::Far(j) => j as usize,
        }
    }

    pub fn from_index(i: usize) -> Option<Track> {
        match i {
            0 => Some(Track::Near),
            1..=4 => Some(Track::Far(i as u8)),
            _ => None,
        }
    }
}

/// Near iff `b - a <= lv`; otherwise the unique tiling whose SW quadrant holds the source.
pub fn classify(cfg: &NetConfig, tilings: &TilingSet, r: &Request) -> RequestClass {
    if r.span() <= cfg.lv() as usize {
        RequestClass::Near
    } else {
        RequestClass::Far(tilings.sw_tiling(r.source()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: u64, b: u64, c: u64) -> Result<NetConfig, ConfigError> {
        validate_config(&RawConfig::new(n, b, c, 10))
    }

    #[test]
    fn derived_constants_n32() {
        let c = cfg(32, 5, 5).unwrap();
        assert_eq!((c.buffer_track(), c.link_track()), (1, 1));
        assert_eq!(c.p_max(), 128);
        assert_eq!(c.k(), 9);
        assert_eq!((c.lh(), c.lv()), (54, 54));
    }

    #[test]
    fn derived_constants_n2() {
        let c = cfg(2, 5, 5).unwrap();
        assert_eq!(c.p_max(), 8);
        assert_eq!(c.k(), 5);
        assert_eq!((c.lh(), c.lv()), (30, 30));
    }

    #[test]
    fn small_buffer_rejected() {
        assert!(matches!(cfg(32, 4, 5), Err(ConfigError::BadParameter { name: "B", .. })));
        assert!(matches!(cfg(32, 5, 4), Err(ConfigError::BadParameter { name: "c", .. })));
        assert!(matches!(cfg(1, 5, 5), Err(ConfigError::BadParameter { name: "n", .. })));
        assert!(matches!(validate_config(&RawConfig::new(4, 5, 5, 0)), Err(ConfigError::BadParameter { name: "horizon", .. })));
    }

    #[test]
    fn missing_fields() {
        let mut raw = RawConfig::new(4, 5, 5, 3);
        raw.link = None;
        assert_eq!(validate_config(&raw), Err(ConfigError::Missing("c")));
    }

    #[test]
    fn p_max_rounds_up_rational() {
        // 2 * 3 * (1 + 6/7) = 78/7 = 11.14...
        let c = cfg(3, 6, 7).unwrap();
        assert_eq!(c.p_max(), 12);
    }

    #[test]
    fn threshold_keeps_k_packing_when_power_of_two() {
        // n=2, B=85, c=20: p_max = 4 * 105 / 20 = 21, 1 + 3*21 = 64 = 2^6.
        let c = cfg(2, 85, 20).unwrap();
        assert_eq!(c.p_max(), 21);
        assert_eq!(c.k(), 6);
        assert_eq!(c.threshold(), 63);
        assert!((1u64 << c.k()) > c.threshold());
    }

    #[test]
    fn overrides_validated() {
        let raw = RawConfig::new(16, 5, 5, 10).with_overrides(Overrides { k: Some(2), lh: None, lv: None });
        let c = validate_config(&raw).unwrap();
        assert_eq!((c.k(), c.lh(), c.lv()), (2, 12, 12));
        let raw = RawConfig::new(16, 5, 5, 10).with_overrides(Overrides { k: Some(2), lh: Some(10), lv: None });
        assert!(validate_config(&raw).is_err());
        let raw = RawConfig::new(16, 5, 5, 10).with_overrides(Overrides { k: Some(2), lh: Some(13), lv: None });
        assert!(validate_config(&raw).is_err());
    }

    #[test]
    fn request_validation() {
        assert!(Request::new(0, 3, 3, 0, 8).is_err());
        assert!(Request::new(0, 4, 2, 0, 8).is_err());
        assert!(Request::new(0, 1, 8, 0, 8).is_err());
        assert!(Request::new(0, 1, 7, 0, 8).is_ok());
    }
}
