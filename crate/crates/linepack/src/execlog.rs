//! Execution logs and their independent verifier.
//!
//! A log is JSON Lines: a `header`, then per step the `arrival` decisions,
//! the `move` of every live packet, `deliver` and `drop` events, and a final
//! `end`. [`verify_log`] re-derives every constraint from the raw events and
//! shares no state with the engine that wrote them.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{classify, validate_config, Overrides, RawConfig, Request, RequestClass, Track, TRACKS};
use crate::spacetime::{moves_from_str, EdgeKind, STVertex};
use crate::tiling::TilingSet;

pub const LOG_SCHEMA: u32 = 1;

/// Steps beyond this are rejected so that embedded coordinates stay in range.
const MAX_STEP: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Paper,
    Greedy,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Paper => "paper",
            Policy::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Reject,
    /// Removed by the per-vertex filter before admission.
    Filter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogEdge {
    #[serde(rename = "S")]
    Store,
    #[serde(rename = "F")]
    Forward,
}

impl From<EdgeKind> for LogEdge {
    fn from(k: EdgeKind) -> Self {
        match k {
            EdgeKind::Store => LogEdge::Store,
            EdgeKind::Forward => LogEdge::Forward,
        }
    }
}

impl From<LogEdge> for EdgeKind {
    fn from(k: LogEdge) -> Self {
        match k {
            LogEdge::Store => EdgeKind::Store,
            LogEdge::Forward => EdgeKind::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogConfig {
    pub n: u64,
    #[serde(rename = "B")]
    pub buffer: u64,
    #[serde(rename = "c")]
    pub link: u64,
    pub horizon: u64,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
}

impl From<&RawConfig> for LogConfig {
    fn from(raw: &RawConfig) -> Self {
        LogConfig {
            n: raw.n.unwrap_or(0),
            buffer: raw.buffer.unwrap_or(0),
            link: raw.link.unwrap_or(0),
            horizon: raw.horizon.unwrap_or(0),
            overrides: raw.overrides,
        }
    }
}

/// The sketch path of an admitted far request: source tile and moves as `E`/`N` letters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchRecord {
    pub tile: (i64, i64),
    pub moves: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LogEvent {
    Header {
        schema: u32,
        policy: Policy,
        config: LogConfig,
    },
    Arrival {
        t: u64,
        id: u64,
        src: usize,
        dst: usize,
        decision: Decision,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sketch: Option<SketchRecord>,
    },
    Move {
        t: u64,
        id: u64,
        v: usize,
        edge: LogEdge,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        track: Option<u8>,
    },
    Deliver {
        t: u64,
        id: u64,
        v: usize,
    },
    Drop {
        t: u64,
        id: u64,
        v: usize,
    },
    End {
        t: u64,
        accepted: u64,
        delivered: u64,
        dropped: u64,
    },
}

pub fn write_log(events: &[LogEvent]) -> String {
    let mut s = String::new();
    for e in events {
        s.push_str(&serde_json::to_string(e).expect("events serialize"));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}{}: {msg}", step.map(|t| format!(", step {t}")).unwrap_or_default())]
pub struct VerifyError {
    pub line: usize,
    pub step: Option<u64>,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub policy: Policy,
    pub steps: u64,
    pub arrivals: u64,
    pub accepted: u64,
    pub delivered: u64,
    pub dropped: u64,
}

struct Live {
    req: Request,
    class: Option<RequestClass>,
    pos: STVertex,
    sketch: Option<Vec<(i64, i64)>>,
    visited: Vec<(i64, i64)>,
}

struct Verifier {
    policy: Policy,
    cfg: crate::model::NetConfig,
    tilings: TilingSet,
    step: u64,
    last_id: Option<u64>,
    live: BTreeMap<u64, Live>,
    usage: HashMap<(usize, EdgeKind), [u32; TRACKS + 1]>,
    arrivals: u64,
    accepted: u64,
    delivered: u64,
    dropped: u64,
}

impl Verifier {
    /// Closes step `self.step`: capacities and "everyone moved".
    fn close_step(&mut self) -> Result<(), String> {
        let t = self.step;
        let mut usage: Vec<_> = std::mem::take(&mut self.usage).into_iter().collect();
        usage.sort();
        for ((v, kind), counts) in usage {
            let total = counts[TRACKS];
            if total > self.cfg.edge_capacity(kind) {
                let what = if kind == EdgeKind::Store { "buffer" } else { "link" };
                return Err(format!("{what} at node {v} carries {total} > {}", self.cfg.edge_capacity(kind)));
            }
            if self.policy == Policy::Paper {
                if let Some(tr) = counts[..TRACKS].iter().position(|&u| u > self.cfg.track_capacity(kind)) {
                    return Err(format!("track {tr} of {kind:?} edge at node {v} carries {}", counts[tr]));
                }
            }
        }
        if let Some((id, _)) = self.live.iter().find(|(_, p)| p.pos.t == t) {
            return Err(format!("packet {id} neither moved, was delivered, nor dropped"));
        }
        self.step += 1;
        Ok(())
    }

    /// Closes every step before `t`; errors name the step they belong to.
    fn advance_to(&mut self, t: u64) -> Result<(), (u64, String)> {
        if t > MAX_STEP {
            return Err((t, format!("step {t} out of range")));
        }
        if t < self.step {
            return Err((t, format!("event for step {t} after step {}", self.step)));
        }
        while self.step < t {
            let s = self.step;
            self.close_step().map_err(|m| (s, m))?;
            if self.live.is_empty() {
                self.step = t;
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn arrival(&mut self, t: u64, id: u64, src: usize, dst: usize, decision: Decision, class: Option<&str>, sketch: Option<&SketchRecord>) -> Result<(), String> {
        if self.last_id.is_some_and(|last| id <= last) {
            return Err(format!("arrival id {id} is not increasing"));
        }
        self.last_id = Some(id);
        let req = Request { id, src, dst, t };
        req.validate(self.cfg.n()).map_err(|e| e.to_string())?;
        self.arrivals += 1;
        if self.policy == Policy::Greedy && decision == Decision::Filter {
            return Err("greedy runs do not filter".into());
        }
        if decision != Decision::Accept {
            return Ok(());
        }
        self.accepted += 1;
        let pos = req.source();
        let mut live = Live { req, class: None, pos, sketch: None, visited: Vec::new() };
        if self.policy == Policy::Paper {
            let expected = classify(&self.cfg, &self.tilings, &req);
            let label = class.ok_or("accepted request without a class")?;
            if RequestClass::from_label(label) != Some(expected) {
                return Err(format!("request {id} labelled {label}, classifies as {}", expected.label()));
            }
            live.class = Some(expected);
            if let RequestClass::Far(j) = expected {
                let sk = sketch.ok_or("far request without a sketch path")?;
                let moves = moves_from_str(&sk.moves).ok_or("sketch moves must be E/N letters")?;
                let here = self.tilings.get(j).tile_of(pos);
                if (here.ix, here.iy) != sk.tile {
                    return Err(format!("sketch starts at {:?}, source lies in tile {:?}", sk.tile, (here.ix, here.iy)));
                }
                let mut tiles = vec![sk.tile];
                for m in moves {
                    let (x, y) = *tiles.last().expect("nonempty");
                    tiles.push(match m {
                        crate::spacetime::Move::East => (x + 1, y),
                        crate::spacetime::Move::North => (x, y + 1),
                    });
                }
                live.sketch = Some(tiles);
                live.visited.push(sk.tile);
            }
        }
        self.live.insert(id, live);
        Ok(())
    }

    fn movement(&mut self, t: u64, id: u64, v: usize, edge: LogEdge, track: Option<u8>) -> Result<(), String> {
        let n = self.cfg.n();
        let policy = self.policy;
        let p = self.live.get_mut(&id).ok_or(format!("move of unknown or finished packet {id}"))?;
        if p.pos != (STVertex { v, t }) {
            return Err(format!("packet {id} moves from ({v}, {t}) but is at {}", p.pos));
        }
        if v == p.req.dst {
            return Err(format!("packet {id} moves on after reaching its destination"));
        }
        let kind = EdgeKind::from(edge);
        let slot = match policy {
            Policy::Paper => {
                let class = p.class.expect("router packets carry a class");
                let tr = track.ok_or(format!("packet {id} moves without a track"))?;
                if Track::from_index(usize::from(tr)) != Some(class.track()) {
                    return Err(format!("packet {id} of class {} uses track {tr}", class.label()));
                }
                if class == RequestClass::Near && kind == EdgeKind::Store {
                    return Err(format!("near packet {id} is stored"));
                }
                usize::from(tr)
            }
            Policy::Greedy => TRACKS,
        };
        p.pos = match kind {
            EdgeKind::Store => STVertex { v, t: t + 1 },
            EdgeKind::Forward => {
                if v + 1 >= n {
                    return Err(format!("packet {id} forwarded past node {}", n - 1));
                }
                STVertex { v: v + 1, t: t + 1 }
            }
        };
        if let (Some(RequestClass::Far(j)), Some(_)) = (p.class, &p.sketch) {
            let tile = self.tilings.get(j).tile_of(p.pos);
            if p.visited.last() != Some(&(tile.ix, tile.iy)) {
                p.visited.push((tile.ix, tile.iy));
            }
        }
        let counts = self.usage.entry((v, kind)).or_insert([0; TRACKS + 1]);
        if slot < TRACKS {
            counts[slot] += 1;
        }
        counts[TRACKS] += 1;
        Ok(())
    }

    fn deliver(&mut self, t: u64, id: u64, v: usize) -> Result<(), String> {
        let p = self.live.remove(&id).ok_or(format!("delivery of unknown or finished packet {id}"))?;
        if p.pos != (STVertex { v, t: t + 1 }) || v != p.req.dst {
            return Err(format!("packet {id} delivered at node {v} after step {t}, but is at {} with destination {}", p.pos, p.req.dst));
        }
        if self.policy == Policy::Paper {
            let took = t + 1 - p.req.t;
            if took > self.cfg.p_max() {
                return Err(format!("packet {id} took {took} steps, more than p_max = {}", self.cfg.p_max()));
            }
            if let Some(sketch) = &p.sketch {
                if *sketch != p.visited {
                    return Err(format!("packet {id} visited tiles {:?}, sketch path is {:?}", p.visited, sketch));
                }
            }
        }
        self.delivered += 1;
        Ok(())
    }

    fn drop_packet(&mut self, t: u64, id: u64, v: usize) -> Result<(), String> {
        if self.policy == Policy::Paper {
            return Err(format!("accepted packet {id} dropped"));
        }
        let p = self.live.remove(&id).ok_or(format!("drop of unknown or finished packet {id}"))?;
        if p.pos != (STVertex { v, t }) {
            return Err(format!("packet {id} dropped at ({v}, {t}) but is at {}", p.pos));
        }
        if p.req.t == t {
            return Err(format!("packet {id} dropped on arrival but logged as accepted"));
        }
        self.dropped += 1;
        Ok(())
    }
}

/// Checks a complete log. Parse errors, constraint violations and truncated
/// logs are all reported as a [`VerifyError`].
pub fn verify_log(text: &str) -> Result<VerifyReport, VerifyError> {
    let fail = |line: usize, step: Option<u64>, msg: String| VerifyError { line, step, msg };
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.is_empty());
    let (first, header) = lines.next().ok_or_else(|| fail(0, None, "empty log".into()))?;
    let header: LogEvent = serde_json::from_str(header).map_err(|e| fail(first, None, e.to_string()))?;
    let LogEvent::Header { schema, policy, config } = header else {
        return Err(fail(first, None, "log must start with a header".into()));
    };
    if schema != LOG_SCHEMA {
        return Err(fail(first, None, format!("unsupported schema {schema}")));
    }
    let raw = RawConfig::new(config.n, config.buffer, config.link, config.horizon).with_overrides(config.overrides);
    let cfg = validate_config(&raw).map_err(|e| fail(first, None, e.to_string()))?;
    let mut v = Verifier {
        policy,
        tilings: TilingSet::new(&cfg),
        cfg,
        step: 0,
        last_id: None,
        live: BTreeMap::new(),
        usage: HashMap::new(),
        arrivals: 0,
        accepted: 0,
        delivered: 0,
        dropped: 0,
    };
    for (line, text) in lines.by_ref() {
        let ev: LogEvent = serde_json::from_str(text).map_err(|e| fail(line, None, e.to_string()))?;
        let t = match &ev {
            LogEvent::Header { .. } => return Err(fail(line, None, "second header".into())),
            LogEvent::Arrival { t, .. } | LogEvent::Move { t, .. } | LogEvent::Deliver { t, .. } | LogEvent::Drop { t, .. } | LogEvent::End { t, .. } => *t,
        };
        let at = |msg: String| fail(line, Some(t), msg);
        v.advance_to(t).map_err(|(s, m)| fail(line, Some(s), m))?;
        let res = match ev {
            LogEvent::Header { .. } => unreachable!(),
            LogEvent::Arrival { t, id, src, dst, decision, class, sketch } => v.arrival(t, id, src, dst, decision, class.as_deref(), sketch.as_ref()),
            LogEvent::Move { t, id, v: node, edge, track } => v.movement(t, id, node, edge, track),
            LogEvent::Deliver { t, id, v: node } => v.deliver(t, id, node),
            LogEvent::Drop { t, id, v: node } => v.drop_packet(t, id, node),
            LogEvent::End { accepted, delivered, dropped, .. } => {
                if !v.live.is_empty() {
                    let id = v.live.keys().next().expect("nonempty");
                    return Err(at(format!("{} accepted packets never delivered (first: {id})", v.live.len())));
                }
                if (accepted, delivered, dropped) != (v.accepted, v.delivered, v.dropped) {
                    return Err(at(format!(
                        "end totals {accepted}/{delivered}/{dropped} disagree with the log's {}/{}/{}",
                        v.accepted, v.delivered, v.dropped
                    )));
                }
                if let Some((extra, _)) = lines.next() {
                    return Err(fail(extra, None, "events after end".into()));
                }
                return Ok(VerifyReport {
                    policy,
                    steps: t,
                    arrivals: v.arrivals,
                    accepted: v.accepted,
                    delivered: v.delivered,
                    dropped: v.dropped,
                });
            }
        };
        res.map_err(at)?;
    }
    Err(fail(0, None, "log ends without an end event".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> LogEvent {
        LogEvent::Header { schema: 1, policy: Policy::Paper, config: LogConfig { n: 4, buffer: 5, link: 5, horizon: 10, overrides: Overrides::default() } }
    }

    fn arrival(t: u64, id: u64, src: usize, dst: usize) -> LogEvent {
        LogEvent::Arrival { t, id, src, dst, decision: Decision::Accept, class: Some("near".into()), sketch: None }
    }

    fn fwd(t: u64, id: u64, v: usize) -> LogEvent {
        LogEvent::Move { t, id, v, edge: LogEdge::Forward, track: Some(0) }
    }

    fn end(t: u64, acc: u64) -> LogEvent {
        LogEvent::End { t, accepted: acc, delivered: acc, dropped: 0 }
    }

    #[test]
    fn minimal_log_passes() {
        let log = write_log(&[header(), arrival(0, 1, 0, 2), fwd(0, 1, 0), fwd(1, 1, 1), LogEvent::Deliver { t: 1, id: 1, v: 2 }, end(2, 1)]);
        let rep = verify_log(&log).unwrap();
        assert_eq!((rep.accepted, rep.delivered), (1, 1));
    }

    #[test]
    fn round_trip_event_encoding() {
        let e = fwd(3, 9, 1);
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"kind":"move","t":3,"id":9,"v":1,"edge":"F","track":0}"#);
        assert_eq!(serde_json::from_str::<LogEvent>(&s).unwrap(), e);
        assert!(serde_json::from_str::<LogEvent>(r#"{"kind":"move","t":3,"id":9,"v":1,"edge":"F","zzz":0}"#).is_err());
    }

    #[test]
    fn track_overflow_fails_with_step() {
        let log = write_log(&[header(), arrival(0, 1, 0, 1), arrival(0, 2, 0, 1), fwd(0, 1, 0), fwd(0, 2, 0)]);
        let err = verify_log(&(log + &write_log(&[end(1, 2)]))).unwrap_err();
        assert_eq!(err.step, Some(0));
        assert!(err.msg.contains("track 0"), "{err}");
    }

    #[test]
    fn missing_move_fails() {
        let log = write_log(&[header(), arrival(0, 1, 0, 2), fwd(0, 1, 0), end(2, 1)]);
        assert!(verify_log(&log).is_err());
    }

    #[test]
    fn truncated_and_garbage() {
        assert!(verify_log("").is_err());
        assert!(verify_log("{}").is_err());
        assert!(verify_log(&write_log(&[header()])).is_err());
        assert!(verify_log(&write_log(&[header(), LogEvent::Deliver { t: u64::MAX, id: 0, v: 0 }])).is_err());
    }
}
