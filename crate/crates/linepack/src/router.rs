//! The online router and its discrete-time engine.
//!
//! Each step filters the arrivals, admits them in id order, replans the tiles
//! touched by new far packets, and then moves every live packet along one
//! edge of its plan. A packet's next edge is fixed once the step that takes
//! it begins; everything after it may still be replanned.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::execlog::{Decision, LogConfig, LogEvent, SketchRecord};
use crate::intratile::{stitch_tile, EntryIn, Goal, InitialIn, QuadrantLedger, Side, StitchError, TileEnd, TileRoute, TileSpec};
use crate::model::{classify, NetConfig, Request, RequestClass, Track, TRACKS};
use crate::pathpack::{Offer, PackError, PackParams, PackState, PathQuery, SketchPath};
use crate::spacetime::{embed, moves_to_string, EdgeKind, Move, STEdge, STVertex};
use crate::tiling::{SketchGraph, TileId, TilingSet};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("step {t}: {}", .violations.join("; "))]
    InvariantViolation { t: u64, violations: Vec<String> },
    #[error("tiling {j}, tile {tile:?}: {source}")]
    FatalInfeasible {
        j: u8,
        tile: (i64, i64),
        #[source]
        source: StitchError,
    },
    #[error("internal invariant: {0}")]
    Internal(String),
    #[error(transparent)]
    Pack(#[from] PackError),
}

/// Keeps, per source vertex, the `B' + c'` arrivals with the shortest spans
/// (ties by id). Both halves come back in id order.
pub fn filter_arrivals(cfg: &NetConfig, arrivals: &[Request]) -> (Vec<Request>, Vec<Request>) {
    let quota = (cfg.buffer_track() + cfg.link_track()) as usize;
    let mut by_src: BTreeMap<(usize, u64), Vec<Request>> = BTreeMap::new();
    for r in arrivals {
        by_src.entry((r.src, r.t)).or_default().push(*r);
    }
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (_, mut group) in by_src {
        group.sort_by_key(|r| (r.span(), r.id));
        let rest = group.split_off(group.len().min(quota));
        kept.extend(group);
        dropped.extend(rest);
    }
    kept.sort_by_key(|r| r.id);
    dropped.sort_by_key(|r| r.id);
    (kept, dropped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FarReject {
    /// No sketch path reaches the destination row within the hop and east bounds.
    NoPath,
    /// The lightest sketch path is too heavy.
    Packing,
    /// Neither straight lane out of the SW quadrant has room.
    Lanes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FarVerdict {
    Accept { path: SketchPath, lane: Move },
    Reject(FarReject),
}

/// Admission state of the four far classes: one path packer per sketch
/// graph and one straight-lane ledger per SW quadrant. Offers are pure, so
/// the state depends only on the sequence of committed requests.
#[derive(Debug, Clone)]
pub struct FarAdmission {
    tilings: TilingSet,
    sketches: [SketchGraph; 4],
    packs: [PackState; 4],
    ledgers: [BTreeMap<(i64, i64), QuadrantLedger>; 4],
    p_max: u64,
    lh: i64,
    lv: i64,
    buffer_track: u32,
    link_track: u32,
}

impl PartialEq for FarAdmission {
    fn eq(&self, other: &Self) -> bool {
        self.packs == other.packs && self.ledgers == other.ledgers
    }
}

impl FarAdmission {
    pub fn new(cfg: &NetConfig) -> Self {
        let tilings = TilingSet::new(cfg);
        let params = PackParams { k: cfg.k(), threshold: cfg.threshold(), max_hops: cfg.hop_bound() };
        FarAdmission {
            sketches: [1, 2, 3, 4].map(|j| SketchGraph::new(*tilings.get(j), cfg.n())),
            tilings,
            packs: std::array::from_fn(|_| PackState::new(params)),
            ledgers: Default::default(),
            p_max: cfg.p_max(),
            lh: i64::from(cfg.lh()),
            lv: i64::from(cfg.lv()),
            buffer_track: cfg.buffer_track(),
            link_track: cfg.link_track(),
        }
    }

    pub fn pack(&self, j: u8) -> &PackState {
        &self.packs[usize::from(j) - 1]
    }

    pub fn ledger(&self, j: u8, tile: (i64, i64)) -> Option<&QuadrantLedger> {
        self.ledgers[usize::from(j) - 1].get(&tile)
    }

    /// Source tile and SW-local `(col, row)` of a far request of tiling `j`.
    fn locate(&self, r: &Request, j: u8) -> Result<((i64, i64), usize, usize), EngineError> {
        let tiling = self.tilings.get(j);
        let p = embed(r.source());
        let tile = tiling.tile_of_point(p);
        let (lx, ly) = tiling.local(p);
        if lx >= self.lh / 2 || ly >= self.lv / 2 {
            return Err(EngineError::Internal(format!("request {} is not in a SW quadrant of tiling {j}", r.id)));
        }
        Ok(((tile.ix, tile.iy), lx as usize, ly as usize))
    }

    /// Most east hops a sketch path may take so that the detailed route
    /// stays within `p_max` steps: every tile column adds at most `lh` stores.
    fn east_cap(&self, r: &Request) -> Option<u32> {
        let slack = self.p_max as i64 + 1 - r.span() as i64;
        u32::try_from(slack.div_euclid(self.lh) - 1).ok()
    }

    pub fn offer(&self, r: &Request, j: u8) -> Result<FarVerdict, EngineError> {
        let (src, lx, ly) = self.locate(r, j)?;
        let Some(max_east) = self.east_cap(r) else {
            return Ok(FarVerdict::Reject(FarReject::NoPath));
        };
        let sketch = &self.sketches[usize::from(j) - 1];
        let is_sink = |s: (i64, i64)| sketch.is_sink(TileId { j, ix: s.0, iy: s.1 }, r.dst);
        let pack = self.pack(j);
        let q = PathQuery { src, is_sink: &is_sink, max_hops: pack.params().max_hops, max_east: Some(max_east) };
        let path = match pack.ipp_offer(sketch, &q) {
            Ok(Offer::Accept { path, .. }) => path,
            Ok(Offer::Reject { .. }) => return Ok(FarVerdict::Reject(FarReject::Packing)),
            Err(PackError::NoPath) => return Ok(FarVerdict::Reject(FarReject::NoPath)),
            Err(e) => return Err(e.into()),
        };
        let lane = match self.ledger(j, src) {
            Some(led) => led.initial_route(lx, ly),
            None => Some(Move::North),
        };
        Ok(match lane {
            Some(lane) => FarVerdict::Accept { path, lane },
            None => FarVerdict::Reject(FarReject::Lanes),
        })
    }

    pub fn commit(&mut self, r: &Request, j: u8, path: SketchPath, lane: Move) -> Result<(), EngineError> {
        let (src, lx, ly) = self.locate(r, j)?;
        let (w, h) = ((self.lh / 2) as usize, (self.lv / 2) as usize);
        let (bt, lt) = (self.buffer_track, self.link_track);
        self.ledgers[usize::from(j) - 1].entry(src).or_insert_with(|| QuadrantLedger::new(w, h, bt, lt)).reserve(lx, ly, lane);
        self.packs[usize::from(j) - 1].ipp_commit(r.id, path)?;
        Ok(())
    }

    /// Offer, and commit on acceptance.
    pub fn admit(&mut self, r: &Request, j: u8) -> Result<FarVerdict, EngineError> {
        let verdict = self.offer(r, j)?;
        if let FarVerdict::Accept { path, lane } = &verdict {
            self.commit(r, j, path.clone(), *lane)?;
        }
        Ok(verdict)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StepReport {
    pub t: u64,
    pub arrivals: u64,
    pub filtered: u64,
    /// Indexed by track: near, then far classes 1..4.
    pub accepted: [u64; TRACKS],
    pub rejected: [u64; TRACKS],
    pub delivered: u64,
    pub max_buffer: u32,
    pub max_link: u32,
    pub track_max_store: [u32; TRACKS],
    pub track_max_forward: [u32; TRACKS],
    pub violations: Vec<String>,
}

impl StepReport {
    pub fn accepted_total(&self) -> u64 {
        self.accepted.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub accepted: u64,
    pub rejected: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MaxLoads {
    pub buffer: u32,
    pub link: u32,
    pub track_store: [u32; TRACKS],
    pub track_forward: [u32; TRACKS],
    /// Largest sketch-edge load per tiling.
    pub sketch: [u32; 4],
}

/// End-of-run totals, the JSON summary written by `linepack run`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub policy: String,
    pub config: LogConfig,
    pub steps: u64,
    pub arrivals: u64,
    pub filtered: u64,
    pub accepted_total: u64,
    pub rejected: u64,
    pub delivered_total: u64,
    pub dropped: u64,
    pub no_path: u64,
    pub per_class: BTreeMap<String, ClassCounts>,
    pub max_loads: MaxLoads,
    pub violations: Vec<String>,
}

impl Summary {
    pub fn new(policy: &str, cfg: &NetConfig) -> Self {
        Summary {
            schema: 1,
            policy: policy.to_string(),
            config: LogConfig::from(&cfg.raw()),
            steps: 0,
            arrivals: 0,
            filtered: 0,
            accepted_total: 0,
            rejected: 0,
            delivered_total: 0,
            dropped: 0,
            no_path: 0,
            per_class: BTreeMap::new(),
            max_loads: MaxLoads::default(),
            violations: Vec::new(),
        }
    }
}

#[derive(Debug, Default)]
struct TileState {
    initials: BTreeMap<u64, InitialIn>,
    entries: BTreeMap<u64, EntryIn>,
    routes: BTreeMap<u64, TileRoute>,
}

#[derive(Debug)]
struct FarPlan {
    j: u8,
    lane: Move,
    lane_len: usize,
    tiles: Vec<(i64, i64)>,
    moves: Vec<Move>,
    /// Moves inside each tile after the SW lane, filled in by replanning.
    segments: Vec<Option<Vec<Move>>>,
}

#[derive(Debug)]
struct Packet {
    req: Request,
    class: RequestClass,
    plan: Vec<Move>,
    progress: usize,
    pos: STVertex,
    far: Option<FarPlan>,
}

/// Online router state. Feed it one step of arrivals at a time.
#[derive(Debug)]
pub struct Engine {
    cfg: NetConfig,
    tilings: TilingSet,
    t: u64,
    last_id: Option<u64>,
    far: FarAdmission,
    /// Near-track reservations on forward edges, keyed by `(t, v)`.
    near: BTreeMap<(u64, usize), u32>,
    tiles: [BTreeMap<(i64, i64), TileState>; 4],
    packets: BTreeMap<u64, Packet>,
    summary: Summary,
    events: Option<Vec<LogEvent>>,
}

impl Engine {
    pub fn new(cfg: &NetConfig) -> Self {
        Engine {
            cfg: cfg.clone(),
            tilings: TilingSet::new(cfg),
            t: 0,
            last_id: None,
            far: FarAdmission::new(cfg),
            near: BTreeMap::new(),
            tiles: Default::default(),
            packets: BTreeMap::new(),
            summary: Summary::new("paper", cfg),
            events: None,
        }
    }

    /// Records execution-log events (without header) for [`Engine::take_events`].
    pub fn with_log(mut self) -> Self {
        self.events = Some(Vec::new());
        self
    }

    pub fn take_events(&mut self) -> Vec<LogEvent> {
        self.events.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn in_flight(&self) -> usize {
        self.packets.len()
    }

    pub fn far_admission(&self) -> &FarAdmission {
        &self.far
    }

    pub fn summary(&self) -> &Summary {
        &self.summary
    }

    fn log(&mut self, e: LogEvent) {
        if let Some(ev) = self.events.as_mut() {
            ev.push(e);
        }
    }

    /// Accept iff the near track of the forward edge out of the source has
    /// room, then reserve the whole straight path. The later edges have room
    /// too: every packet reserved on them so far started no higher on the
    /// same diagonal, so it also holds the first edge.
    fn route_near(&mut self, r: &Request) -> bool {
        let cap = self.cfg.link_track();
        if self.near.get(&(r.t, r.src)).copied().unwrap_or(0) >= cap {
            return false;
        }
        for i in 0..r.span() {
            let u = self.near.entry((r.t + i as u64, r.src + i)).or_insert(0);
            debug_assert!(*u < cap);
            *u += 1;
        }
        true
    }

    fn spec(&self) -> TileSpec {
        TileSpec { lh: self.cfg.lh() as usize, lv: self.cfg.lv() as usize, h_cap: self.cfg.buffer_track(), v_cap: self.cfg.link_track() }
    }

    /// Goal of a far packet inside the `i`-th tile of its sketch path.
    fn goal(&self, plan: &FarPlan, i: usize, dst: usize) -> Goal {
        if i + 1 == plan.tiles.len() {
            let (ix, iy) = plan.tiles[i];
            let origin = self.tilings.get(plan.j).origin(ix, iy);
            Goal::Absorb((dst as i64 - origin.y) as usize)
        } else {
            Goal::Exit(plan.moves[i])
        }
    }

    /// Restitches dirty tiles of tiling `j` in column-major order, pushing
    /// changed exits into the next tile. Returns the packets whose routes changed.
    fn replan(&mut self, j: u8, mut work: BTreeSet<(i64, i64)>) -> Result<BTreeSet<u64>, EngineError> {
        let spec = self.spec();
        let ji = usize::from(j) - 1;
        let mut affected = BTreeSet::new();
        while let Some(tc) = work.pop_first() {
            let st = self.tiles[ji].entry(tc).or_default();
            let initials: Vec<InitialIn> = st.initials.values().copied().collect();
            let entries: Vec<EntryIn> = st.entries.values().copied().collect();
            let routes = stitch_tile(spec, &initials, &entries).map_err(|source| EngineError::FatalInfeasible { j, tile: tc, source })?;
            let changed: Vec<(u64, TileRoute)> =
                routes.iter().filter(|(id, r)| st.routes.get(id) != Some(r)).map(|(&id, r)| (id, r.clone())).collect();
            st.routes = routes;
            for (id, route) in changed {
                affected.insert(id);
                let p = self.packets.get(&id).ok_or_else(|| EngineError::Internal(format!("route of finished packet {id} changed")))?;
                let plan = p.far.as_ref().expect("tile members are far packets");
                let i = plan.tiles.iter().position(|&x| x == tc).expect("tile on the sketch path");
                if let TileEnd::Exit { dir, pos } = route.end {
                    if plan.moves.get(i) != Some(&dir) {
                        return Err(EngineError::Internal(format!("packet {id} leaves tile {tc:?} {dir:?}, off its sketch path")));
                    }
                    let goal = self.goal(plan, i + 1, p.req.dst);
                    let side = if dir == Move::East { Side::West } else { Side::South };
                    let next = plan.tiles[i + 1];
                    let e = EntryIn { id, side, pos, goal };
                    if self.tiles[ji].entry(next).or_default().entries.insert(id, e) != Some(e) {
                        work.insert(next);
                    }
                } else if i + 1 != plan.tiles.len() {
                    return Err(EngineError::Internal(format!("packet {id} absorbed before its last tile")));
                }
                let p = self.packets.get_mut(&id).expect("checked above");
                p.far.as_mut().expect("far").segments[i] = Some(route.moves);
            }
        }
        Ok(affected)
    }

    /// Rebuilds the plan of a far packet from its lane and tile segments.
    fn rebuild(&mut self, id: u64) -> Result<(), EngineError> {
        let p = self.packets.get_mut(&id).expect("live packet");
        let far = p.far.as_ref().expect("far packet");
        let mut plan = vec![far.lane; far.lane_len];
        for (i, seg) in far.segments.iter().enumerate() {
            let seg = seg.as_ref().ok_or_else(|| EngineError::Internal(format!("packet {id} has no route in tile {:?}", far.tiles[i])))?;
            plan.extend_from_slice(seg);
        }
        let norths = plan.iter().filter(|&&m| m == Move::North).count();
        if norths != p.req.span() {
            return Err(EngineError::Internal(format!("plan of packet {id} climbs {norths} nodes, span is {}", p.req.span())));
        }
        let locked = (p.progress + 1).min(p.plan.len());
        if p.plan[..locked] != plan[..locked.min(plan.len())] {
            return Err(EngineError::Internal(format!("replanning changed committed moves of packet {id}")));
        }
        p.plan = plan;
        Ok(())
    }

    fn retire(&mut self, t: u64) {
        self.near = self.near.split_off(&(t, 0));
        for (ji, tiles) in self.tiles.iter_mut().enumerate() {
            let tiling = self.tilings.get(ji as u8 + 1);
            tiles.retain(|&(ix, iy), _| tiling.time_span(ix, iy).1 >= t as i64);
        }
    }

    /// Runs one step with the arrivals of step `self.time()`.
    pub fn step(&mut self, arrivals: &[Request]) -> Result<StepReport, EngineError> {
        let t = self.t;
        for r in arrivals {
            if r.t != t {
                return Err(EngineError::BadInput(format!("request {} arrives at {} during step {t}", r.id, r.t)));
            }
            r.validate(self.cfg.n()).map_err(|e| EngineError::BadInput(e.to_string()))?;
            if self.last_id.is_some_and(|l| r.id <= l) {
                return Err(EngineError::BadInput(format!("request id {} is not increasing", r.id)));
            }
            self.last_id = Some(r.id);
        }
        self.retire(t);
        let mut rep = StepReport { t, arrivals: arrivals.len() as u64, ..Default::default() };
        let (kept, filtered) = filter_arrivals(&self.cfg, arrivals);
        rep.filtered = filtered.len() as u64;
        let mut decisions: BTreeMap<u64, LogEvent> = BTreeMap::new();
        for r in &filtered {
            decisions.insert(r.id, LogEvent::Arrival { t, id: r.id, src: r.src, dst: r.dst, decision: Decision::Filter, class: None, sketch: None });
        }

        let mut dirty: [BTreeSet<(i64, i64)>; 4] = Default::default();
        for r in &kept {
            let class = classify(&self.cfg, &self.tilings, r);
            let mut sketch = None;
            let accepted = match class {
                RequestClass::Near => {
                    let ok = self.route_near(r);
                    if ok {
                        let plan = vec![Move::North; r.span()];
                        self.packets.insert(r.id, Packet { req: *r, class, plan, progress: 0, pos: r.source(), far: None });
                    }
                    ok
                }
                RequestClass::Far(j) => match self.far.admit(r, j)? {
                    FarVerdict::Accept { path, lane } => {
                        sketch = Some(SketchRecord { tile: path.src, moves: moves_to_string(&path.moves) });
                        self.add_far(r, j, &path, lane)?;
                        dirty[usize::from(j) - 1].insert(path.src);
                        true
                    }
                    FarVerdict::Reject(why) => {
                        if why == FarReject::NoPath {
                            self.summary.no_path += 1;
                        }
                        false
                    }
                },
            };
            let c = self.summary.per_class.entry(class.label().to_string()).or_default();
            let tr = class.track().index();
            if accepted {
                rep.accepted[tr] += 1;
                c.accepted += 1;
            } else {
                rep.rejected[tr] += 1;
                c.rejected += 1;
            }
            let decision = if accepted { Decision::Accept } else { Decision::Reject };
            decisions.insert(r.id, LogEvent::Arrival { t, id: r.id, src: r.src, dst: r.dst, decision, class: Some(class.label().into()), sketch });
        }
        for ev in decisions.into_values() {
            self.log(ev);
        }

        let mut affected = BTreeSet::new();
        for (ji, work) in dirty.into_iter().enumerate() {
            if !work.is_empty() {
                affected.extend(self.replan(ji as u8 + 1, work)?);
            }
        }
        for id in affected {
            self.rebuild(id)?;
        }

        self.advance(&mut rep)?;
        self.summary.steps = t + 1;
        self.summary.arrivals += rep.arrivals;
        self.summary.filtered += rep.filtered;
        self.summary.accepted_total += rep.accepted_total();
        self.summary.rejected += rep.rejected.iter().sum::<u64>();
        self.summary.delivered_total += rep.delivered;
        let ml = &mut self.summary.max_loads;
        ml.buffer = ml.buffer.max(rep.max_buffer);
        ml.link = ml.link.max(rep.max_link);
        for i in 0..TRACKS {
            ml.track_store[i] = ml.track_store[i].max(rep.track_max_store[i]);
            ml.track_forward[i] = ml.track_forward[i].max(rep.track_max_forward[i]);
        }
        for j in 1..=4u8 {
            ml.sketch[usize::from(j) - 1] = self.far.pack(j).max_load();
        }
        self.t += 1;
        if !rep.violations.is_empty() {
            self.summary.violations.extend(rep.violations.iter().map(|v| format!("step {t}: {v}")));
            return Err(EngineError::InvariantViolation { t, violations: rep.violations.clone() });
        }
        Ok(rep)
    }

    fn add_far(&mut self, r: &Request, j: u8, path: &SketchPath, lane: Move) -> Result<(), EngineError> {
        let tiling = self.tilings.get(j);
        let (lx, ly) = tiling.local(embed(r.source()));
        let (hx, hy) = (tiling.lh() / 2, tiling.lv() / 2);
        let (lane_len, pos) = match lane {
            Move::North => ((hy - ly) as usize, lx as usize),
            Move::East => ((hx - lx) as usize, ly as usize),
        };
        let tiles = path.tiles();
        let plan = FarPlan { j, lane, lane_len, segments: vec![None; tiles.len()], tiles, moves: path.moves.clone() };
        let goal = self.goal(&plan, 0, r.dst);
        let st = self.tiles[usize::from(j) - 1].entry(path.src).or_default();
        st.initials.insert(r.id, InitialIn { id: r.id, lane, pos, goal });
        self.packets.insert(r.id, Packet { req: *r, class: RequestClass::Far(j), plan: Vec::new(), progress: 0, pos: r.source(), far: Some(plan) });
        Ok(())
    }

    /// Moves every live packet one edge and checks all capacities.
    fn advance(&mut self, rep: &mut StepReport) -> Result<(), EngineError> {
        let t = self.t;
        let n = self.cfg.n();
        let mut usage: BTreeMap<(usize, EdgeKind), [u32; TRACKS + 1]> = BTreeMap::new();
        let mut done = Vec::new();
        let mut moves = Vec::new();
        for (&id, p) in self.packets.iter_mut() {
            let m = *p.plan.get(p.progress).ok_or_else(|| EngineError::Internal(format!("packet {id} ran out of plan at {}", p.pos)))?;
            let edge = STEdge { tail: p.pos, kind: m.kind() };
            if edge.kind == EdgeKind::Forward && p.pos.v + 1 >= n {
                rep.violations.push(format!("packet {id} forwarded past node {}", n - 1));
                continue;
            }
            let counts = usage.entry((p.pos.v, edge.kind)).or_insert([0; TRACKS + 1]);
            counts[p.class.track().index()] += 1;
            counts[TRACKS] += 1;
            moves.push(LogEvent::Move { t, id, v: p.pos.v, edge: edge.kind.into(), track: Some(p.class.track().index() as u8) });
            p.pos = edge.head();
            p.progress += 1;
            if p.pos.v == p.req.dst {
                if p.progress != p.plan.len() {
                    return Err(EngineError::Internal(format!("packet {id} reached its destination mid-plan")));
                }
                let took = t + 1 - p.req.t;
                if took > self.cfg.p_max() {
                    rep.violations.push(format!("packet {id} delivered after {took} steps, p_max is {}", self.cfg.p_max()));
                }
                done.push(id);
            }
        }
        for ((v, kind), counts) in &usage {
            let (cap, tcap) = (self.cfg.edge_capacity(*kind), self.cfg.track_capacity(*kind));
            let (max_all, max_tr) = match kind {
                EdgeKind::Store => (&mut rep.max_buffer, &mut rep.track_max_store),
                EdgeKind::Forward => (&mut rep.max_link, &mut rep.track_max_forward),
            };
            *max_all = (*max_all).max(counts[TRACKS]);
            if counts[TRACKS] > cap {
                rep.violations.push(format!("{kind:?} edge at node {v} carries {} > {cap}", counts[TRACKS]));
            }
            for tr in 0..TRACKS {
                max_tr[tr] = max_tr[tr].max(counts[tr]);
                if counts[tr] > tcap {
                    let track = Track::from_index(tr).expect("index in range");
                    rep.violations.push(format!("{track:?} track of {kind:?} edge at node {v} carries {} > {tcap}", counts[tr]));
                }
            }
        }
        for ev in moves {
            self.log(ev);
        }
        for id in done {
            let p = self.packets.remove(&id).expect("listed above");
            rep.delivered += 1;
            self.summary.per_class.entry(p.class.label().to_string()).or_default().delivered += 1;
            self.log(LogEvent::Deliver { t, id, v: p.req.dst });
        }
        Ok(())
    }

    /// Steps without arrivals until no packet is in flight.
    pub fn drain(&mut self) -> Result<Vec<StepReport>, EngineError> {
        let mut out = Vec::new();
        let limit = self.t + self.cfg.p_max() + 1;
        while !self.packets.is_empty() {
            if self.t > limit {
                return Err(EngineError::Internal("packets still in flight p_max steps after the last arrival".into()));
            }
            out.push(self.step(&[])?);
        }
        Ok(out)
    }

    pub fn end_event(&self) -> LogEvent {
        LogEvent::End { t: self.t, accepted: self.summary.accepted_total, delivered: self.summary.delivered_total, dropped: 0 }
    }
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Summary,
    pub reports: Vec<StepReport>,
    /// Full execution log including header and end, if requested.
    pub events: Vec<LogEvent>,
}

/// Splits a sorted trace into per-step slices for steps `0..horizon`.
/// Arrivals at or after the horizon are an input error.
pub fn per_step(reqs: &[Request], horizon: u64) -> Result<Vec<&[Request]>, EngineError> {
    let mut out = Vec::with_capacity(horizon as usize);
    let mut i = 0;
    for t in 0..horizon {
        let start = i;
        while i < reqs.len() && reqs[i].t == t {
            i += 1;
        }
        out.push(&reqs[start..i]);
    }
    if let Some(r) = reqs.get(i) {
        return Err(EngineError::BadInput(format!("request {} at step {} is out of order or beyond the horizon {horizon}", r.id, r.t)));
    }
    Ok(out)
}

/// Runs the router over a whole trace and drains it.
pub fn run_paper(cfg: &NetConfig, reqs: &[Request], log: bool) -> Result<RunOutput, EngineError> {
    let mut eng = Engine::new(cfg);
    if log {
        eng = eng.with_log();
    }
    let mut reports = Vec::new();
    for arrivals in per_step(reqs, cfg.horizon())? {
        reports.push(eng.step(arrivals)?);
    }
    reports.extend(eng.drain()?);
    let mut events = Vec::new();
    if log {
        events.push(LogEvent::Header { schema: crate::execlog::LOG_SCHEMA, policy: crate::execlog::Policy::Paper, config: LogConfig::from(&cfg.raw()) });
        events.extend(eng.take_events());
        events.push(eng.end_event());
    }
    Ok(RunOutput { summary: eng.summary().clone(), reports, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_config, Overrides, RawConfig};

    fn cfg(n: u64) -> NetConfig {
        validate_config(&RawConfig::new(n, 5, 5, 50)).unwrap()
    }

    fn small_tiles(n: u64) -> NetConfig {
        validate_config(&RawConfig::new(n, 5, 5, 60).with_overrides(Overrides { k: Some(2), lh: Some(12), lv: Some(12) })).unwrap()
    }

    fn req(id: u64, src: usize, dst: usize, t: u64) -> Request {
        Request { id, src, dst, t }
    }

    #[test]
    fn filter_keeps_shortest() {
        let c = cfg(32);
        let arr: Vec<Request> = (1..=10).map(|d| req(d as u64, 0, d, 0)).collect();
        let (kept, dropped) = filter_arrivals(&c, &arr);
        assert_eq!(kept.iter().map(|r| r.span()).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(dropped.len(), 8);
        let tie = [req(5, 0, 3, 0), req(2, 0, 3, 0), req(9, 0, 3, 0)];
        let (kept, _) = filter_arrivals(&c, &tie);
        assert_eq!(kept.iter().map(|r| r.id).collect::<Vec<_>>(), vec![2, 5]);
    }

    #[test]
    fn empty_step() {
        let mut e = Engine::new(&cfg(8));
        let rep = e.step(&[]).unwrap();
        assert_eq!(rep, StepReport { t: 0, ..Default::default() });
    }

    #[test]
    fn near_unit_span_delivered_next_step() {
        let mut e = Engine::new(&cfg(8));
        let rep = e.step(&[req(0, 3, 4, 0)]).unwrap();
        assert_eq!(rep.accepted[0], 1);
        assert_eq!(rep.delivered, 1);
        assert_eq!(e.in_flight(), 0);
    }

    #[test]
    fn near_second_request_rejected() {
        let mut e = Engine::new(&cfg(8));
        let rep = e.step(&[req(0, 0, 3, 0), req(1, 0, 2, 0)]).unwrap();
        assert_eq!((rep.accepted[0], rep.rejected[0]), (1, 1));
        // The accepted one is the lower id even though the other is shorter.
        assert!(e.packets.contains_key(&0));
    }

    #[test]
    fn bad_input() {
        let mut e = Engine::new(&cfg(8));
        assert!(matches!(e.step(&[req(0, 3, 2, 0)]), Err(EngineError::BadInput(_))));
        let mut e = Engine::new(&cfg(8));
        assert!(matches!(e.step(&[req(0, 1, 2, 1)]), Err(EngineError::BadInput(_))));
    }

    #[test]
    fn single_far_packet() {
        let c = small_tiles(40);
        let out = run_paper(&c, &[req(0, 0, 30, 0)], true).unwrap();
        assert_eq!(out.summary.accepted_total, 1);
        assert_eq!(out.summary.delivered_total, 1);
        assert_eq!(out.summary.per_class["far1"].delivered, 1);
        crate::execlog::verify_log(&crate::execlog::write_log(&out.events)).unwrap();
    }

    #[test]
    fn far_admission_is_pure_on_reject() {
        let c = small_tiles(40);
        let mut fa = FarAdmission::new(&c);
        let r = req(0, 0, 30, 0);
        let mut accepted = 0;
        for id in 0..20 {
            let r = Request { id, ..r };
            let before = fa.clone();
            match fa.admit(&r, 1).unwrap() {
                FarVerdict::Accept { .. } => accepted += 1,
                FarVerdict::Reject(_) => assert!(fa == before),
            }
        }
        // One vertex has one north and one east lane per unit track.
        assert_eq!(accepted, 2);
    }
}
