//! Reference greedy policy: at every node, the oldest packets are forwarded
//! first (up to `c`), the next `B` are stored, and the rest are dropped.
//! A packet dropped in its arrival step counts as rejected; a later drop
//! counts as dropped.

use std::collections::BTreeMap;

use crate::execlog::{Decision, LogConfig, LogEvent, Policy, LOG_SCHEMA};
use crate::model::{NetConfig, Request};
use crate::router::{per_step, EngineError, RunOutput, StepReport, Summary};
use crate::spacetime::EdgeKind;

struct Held {
    req: Request,
    v: usize,
}

pub fn run_greedy(cfg: &NetConfig, reqs: &[Request], log: bool) -> Result<RunOutput, EngineError> {
    let mut summary = Summary::new(Policy::Greedy.name(), cfg);
    let mut events = Vec::new();
    if log {
        events.push(LogEvent::Header { schema: LOG_SCHEMA, policy: Policy::Greedy, config: LogConfig::from(&cfg.raw()) });
    }
    let steps = per_step(reqs, cfg.horizon())?;
    let mut held: BTreeMap<u64, Held> = BTreeMap::new();
    let mut reports = Vec::new();
    let mut t = 0u64;
    let mut last_id = None;
    while (t as usize) < steps.len() || !held.is_empty() {
        let arrivals = steps.get(t as usize).copied().unwrap_or(&[]);
        let mut rep = StepReport { t, arrivals: arrivals.len() as u64, ..Default::default() };
        for r in arrivals {
            r.validate(cfg.n()).map_err(|e| EngineError::BadInput(e.to_string()))?;
            if last_id.is_some_and(|l| r.id <= l) {
                return Err(EngineError::BadInput(format!("request id {} is not increasing", r.id)));
            }
            last_id = Some(r.id);
            held.insert(r.id, Held { req: *r, v: r.src });
        }
        let mut at: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for (&id, h) in &held {
            at.entry(h.v).or_default().push(id);
        }
        let mut moves = Vec::new();
        let mut drops = Vec::new();
        let mut delivered = Vec::new();
        let mut rejected = Vec::new();
        for (v, ids) in at {
            let (fwd, rest) = ids.split_at(ids.len().min(cfg.link() as usize));
            let (store, drop) = rest.split_at(rest.len().min(cfg.buffer() as usize));
            rep.max_link = rep.max_link.max(fwd.len() as u32);
            rep.max_buffer = rep.max_buffer.max(store.len() as u32);
            for &id in fwd {
                moves.push((id, v, EdgeKind::Forward));
            }
            for &id in store {
                moves.push((id, v, EdgeKind::Store));
            }
            for &id in drop {
                if held[&id].req.t == t {
                    rejected.push(id);
                } else {
                    drops.push((id, v));
                }
            }
        }
        if log {
            for r in arrivals {
                let decision = if rejected.contains(&r.id) { Decision::Reject } else { Decision::Accept };
                events.push(LogEvent::Arrival { t, id: r.id, src: r.src, dst: r.dst, decision, class: None, sketch: None });
            }
        }
        moves.sort();
        for &(id, v, kind) in &moves {
            if log {
                events.push(LogEvent::Move { t, id, v, edge: kind.into(), track: None });
            }
            let h = held.get_mut(&id).expect("held");
            if kind == EdgeKind::Forward {
                h.v += 1;
                if h.v == h.req.dst {
                    delivered.push(id);
                }
            }
        }
        drops.sort();
        for &(id, v) in &drops {
            held.remove(&id);
            if log {
                events.push(LogEvent::Drop { t, id, v });
            }
        }
        for &id in &rejected {
            held.remove(&id);
        }
        delivered.sort();
        for &id in &delivered {
            let h = held.remove(&id).expect("held");
            if log {
                events.push(LogEvent::Deliver { t, id, v: h.req.dst });
            }
        }
        rep.rejected[0] = rejected.len() as u64;
        rep.accepted[0] = rep.arrivals - rep.rejected[0];
        rep.delivered = delivered.len() as u64;
        summary.arrivals += rep.arrivals;
        summary.accepted_total += rep.accepted[0];
        summary.rejected += rep.rejected[0];
        summary.delivered_total += rep.delivered;
        summary.dropped += drops.len() as u64;
        summary.max_loads.buffer = summary.max_loads.buffer.max(rep.max_buffer);
        summary.max_loads.link = summary.max_loads.link.max(rep.max_link);
        reports.push(rep);
        t += 1;
        summary.steps = t;
    }
    if log {
        events.push(LogEvent::End { t, accepted: summary.accepted_total, delivered: summary.delivered_total, dropped: summary.dropped });
    }
    Ok(RunOutput { summary, reports, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execlog::{verify_log, write_log};
    use crate::model::{validate_config, RawConfig};

    #[test]
    fn overflow_at_one_node() {
        let cfg = validate_config(&RawConfig::new(4, 5, 5, 3)).unwrap();
        let reqs: Vec<Request> = (0..12).map(|id| Request { id, src: 0, dst: 3, t: 0 }).collect();
        let out = run_greedy(&cfg, &reqs, true).unwrap();
        assert_eq!(out.summary.accepted_total, 10);
        assert_eq!(out.summary.rejected, 2);
        assert_eq!(out.summary.delivered_total, 10);
        verify_log(&write_log(&out.events)).unwrap();
    }

    #[test]
    fn newest_packet_loses() {
        let cfg = validate_config(&RawConfig::new(3, 5, 5, 3)).unwrap();
        let mut reqs: Vec<Request> = (0..10).map(|id| Request { id, src: 0, dst: 2, t: 0 }).collect();
        reqs.extend((10..16).map(|id| Request { id, src: 1, dst: 2, t: 1 }));
        let out = run_greedy(&cfg, &reqs, true).unwrap();
        assert_eq!(out.summary.rejected, 1);
        assert_eq!(out.summary.dropped, 0);
        assert_eq!(out.summary.delivered_total, 15);
        verify_log(&write_log(&out.events)).unwrap();
    }
}
