//! Cheap upper bounds on the number of servable requests.

use std::collections::BTreeMap;

use linepack::Request;

use crate::Network;

/// Minimum of: the reachable requests; the out-capacity `B + c` of every
/// source vertex; and, for every link and arrival step `s`, the requests
/// that avoid the link or arrive before `s`, plus what the link can carry
/// during the steps usable by the rest.
pub fn cut_upper_bound(net: &Network, reqs: &[Request], horizon: u64) -> u64 {
    let live: Vec<&Request> = reqs.iter().filter(|r| r.t + r.span() as u64 <= horizon).collect();
    let mut best = live.len() as u64;

    let mut at: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    for r in &live {
        *at.entry((r.src, r.t)).or_insert(0) += 1;
    }
    let out_cap = u64::from(net.buffer) + u64::from(net.link);
    best = best.min(at.values().map(|&k| k.min(out_cap)).sum());

    let link = u64::from(net.link);
    for v in 0..net.n.saturating_sub(1) {
        // (arrival, first and last step at which the link is usable)
        let mut crossing: Vec<(u64, u64, u64)> = live
            .iter()
            .filter(|r| r.src <= v && v < r.dst)
            .map(|r| (r.t, r.t + (v - r.src) as u64, horizon - (r.dst - v) as u64))
            .collect();
        if crossing.is_empty() {
            continue;
        }
        crossing.sort_unstable();
        let others = (live.len() - crossing.len()) as u64;
        let (mut first, mut last) = (u64::MAX, 0);
        for i in (0..crossing.len()).rev() {
            first = first.min(crossing[i].1);
            last = last.max(crossing[i].2);
            if i > 0 && crossing[i - 1].0 == crossing[i].0 {
                continue;
            }
            let late = (crossing.len() - i) as u64;
            let slots = (last + 1).saturating_sub(first);
            best = best.min(others + i as u64 + late.min(link * slots));
        }
    }
    best
}
