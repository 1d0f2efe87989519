//! Offline optima for line-network routing instances: the maximum
//! fractional routing, the exact integral optimum of tiny instances, cut
//! upper bounds, exhaustive crossbar feasibility and sketch-graph packing LPs.

use linepack::{EdgeKind, NetConfig};
use serde::Serialize;
use thiserror::Error;

pub mod crossbar;
pub mod cut;
pub mod flow;
pub mod integral;
mod arcs;
mod lp;
pub mod sketch;

pub use crossbar::exhaustive_feasible;
pub use cut::cut_upper_bound;
pub use flow::{arc_lp_opt, fractional_opt, fractional_opt_with, verify_flow, window_requests, FlowSolution, LpMethod, PathFlow, RequestFlow};
pub use integral::{integral_opt, IntegralSolution, Limits};
pub use sketch::sketch_fractional_opt;

/// The capacities an offline optimum depends on. Unlike [`NetConfig`] this
/// accepts any positive buffer and link size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Network {
    pub n: usize,
    pub buffer: u32,
    pub link: u32,
}

impl Network {
    pub fn new(n: usize, buffer: u32, link: u32) -> Self {
        Network { n, buffer, link }
    }

    pub fn capacity(&self, kind: EdgeKind) -> u32 {
        match kind {
            EdgeKind::Store => self.buffer,
            EdgeKind::Forward => self.link,
        }
    }
}

impl From<&NetConfig> for Network {
    fn from(cfg: &NetConfig) -> Self {
        Network { n: cfg.n(), buffer: cfg.buffer(), link: cfg.link() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("instance too large: {size} exceeds cap {cap}")]
    TooLarge { size: u64, cap: u64 },
    #[error("invalid instance: {0}")]
    BadInput(String),
    #[error("LP solver failed: {0}")]
    Solver(String),
    #[error("column generation did not converge in {0} rounds")]
    NoConvergence(usize),
}
