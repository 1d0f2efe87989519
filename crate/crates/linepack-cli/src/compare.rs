use linepack::{NetConfig, Request};
use linepack_oracle::{fractional_opt, integral_opt, window_requests, Limits, Network};
use serde::{Deserialize, Serialize};

use crate::{run_policy, CliError, PolicyKind};

/// Output of `linepack compare`. `ratio` is `frac_opt / alg`, absent when
/// the policy delivered nothing but the optimum is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareReport {
    pub schema: u32,
    pub policy: String,
    pub n: usize,
    pub requests: u64,
    pub alg: u64,
    pub frac_opt: f64,
    pub int_opt: Option<usize>,
    pub ratio: Option<f64>,
    pub ratio_per_logn: Option<f64>,
    pub oracle_horizon: u64,
    /// Requests left out of the oracle instance by the window rule.
    pub excluded: u64,
}

/// Runs `policy`, then the oracles over a window long enough for every
/// packet the policy could still deliver.
pub fn compare(cfg: &NetConfig, reqs: &[Request], policy: PolicyKind) -> Result<CompareReport, CliError> {
    let out = run_policy(cfg, reqs, policy, false)?;
    let alg = out.summary.delivered_total;
    let horizon = (cfg.horizon() + cfg.p_max()).max(out.summary.steps);
    let (kept, excluded) = window_requests(cfg, reqs, horizon);
    let net = Network::from(cfg);
    let frac = fractional_opt(&net, &kept, horizon, None)?.objective;
    let limits = Limits::default();
    let int_opt = if kept.len() <= limits.max_requests && cfg.n() <= limits.max_n && horizon <= limits.max_horizon {
        Some(integral_opt(&net, &kept, horizon, limits)?.count)
    } else {
        None
    };
    let ratio = match alg {
        0 if frac <= linepack_oracle::flow::OBJ_TOL => Some(1.0),
        0 => None,
        a => Some(frac / a as f64),
    };
    let log_n = (cfg.n() as f64).log2();
    log::info!("compare {}: alg {alg}, fractional optimum {frac:.6}", policy.name());
    Ok(CompareReport {
        schema: 1,
        policy: policy.name().to_string(),
        n: cfg.n(),
        requests: reqs.len() as u64,
        alg,
        frac_opt: frac,
        int_opt,
        ratio,
        ratio_per_logn: ratio.map(|r| r / log_n),
        oracle_horizon: horizon,
        excluded: excluded.len() as u64,
    })
}
