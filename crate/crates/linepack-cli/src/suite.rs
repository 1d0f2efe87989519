//! Bundled workload suite and the recorded calibration baseline.

use std::path::Path;

use linepack::model::Overrides;
use linepack::workload::TraceSpec;
use linepack::{validate_config, NetConfig, RawConfig, Request};
use serde::{Deserialize, Serialize};

use crate::compare::CompareReport;
use crate::CliError;

const BUNDLED_SUITE: &str = include_str!("../suite/suite.json");
const BUNDLED_BASELINE: &str = include_str!("../suite/baseline.json");

fn five() -> u64 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub name: String,
    pub trace: TraceSpec,
    #[serde(rename = "B", default = "five")]
    pub buffer: u64,
    #[serde(rename = "c", default = "five")]
    pub link: u64,
    #[serde(default, skip_serializing_if = "Overrides::is_empty")]
    pub overrides: Overrides,
    /// Part of the calibrated ratio regression.
    #[serde(default)]
    pub calibrate: bool,
}

impl SuiteEntry {
    /// The run configuration: the arrival window is the trace horizon.
    pub fn config(&self) -> Result<NetConfig, CliError> {
        let raw = RawConfig::new(self.trace.n() as u64, self.buffer, self.link, self.trace.horizon()).with_overrides(self.overrides);
        validate_config(&raw).map_err(|e| CliError::Usage(format!("suite entry {}: {e}", self.name)))
    }

    pub fn requests(&self) -> Vec<Request> {
        self.trace.generate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub entries: Vec<SuiteEntry>,
}

impl Suite {
    pub fn bundled() -> Suite {
        serde_json::from_str(BUNDLED_SUITE).expect("bundled suite parses")
    }

    pub fn load(path: &Path) -> Result<Suite, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn calibrated(&self) -> impl Iterator<Item = &SuiteEntry> {
        self.entries.iter().filter(|e| e.calibrate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineEntry {
    pub name: String,
    pub n: usize,
    pub alg: u64,
    pub frac_opt: f64,
    pub ratio: f64,
    pub ratio_per_logn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    pub schema: u32,
    pub policy: String,
    pub max_ratio_per_logn: f64,
    pub entries: Vec<BaselineEntry>,
}

impl Baseline {
    pub fn bundled() -> Baseline {
        serde_json::from_str(BUNDLED_BASELINE).expect("bundled baseline parses")
    }

    pub fn get(&self, name: &str) -> Option<&BaselineEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Builds a baseline from compare reports. Every ratio must be finite.
    pub fn from_reports(policy: &str, reports: &[(String, CompareReport)]) -> Result<Baseline, CliError> {
        let mut entries = Vec::with_capacity(reports.len());
        for (name, r) in reports {
            let (Some(ratio), Some(per)) = (r.ratio, r.ratio_per_logn) else {
                return Err(CliError::Internal(format!("{name}: nothing delivered although the optimum is {}", r.frac_opt)));
            };
            entries.push(BaselineEntry { name: name.clone(), n: r.n, alg: r.alg, frac_opt: r.frac_opt, ratio, ratio_per_logn: per });
        }
        let max_ratio_per_logn = entries.iter().map(|e| e.ratio_per_logn).fold(0.0, f64::max);
        Ok(Baseline { schema: 1, policy: policy.to_string(), max_ratio_per_logn, entries })
    }
}
