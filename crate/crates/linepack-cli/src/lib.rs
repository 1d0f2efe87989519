//! The `linepack` command line: generate traces, simulate the router or the
//! greedy baseline, compare against the fractional optimum, verify
//! execution logs and calibrate the bundled suite.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 internal invariant violation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use linepack::config::parse_config;
use linepack::execlog::{verify_log, write_log};
use linepack::greedy::run_greedy;
use linepack::model::Overrides;
use linepack::router::{run_paper, RunOutput};
use linepack::trace::{parse_trace, validate_trace, write_trace};
use linepack::workload::TraceSpec;
use linepack::{validate_config, NetConfig, RawConfig, Request};
use serde::Serialize;

mod compare;
mod error;
pub mod suite;

pub use compare::{compare, CompareReport};
pub use error::CliError;
use suite::{Baseline, Suite};

#[derive(Debug, Parser)]
#[command(name = "linepack", version, about = "Online packet routing on a line network with bounded buffers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated trace as JSON Lines.
    Gen(GenArgs),
    /// Simulate a policy on a trace.
    Run(RunArgs),
    /// Run a policy and the offline optima on a trace and report the ratio.
    Compare(CompareArgs),
    /// Re-check an execution log written by `run --log`.
    Verify(VerifyArgs),
    /// Compare the router on every calibrated suite entry and write a baseline.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    #[default]
    Paper,
    Greedy,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Paper => "paper",
            PolicyKind::Greedy => "greedy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Uniform,
    Burst,
    GreedyKiller,
    Crossing,
    NearFlood,
}

/// Network parameters. Flags override the config file; `B` and `c` default
/// to 5 and the horizon to one past the last arrival.
#[derive(Debug, Clone, Default, Args)]
pub struct NetArgs {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Buffer size per node.
    #[arg(long = "B", value_name = "B")]
    pub buffer: Option<u64>,
    /// Link capacity per step.
    #[arg(long = "c", value_name = "C")]
    pub link: Option<u64>,
    /// Arrival window; the run continues until the network is empty.
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub override_k: Option<u32>,
    #[arg(long)]
    pub override_lh: Option<u32>,
    #[arg(long)]
    pub override_lv: Option<u32>,
}

impl NetArgs {
    pub fn resolve(&self, reqs: &[Request]) -> Result<NetConfig, CliError> {
        let file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
            None => RawConfig::default(),
        };
        let flags = RawConfig {
            n: self.n,
            buffer: self.buffer,
            link: self.link,
            horizon: self.horizon,
            seed: self.seed,
            overrides: Overrides { k: self.override_k, lh: self.override_lh, lv: self.override_lv },
        };
        let mut raw = file.merged_with(&flags);
        raw.buffer = raw.buffer.or(Some(5));
        raw.link = raw.link.or(Some(5));
        raw.horizon = raw.horizon.or_else(|| Some(reqs.last().map_or(1, |r| r.t + 1)));
        validate_config(&raw).map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub horizon: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mean arrivals per step (uniform).
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    /// Requests per episode (burst).
    #[arg(long, default_value_t = 10)]
    pub burst: usize,
    /// Mean long requests per step (crossing).
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    /// Requests per step (near-flood).
    #[arg(long, default_value_t = 8)]
    pub per_step: usize,
    /// Largest span (near-flood).
    #[arg(long, default_value_t = 4)]
    pub max_span: usize,
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

impl GenArgs {
    pub fn spec(&self) -> Result<TraceSpec, CliError> {
        if self.n < 2 {
            return Err(CliError::Usage(format!("--n must be at least 2, got {}", self.n)));
        }
        for (name, x) in [("--rate", self.rate), ("--density", self.density)] {
            if !(0.0..=1e6).contains(&x) {
                return Err(CliError::Usage(format!("{name} must be in [0, 1e6], got {x}")));
            }
        }
        if self.max_span == 0 {
            return Err(CliError::Usage("--max-span must be at least 1".into()));
        }
        let (n, horizon, seed) = (self.n, self.horizon, self.seed);
        Ok(match self.kind {
            GenKind::Uniform => TraceSpec::Uniform { n, horizon, rate: self.rate, seed },
            GenKind::Burst => TraceSpec::Burst { n, horizon, burst: self.burst, seed },
            GenKind::GreedyKiller => TraceSpec::GreedyKiller { n, horizon, seed },
            GenKind::Crossing => TraceSpec::Crossing { n, horizon, density: self.density, seed },
            GenKind::NearFlood => TraceSpec::NearFlood { n, horizon, per_step: self.per_step, max_span: self.max_span, seed },
        })
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub policy: PolicyKind,
    /// Summary JSON; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-step CSV: t, arrivals, accepted, delivered, max_buffer, max_link.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Execution log as JSON Lines, for `verify`.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub policy: PolicyKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub log: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Suite manifest; the bundled suite if absent.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_policy(cfg: &NetConfig, reqs: &[Request], policy: PolicyKind, log: bool) -> Result<RunOutput, CliError> {
    Ok(match policy {
        PolicyKind::Paper => run_paper(cfg, reqs, log)?,
        PolicyKind::Greedy => run_greedy(cfg, reqs, log)?,
    })
}

pub fn read_trace(path: &Path) -> Result<Vec<Request>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trace(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CsvRow {
    t: u64,
    arrivals: u64,
    accepted: u64,
    delivered: u64,
    max_buffer: u32,
    max_link: u32,
}

fn write_csv(path: &Path, out: &RunOutput) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    for r in &out.reports {
        let row = CsvRow {
            t: r.t,
            arrivals: r.arrivals,
            accepted: r.accepted_total(),
            delivered: r.delivered,
            max_buffer: r.max_buffer,
            max_link: r.max_link,
        };
        w.serialize(row).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn load_run(net: &NetArgs, trace: &Path) -> Result<(NetConfig, Vec<Request>), CliError> {
    let reqs = read_trace(trace)?;
    let cfg = net.resolve(&reqs)?;
    validate_trace(&reqs, cfg.n()).map_err(|e| CliError::Usage(format!("{}: {e}", trace.display())))?;
    Ok((cfg, reqs))
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen(a) => {
            let reqs = a.spec()?.generate();
            emit(a.out.as_deref(), &write_trace(&reqs))
        }
        Command::Run(a) => {
            let (cfg, reqs) = load_run(&a.net, &a.trace)?;
            let out = run_policy(&cfg, &reqs, a.policy, a.log.is_some())?;
            emit(a.out.as_deref(), &json(&out.summary))?;
            if let Some(p) = &a.csv {
                write_csv(p, &out)?;
            }
            if let Some(p) = &a.log {
                std::fs::write(p, write_log(&out.events)).map_err(|e| CliError::io(p, e))?;
            }
            if !out.summary.violations.is_empty() {
                return Err(CliError::Internal(out.summary.violations.join("; ")));
            }
            Ok(())
        }
        Command::Compare(a) => {
            let (cfg, reqs) = load_run(&a.net, &a.trace)?;
            let report = compare(&cfg, &reqs, a.policy)?;
            emit(a.out.as_deref(), &json(&report))
        }
        Command::Verify(a) => {
            let text = std::fs::read_to_string(&a.log).map_err(|e| CliError::io(&a.log, e))?;
            let report = verify_log(&text).map_err(|e| CliError::Verify(e.to_string()))?;
            emit(None, &json(&report))
        }
        Command::Calibrate(a) => {
            let suite = match &a.manifest {
                Some(p) => Suite::load(p)?,
                None => Suite::bundled(),
            };
            let mut reports = Vec::new();
            for e in suite.calibrated() {
                let report = compare(&e.config()?, &e.requests(), PolicyKind::Paper)?;
                log::info!("{}: ratio {:?}", e.name, report.ratio);
                reports.push((e.name.clone(), report));
            }
            emit(a.out.as_deref(), &json(&Baseline::from_reports(PolicyKind::Paper.name(), &reports)?))
        }
    }
}

/// Entry point of the binary; logging is configured by `LINEPACK_LOG`.
pub fn main_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env = env_logger::Env::new().filter_or("LINEPACK_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("linepack: {e}");
            e.exit_code()
        }
    }
}
