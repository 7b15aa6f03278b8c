//! Command-line front end.
//!
//! Values resolve as flag > scenario file `[run]` table > built-in default.
//! Exit codes: 0 success, 2 configuration or input error, 3 estimation
//! failures, 4 acceptance gate failed, 1 anything else (e.g. unwritable output).
//!
//! Scenario files are TOML:
//!
//! ```toml
//! [run]                        # every key optional
//! methods = ["GOAL", "OAL", "LASSO"]
//! replications = 200
//! workers = 1
//! out = "goal-out"
//! seed = 2024
//! gamma = 3.0
//! use_schedule = true          # oracle-check: scheduled λ instead of tuning
//!
//! [grid]                       # the diverging-dimension design over n × rho
//! n = [100, 200, 400]
//! rho = [0.0, 0.5]
//! # blocks = { confounder_alpha = 0.6, confounder_beta = 0.6, outcome_beta = 0.6, treatment_alpha = 0.1 }
//!
//! [[scenario]]                 # explicit scenarios, appended after the grid
//! n = 100
//! # ...every Scenario field
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::{fit_method, MethodKind, MethodSpec};
use crate::harness::{nondecreasing_with_slack, oracle_diagnostics, run_replications, HarnessOptions};
use crate::io::load_dataset;
use crate::report::{emit_fit, emit_oracle, emit_results};
use crate::simgen::{blocked_scenario, BlockCoefficients, Scenario};
use crate::weights::lambda_grid;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FAILURES: i32 = 3;
pub const EXIT_GATE: i32 = 4;

pub const DEFAULT_REPLICATIONS: usize = 200;
pub const DEFAULT_WORKERS: usize = 1;
pub const DEFAULT_OUT: &str = "goal-out";
pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_GAMMA: f64 = 3.0;
pub const DEFAULT_METHODS: [MethodKind; 3] = [MethodKind::Goal, MethodKind::Oal, MethodKind::Lasso];

/// Minimum replication count for the oracle diagnostics.
pub const ORACLE_MIN_REPLICATIONS: usize = 50;
/// One-sided slack allowed when checking recovery rates for monotonicity.
pub const MONOTONE_SLACK: f64 = 0.05;
pub const VARIANCE_RATIO_BAND: (f64, f64) = (0.7, 1.3);

#[derive(Debug, Parser)]
#[command(name = "goal", version, about = "GOAL propensity scores, IPTW effects and Monte Carlo experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run Monte Carlo replications over every scenario in a file.
    Simulate(SimulateArgs),
    /// Estimate the treatment effect on one dataset file.
    Fit(FitArgs),
    /// Check selection consistency and limiting variances along n.
    OracleCheck(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides every scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Comma-separated file with header Y,A,X1..Xp.
    #[arg(long)]
    pub data: PathBuf,
    /// Optional TOML file; only its `[run]` table is used.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Comma-separated subset of GOAL,OAL,LASSO.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Adaptive-weight exponent (> 1).
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    run: RunSection,
    grid: Option<GridSection>,
    #[serde(default)]
    scenario: Vec<Scenario>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    methods: Option<Vec<String>>,
    replications: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    gamma: Option<f64>,
    use_schedule: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n: Vec<usize>,
    rho: Vec<f64>,
    blocks: Option<BlocksSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlocksSection {
    confounder_alpha: Option<f64>,
    confounder_beta: Option<f64>,
    outcome_beta: Option<f64>,
    treatment_alpha: Option<f64>,
}

impl BlocksSection {
    fn resolve(&self) -> BlockCoefficients {
        let d = BlockCoefficients::default();
        BlockCoefficients {
            confounder_alpha: self.confounder_alpha.unwrap_or(d.confounder_alpha),
            confounder_beta: self.confounder_beta.unwrap_or(d.confounder_beta),
            outcome_beta: self.outcome_beta.unwrap_or(d.outcome_beta),
            treatment_alpha: self.treatment_alpha.unwrap_or(d.treatment_alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Fit,
    OracleCheck,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub scenario_path: Option<PathBuf>,
    pub methods: Vec<MethodSpec>,
    pub replications: usize,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub gamma: f64,
    pub use_schedule: bool,
    pub scenarios: Vec<Scenario>,
}

fn parse_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse_methods(names: &[String], gamma: f64) -> Result<Vec<MethodSpec>> {
    let mut out: Vec<MethodSpec> = Vec::new();
    for name in names {
        let m = MethodSpec::new(name.parse()?, gamma)?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no methods requested".into()));
    }
    Ok(out)
}

fn resolve(
    command: CommandKind,
    file: ConfigFile,
    scenario_path: Option<PathBuf>,
    common: &CommonArgs,
    replications: Option<usize>,
    workers: Option<usize>,
    seed: Option<u64>,
) -> Result<RunConfig> {
    let run = file.run;
    let gamma = common.gamma.or(run.gamma).unwrap_or(DEFAULT_GAMMA);
    if !(gamma > 1.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let names: Vec<String> = common
        .methods
        .clone()
        .or(run.methods)
        .unwrap_or_else(|| DEFAULT_METHODS.iter().map(|k| k.name().to_string()).collect());
    let methods = parse_methods(&names, gamma)?;
    let replications = replications.or(run.replications).unwrap_or(DEFAULT_REPLICATIONS);
    let workers = workers.or(run.workers).unwrap_or(DEFAULT_WORKERS);
    if workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let out_dir = common.out.clone().or(run.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let mut scenarios = Vec::new();
    if let Some(g) = &file.grid {
        let base_seed = seed.or(run.seed).unwrap_or(DEFAULT_SEED);
        let blocks = g.blocks.as_ref().map(BlocksSection::resolve).unwrap_or_default();
        for &n in &g.n {
            for &rho in &g.rho {
                scenarios.push(blocked_scenario(n, rho, base_seed, blocks)?);
            }
        }
    }
    for s in file.scenario {
        let s = match seed.or(run.seed) {
            Some(v) => s.with_seed(v),
            None => s,
        };
        s.validate()?;
        scenarios.push(s);
    }
    if command != CommandKind::Fit && scenarios.is_empty() {
        return Err(Error::Config("scenario file defines no [grid] and no [[scenario]]".into()));
    }
    Ok(RunConfig {
        command,
        scenario_path,
        methods,
        replications,
        workers,
        out_dir,
        seed_override: seed,
        gamma,
        use_schedule: run.use_schedule.unwrap_or(true),
        scenarios,
    })
}

/// Resolves parsed arguments against the scenario file and defaults.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.command {
        Command::Simulate(a) | Command::OracleCheck(a) => {
            let kind = if matches!(cli.command, Command::Simulate(_)) {
                CommandKind::Simulate
            } else {
                CommandKind::OracleCheck
            };
            let file = parse_config(&a.scenario)?;
            let cfg = resolve(kind, file, Some(a.scenario.clone()), &a.common, a.replications, a.workers, a.seed)?;
            match kind {
                CommandKind::Simulate if cfg.replications < 2 => Err(Error::Config(format!(
                    "simulate needs at least 2 replications, got {}",
                    cfg.replications
                ))),
                CommandKind::OracleCheck if cfg.replications < ORACLE_MIN_REPLICATIONS => Err(Error::Config(format!(
                    "oracle-check needs at least {ORACLE_MIN_REPLICATIONS} replications, got {}",
                    cfg.replications
                ))),
                _ => Ok(cfg),
            }
        }
        Command::Fit(a) => {
            let file = match &a.scenario {
                Some(p) => parse_config(p)?,
                None => ConfigFile::default(),
            };
            resolve(CommandKind::Fit, file, a.scenario.clone(), &a.common, None, None, None)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidData(_)
        | Error::InvalidArgument(_)
        | Error::InvalidGamma(_)
        | Error::InvalidSampleSize(_) => EXIT_CONFIG,
        Error::TooManyFailures { .. }
        | Error::NoConvergedCandidate { .. }
        | Error::NonFiniteObjective { .. }
        | Error::NonFiniteWeight { .. }
        | Error::DegenerateArm(_)
        | Error::DegenerateDesign(_)
        | Error::DimensionMismatch { .. } => EXIT_FAILURES,
        Error::Io { .. } => EXIT_OTHER,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. All output goes through `out` and `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let input_error = |e: Error| match e {
        // unreadable inputs are configuration problems, not output failures
        Error::Io { .. } => EXIT_CONFIG,
        e => exit_code(&e),
    };
    let cfg = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return input_error(e);
        }
    };
    let result = match &cli.command {
        Command::Simulate(_) => cmd_simulate(&cfg, out),
        Command::OracleCheck(_) => cmd_oracle_check(&cfg, out),
        Command::Fit(a) => match load_dataset(&a.data) {
            Ok(d) => cmd_fit(&cfg, &d, &a.data, out),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return input_error(e);
            }
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn harness_options(cfg: &RunConfig) -> HarnessOptions {
    HarnessOptions::with_workers(cfg.workers)
}

fn w(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(line)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::Io {
            path: PathBuf::from("<stdout>"),
            source: e,
        })
}

pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let opts = harness_options(cfg);
    let mut results = Vec::with_capacity(cfg.scenarios.len());
    w(out, format_args!("{:>5} {:>4} {:>5} {:>5} {:<6} {:>9} {:>9} {:>9} {:>6}", "n", "p", "|A|", "rho", "method", "bias", "se", "mse", "failed"))?;
    for s in &cfg.scenarios {
        let r = run_replications(s, &cfg.methods, cfg.replications, &opts)?;
        for m in &r.summaries {
            w(
                out,
                format_args!(
                    "{:>5} {:>4} {:>5} {:>5} {:<6} {:>9.4} {:>9.4} {:>9.4} {:>6}",
                    s.n,
                    s.p,
                    s.active_set().len(),
                    s.rho,
                    m.method.to_string(),
                    m.bias,
                    m.se,
                    m.mse,
                    m.n_failed
                ),
            )?;
        }
        results.push(r);
    }
    let files = emit_results(&results, &cfg.out_dir)?;
    w(out, format_args!("wrote {} files to {}", files.len(), cfg.out_dir.display()))?;
    Ok(EXIT_OK)
}

pub fn cmd_fit(cfg: &RunConfig, d: &crate::model::Dataset, source: &Path, out: &mut dyn Write) -> Result<i32> {
    let grid = lambda_grid(d.n());
    let mut estimates = Vec::with_capacity(cfg.methods.len());
    for m in &cfg.methods {
        let e = fit_method(d, m, &grid)?;
        let sel: Vec<String> = e.selected.iter().map(|j| format!("X{}", j + 1)).collect();
        w(
            out,
            format_args!(
                "{}: ate = {:.6}  lambda1 = {:.4e}  lambda2 = {:.4}  selected ({}) = {}",
                m,
                e.ate,
                e.lambda1,
                e.lambda2,
                sel.len(),
                if sel.is_empty() { "-".to_string() } else { sel.join(",") }
            ),
        )?;
        estimates.push(e);
    }
    let file_name = source.file_name().map_or_else(|| source.display().to_string(), |f| f.to_string_lossy().into_owned());
    let path = emit_fit(&file_name, &estimates, &cfg.out_dir)?;
    w(out, format_args!("wrote {}", path.display()))?;
    Ok(EXIT_OK)
}

/// Gate verdicts of an oracle check over an increasing-`n` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGates {
    /// `None` when fewer than two sample sizes were run.
    pub monotone: Option<bool>,
    pub variance_ratio: Option<bool>,
}

impl OracleGates {
    pub fn passed(&self) -> bool {
        self.monotone.unwrap_or(true) && self.variance_ratio.unwrap_or(true)
    }
}

/// Gates apply only along an `n` grid: zero recovery must be nondecreasing
/// up to [`MONOTONE_SLACK`], and every variance ratio at the largest `n` must
/// lie in [`VARIANCE_RATIO_BAND`].
pub fn oracle_gates(diags: &[crate::harness::OracleDiagnostics]) -> OracleGates {
    if diags.len() < 2 {
        return OracleGates { monotone: None, variance_ratio: None };
    }
    let mut sorted: Vec<_> = diags.iter().collect();
    sorted.sort_by_key(|d| d.n);
    let rates: Vec<f64> = sorted.iter().map(|d| d.zero_recovery_rate).collect();
    let last = sorted[sorted.len() - 1];
    let (lo, hi) = VARIANCE_RATIO_BAND;
    OracleGates {
        monotone: Some(nondecreasing_with_slack(&rates, MONOTONE_SLACK)),
        variance_ratio: Some(
            last.standardized_moments
                .iter()
                .all(|m| (lo..=hi).contains(&m.variance_ratio())),
        ),
    }
}

pub fn cmd_oracle_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let opts = harness_options(cfg);
    let mut diags = Vec::with_capacity(cfg.scenarios.len());
    w(out, format_args!("{:>6} {:>5} {:>12} {:>12} {:>14} {:>14}", "n", "R", "zero_recov", "nonzero_rec", "min_var_ratio", "max_var_ratio"))?;
    for s in &cfg.scenarios {
        let d = oracle_diagnostics(s, cfg.replications, cfg.use_schedule, cfg.gamma, &opts)?;
        let ratios = d.standardized_moments.iter().map(|m| m.variance_ratio());
        let (lo, hi) = ratios.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        w(
            out,
            format_args!(
                "{:>6} {:>5} {:>12.3} {:>12.3} {:>14.3} {:>14.3}",
                d.n, d.replications, d.zero_recovery_rate, d.nonzero_recovery_rate, lo, hi
            ),
        )?;
        diags.push(d);
    }
    let path = emit_oracle(&cfg.scenarios, &diags, &cfg.out_dir)?;
    w(out, format_args!("wrote {}", path.display()))?;
    let gates = oracle_gates(&diags);
    let show = |g: Option<bool>| match g {
        None => "n/a (single n)",
        Some(true) => "pass",
        Some(false) => "FAIL",
    };
    w(out, format_args!("gate zero-recovery monotone: {}", show(gates.monotone)))?;
    w(out, format_args!("gate variance ratio in [0.7, 1.3]: {}", show(gates.variance_ratio)))?;
    Ok(if gates.passed() { EXIT_OK } else { EXIT_GATE })
}
