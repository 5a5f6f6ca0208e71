//! Command-line front end.
//!
//! The parsed command line is itself the run configuration: it serialises to
//! JSON (`<out>.config.json`, or a `# config:` line on stderr), and
//! `operc replay <file>` runs a saved configuration again.
//!
//! Exit codes: 0 success, 1 usage, 2 runtime failure, 3 failed audit.

mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    estimate_wn, find_pc, mc_crossing_with, survival_curve, width_curve, Kind, McOptions,
    PcOptions, WidthOptions, WnOptions, WnParams, Z95,
};
use crate::experiments::{
    box_crossing_audit, sample_conditioned_cluster, theorem1_run, theorem2_run, AuditReport,
    Condition, ExperimentOptions, Status, WnTable,
};
use crate::oracle::{self_check, strip_pc_extrapolated};
use crate::randfield::Mode;

pub use output::{write_table, Format};

/// Environment variable holding the default master seed.
pub const SEED_ENV: &str = "OPERC_SEED";

#[derive(Debug, Clone, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "operc", version, about = "Oriented percolation on the rotated square lattice")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Monte Carlo H or V crossing probability of [0,m]x[0,n].
    Crossing(CrossingArgs),
    /// Survival probabilities P(0 -> row n).
    Survival(CurveArgs),
    /// Conditional mean of the right-most point given survival.
    Width(WidthArgs),
    /// Empirical width scale.
    Wn(WnArgs),
    /// Critical-point brackets from finite-size criteria.
    FindPc(FindPcArgs),
    /// Hard- and easy-direction crossings at the width scale.
    AuditBox(AuditBoxArgs),
    /// Survival decay exponent.
    Theorem1(Theorem1Args),
    /// Width growth exponent and width ratios.
    Theorem2(Theorem2Args),
    /// Rejection-sample and export one conditioned cluster.
    Cluster(ClusterArgs),
    /// Exact fixture suite: sweep and transfer matrix against enumeration, FKG, square-root trick.
    OracleCheck,
    /// Run a saved configuration.
    Replay {
        /// A `.config.json` written by an earlier run.
        config: PathBuf,
    },
}

fn parse_p(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("p must lie in [0, 1], got {p}"))
    }
}

fn parse_alpha(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 0.75 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("alpha must lie in (0.75, 1), got {a}"))
    }
}

fn parse_open_unit(s: &str) -> std::result::Result<f64, String> {
    let a: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("value must lie in (0, 1), got {a}"))
    }
}

fn parse_kind(s: &str) -> std::result::Result<Kind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A strictly ascending, comma-separated list of heights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NList(pub Vec<i64>);

impl std::ops::Deref for NList {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

fn parse_n_list(s: &str) -> std::result::Result<NList, String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.iter().any(|&n| n < 0) {
        return Err("heights must be non-negative".into());
    }
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err("list must be strictly ascending".into());
    }
    Ok(NList(v))
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CrossingArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: Kind,
    #[arg(long)]
    pub m: i64,
    #[arg(long)]
    pub n: i64,
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    #[arg(long = "N", default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, value_parser = parse_mode, default_value = "fast")]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CurveArgs {
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    #[arg(long = "n-list", value_parser = parse_n_list)]
    pub n_list: NList,
    #[arg(long = "N", default_value_t = 100_000)]
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WidthArgs {
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Half-line replicas per row (default: N).
    #[arg(long)]
    pub halfline_replicas: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WnShape {
    #[arg(long, value_parser = parse_alpha, default_value_t = 0.8)]
    pub alpha: f64,
    #[arg(long, value_parser = parse_open_unit, default_value_t = 0.25)]
    pub eps: f64,
    /// Replicas per width probe.
    #[arg(long, default_value_t = 2000)]
    pub wn_trials: u64,
    /// Per-probe sample cap of the doubling escalation.
    #[arg(long, default_value_t = 1 << 22)]
    pub wn_max_samples: u64,
}

impl WnShape {
    fn params(&self) -> Result<WnParams> {
        WnParams::new(self.alpha, self.eps)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct WnArgs {
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    #[arg(long = "n-list", value_parser = parse_n_list)]
    pub n_list: NList,
    #[command(flatten)]
    pub shape: WnShape,
    #[arg(long, value_parser = parse_mode, default_value = "fast")]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FindPcArgs {
    #[arg(long = "n-list", value_parser = parse_n_list, default_value = "64,128,256,512")]
    pub n_list: NList,
    #[arg(long = "N", default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.02)]
    pub eta: f64,
    #[arg(long, value_parser = parse_mode, default_value = "coupled")]
    pub mode: Mode,
    #[command(flatten)]
    pub shape: WnShape,
    /// Fixed box width instead of the width scale.
    #[arg(long)]
    pub m: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PcMode {
    /// Midpoint of the last finite-size bracket.
    FindPc,
    /// Extrapolated strip transfer-matrix estimate.
    Strip,
}

/// How the audited `p` is chosen.
#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PSelect {
    /// Force this p instead of estimating p_c.
    #[arg(long, value_parser = parse_p)]
    pub p: Option<f64>,
    #[arg(long, value_enum, default_value_t = PcMode::FindPc)]
    pub pc_mode: PcMode,
    #[arg(long = "pc-n-list", value_parser = parse_n_list, default_value = "64,128,256,512")]
    pub pc_n_list: NList,
    #[arg(long = "pc-N", default_value_t = 10_000)]
    pub pc_trials: u64,
    #[arg(long, default_value_t = 0.02)]
    pub eta: f64,
    /// First half-width of the strip extrapolation.
    #[arg(long, default_value_t = 4)]
    pub strip_w: i64,
}

impl PSelect {
    fn resolve(&self, seed: u64, shape: &WnShape) -> Result<(f64, String)> {
        if let Some(p) = self.p {
            return Ok((p, "forced".into()));
        }
        match self.pc_mode {
            PcMode::FindPc => {
                let opts = PcOptions {
                    params: shape.params()?,
                    wn_trials: shape.wn_trials,
                    wn_max_samples: shape.wn_max_samples,
                    ..PcOptions::default()
                };
                let r = find_pc(&self.pc_n_list, self.pc_trials, self.eta, seed, &opts)?;
                Ok((r.p_hat, format!("find-pc midpoint, scales {:?}, N={}", self.pc_n_list.0, self.pc_trials)))
            }
            PcMode::Strip => {
                let e = strip_pc_extrapolated(self.strip_w)?;
                Ok((e.p_inf, format!("strip transfer matrix, half-widths {:?}", e.widths)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AuditBoxArgs {
    #[command(flatten)]
    pub pselect: PSelect,
    #[arg(long = "n-list", value_parser = parse_n_list, default_value = "64,128,256,512,1024,2048")]
    pub n_list: NList,
    #[arg(long = "N", default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, value_parser = parse_open_unit, default_value_t = 0.02)]
    pub c_min: f64,
    #[command(flatten)]
    pub shape: WnShape,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Theorem1Args {
    #[command(flatten)]
    pub pselect: PSelect,
    #[arg(long = "n-list", value_parser = parse_n_list, default_value = "128,256,512,1024,2048,4096,8192")]
    pub n_list: NList,
    #[arg(long = "N", default_value_t = 100_000)]
    pub trials: u64,
    /// Scales at which to estimate the width for the P sqrt(w) constant.
    #[arg(long = "wn-n-list", value_parser = parse_n_list)]
    pub wn_n_list: Option<NList>,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[command(flatten)]
    pub shape: WnShape,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Theorem2Args {
    #[command(flatten)]
    pub pselect: PSelect,
    #[arg(long = "n-list", value_parser = parse_n_list, default_value = "128,256,512,1024,2048,4096,8192")]
    pub n_list: NList,
    #[arg(long = "N", default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long)]
    pub halfline_replicas: Option<u64>,
    #[arg(long = "wn-n-list", value_parser = parse_n_list)]
    pub wn_n_list: Option<NList>,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.05)]
    pub ratio_lo: f64,
    #[arg(long, default_value_t = 20.0)]
    pub ratio_hi: f64,
    #[arg(long, default_value_t = 0.01)]
    pub var_floor: f64,
    #[command(flatten)]
    pub shape: WnShape,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClusterArgs {
    #[arg(long, value_parser = parse_p)]
    pub p: f64,
    /// Condition on reaching row n.
    #[arg(long, conflicts_with_all = ["a", "b"], required_unless_present = "a")]
    pub n: Option<i64>,
    /// Condition on reaching row a but not row b.
    #[arg(long, requires = "b")]
    pub a: Option<i64>,
    #[arg(long, requires = "a")]
    pub b: Option<i64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_attempts: u64,
}

enum Outcome {
    Ok,
    AuditFailed,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::CoupledModeRequired | Error::TooFewRows { .. } => 1,
        _ => 2,
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    run_config(cfg, stdout, stderr)
}

/// Run an already parsed configuration.
pub fn run_config(cfg: RunConfig, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32 {
    let cfg = match cfg.command {
        Command::Replay { ref config } => match load_config(config) {
            Ok(mut c) => {
                // The replayed run writes where the replay command says, if anywhere.
                if cfg.out.is_some() {
                    c.out = cfg.out.clone();
                }
                c
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return exit_code(&e);
            }
        },
        _ => cfg,
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: thread pool: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cfg, stdout, stderr)) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::AuditFailed) => 3,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

/// Path of the configuration echo written next to `out`.
pub fn config_path(out: &Path) -> PathBuf {
    sidecar(out, "config.json")
}

fn sidecar(out: &Path, ext: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| Error::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

fn emit(cfg: &RunConfig, bytes: &[u8], stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<()> {
    let echo = serde_json::to_string(cfg).expect("config serialises");
    match &cfg.out {
        Some(path) => {
            write_file(path, bytes)?;
            write_file(&config_path(path), format!("{echo}\n").as_bytes())?;
        }
        None => {
            let io = |source| Error::Io {
                context: "writing stdout".into(),
                source,
            };
            stdout.write_all(bytes).map_err(io)?;
            let _ = writeln!(stderr, "# config: {echo}");
        }
    }
    Ok(())
}

fn audit_outcome(reports: &[&AuditReport]) -> Outcome {
    if reports.iter().any(|r| r.status == Status::Fail) {
        Outcome::AuditFailed
    } else {
        Outcome::Ok
    }
}

fn experiment_options(shape: &WnShape, p_source: String) -> ExperimentOptions {
    ExperimentOptions {
        wn_trials: shape.wn_trials,
        wn_max_samples: shape.wn_max_samples,
        p_source,
        ..ExperimentOptions::default()
    }
}

fn dispatch(cfg: &RunConfig, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> Result<Outcome> {
    let seed = cfg.seed;
    match &cfg.command {
        Command::Crossing(a) => {
            let opts = McOptions {
                mode: a.mode,
                z: Z95,
                stream: 0,
            };
            let e = mc_crossing_with(a.kind, a.m, a.n, a.p, a.trials, seed, &opts)?;
            let table = output::crossing_table(a.n, &e, seed);
            emit(cfg, &write_table(&table, cfg.format), stdout, stderr)?;
        }
        Command::Survival(a) => {
            let t = survival_curve(a.p, &a.n_list, a.trials, seed)?;
            emit(cfg, &write_table(&t, cfg.format), stdout, stderr)?;
        }
        Command::Width(a) => {
            let opts = WidthOptions {
                halfline_replicas: a.halfline_replicas,
                ..WidthOptions::default()
            };
            let c = width_curve(a.curve.p, &a.curve.n_list, a.curve.trials, seed, &opts)?;
            emit(cfg, &write_table(&c.mean_table(), cfg.format), stdout, stderr)?;
            if let Some(out) = &cfg.out {
                write_file(&sidecar(out, "rows.jsonl"), &output::jsonl(&c.rows))?;
            }
        }
        Command::Wn(a) => {
            let opts = WnOptions {
                mode: a.mode,
                z: Z95,
                max_samples: a.shape.wn_max_samples,
            };
            let params = a.shape.params()?;
            let ws = a
                .n_list
                .iter()
                .map(|&n| estimate_wn(a.p, n, params, a.shape.wn_trials, seed, &opts))
                .collect::<Result<Vec<_>>>()?;
            emit(cfg, &output::wn_bytes(&ws, cfg.format), stdout, stderr)?;
        }
        Command::FindPc(a) => {
            let opts = PcOptions {
                mode: a.mode,
                params: a.shape.params()?,
                wn_trials: a.shape.wn_trials,
                wn_max_samples: a.shape.wn_max_samples,
                m_override: a.m,
                ..PcOptions::default()
            };
            let r = find_pc(&a.n_list, a.trials, a.eta, seed, &opts)?;
            emit(cfg, &output::pc_bytes(&r, cfg.format), stdout, stderr)?;
        }
        Command::AuditBox(a) => {
            let (p, src) = a.pselect.resolve(seed, &a.shape)?;
            let opts = experiment_options(&a.shape, src);
            let rep = box_crossing_audit(p, &a.n_list, a.shape.params()?, a.trials, a.c_min, seed, &opts, None)?;
            emit(cfg, rep.to_jsonl().as_bytes(), stdout, stderr)?;
            return Ok(audit_outcome(&[&rep]));
        }
        Command::Theorem1(a) => {
            let (p, src) = a.pselect.resolve(seed, &a.shape)?;
            let mut opts = experiment_options(&a.shape, src);
            opts.tol = a.tol;
            let wn_ns = a.wn_n_list.clone().unwrap_or(NList(Vec::new()));
            let table = WnTable::compute(p, &wn_ns, a.shape.params()?, seed, &opts)?;
            let rep = theorem1_run(p, &a.n_list, a.trials, seed, &opts, Some(&table))?;
            emit(cfg, rep.to_jsonl().as_bytes(), stdout, stderr)?;
            return Ok(audit_outcome(&[&rep]));
        }
        Command::Theorem2(a) => {
            let (p, src) = a.pselect.resolve(seed, &a.shape)?;
            let mut opts = experiment_options(&a.shape, src);
            opts.tol = a.tol;
            opts.ratio_band = (a.ratio_lo, a.ratio_hi);
            opts.var_floor = a.var_floor;
            opts.halfline_replicas = a.halfline_replicas;
            let wn_ns = a.wn_n_list.clone().unwrap_or_else(|| a.n_list.clone());
            let table = WnTable::compute(p, &wn_ns, a.shape.params()?, seed, &opts)?;
            let rep = theorem2_run(p, &a.n_list, a.trials, seed, &opts, Some(&table))?;
            emit(cfg, rep.to_jsonl().as_bytes(), stdout, stderr)?;
            return Ok(audit_outcome(&[&rep]));
        }
        Command::Cluster(a) => {
            let cond = match (a.n, a.a, a.b) {
                (Some(n), _, _) => Condition::Hit { n },
                (None, Some(lo), Some(hi)) => Condition::Window { a: lo, b: hi },
                _ => return Err(Error::invalid("give --n, or --a and --b")),
            };
            let out = cfg
                .out
                .as_ref()
                .ok_or_else(|| Error::invalid("cluster export needs --out"))?;
            let s = sample_conditioned_cluster(a.p, cond, seed, a.max_attempts)?;
            let (sites, renewals, rn) = output::cluster_files(&s);
            emit(cfg, &sites, stdout, stderr)?;
            write_file(&sidecar(out, "renewals"), &renewals)?;
            write_file(&sidecar(out, "rn_sequence.csv"), &rn)?;
            let _ = writeln!(
                stderr,
                "accepted replica {} after {} attempts ({} sites)",
                s.replica,
                s.attempts,
                s.sites.len()
            );
        }
        Command::OracleCheck => {
            let checks = self_check()?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            emit(cfg, &output::jsonl(&checks), stdout, stderr)?;
            let _ = writeln!(stderr, "{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return Ok(Outcome::AuditFailed);
            }
        }
        Command::Replay { .. } => unreachable!("resolved before dispatch"),
    }
    Ok(Outcome::Ok)
}
