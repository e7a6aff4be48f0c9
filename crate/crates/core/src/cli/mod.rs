//! Command-line front end: `coherence`, `phase-portrait`, `rate-sweep` and
//! `optimize`, writing CSV (or JSON) plus a JSON metadata sidecar.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical-quality flag,
//! 1 I/O failure.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{ergodic_rate, fit_rate, h_theta, nc_coherence, optimize_theta};
use crate::control::{GreedySearch, Strategy, THETA_STAR};
use crate::engine::{phase_portrait, run_exact_tree, run_monte_carlo, EndRule, Schedule};
use crate::error::{Error, Result};
use crate::rtp::NoiseParams;

pub use config::{Command, Evaluator, ExperimentConfig, FileConfig, GridSpec, StrategyKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_QUALITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "spectator",
    version,
    about = "Spectator-qubit sensing and control experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Controlled coherence curve for one strategy.
    Coherence(Flags),
    /// (α, ζ) portrait of the record tree.
    PhasePortrait(Flags),
    /// Scaled decay rates of Greedy and MOAAAR over a list of K.
    RateSweep(Flags),
    /// Minimize H_Θ and compare it with the ergodic rate in a deep regime.
    Optimize(Flags),
}

#[derive(Debug, Default, Args)]
#[command(allow_negative_numbers = true)]
pub struct Flags {
    /// JSON or TOML config file (`.toml` selects TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub gamma_up: Option<f64>,
    #[arg(long)]
    pub gamma_down: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub big_k: Option<f64>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyKind>,
    /// Angle magnitude Θ for periodic and MOAAAR strategies.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Waiting time for moaaar-general.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Point count over [0, T], or comma-separated times.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_enum)]
    pub evaluator: Option<Evaluator>,
    #[arg(long)]
    pub prune_eps: Option<f64>,
    /// Merge tolerance for equivalent branches; 0 disables merging.
    #[arg(long)]
    pub merge_tol: Option<f64>,
    #[arg(long)]
    pub max_branches: Option<usize>,
    #[arg(long)]
    pub ntraj: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Portrait depth.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Comma-separated ascending K values for rate-sweep.
    #[arg(long)]
    pub k_list: Option<String>,
    /// Fit window `t_min,t_max`.
    #[arg(long)]
    pub fit_window: Option<String>,
    /// Also write the no-control curve to `<out stem>_nc.csv`.
    #[arg(long)]
    pub nc: bool,
    #[arg(long, value_parser = ["truncate", "snap"])]
    pub end_rule: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_list(name: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("--{name} `{s}`: {e}")))
        })
        .collect()
}

impl Flags {
    fn to_file_config(&self) -> Result<FileConfig> {
        let fit_window = match &self.fit_window {
            Some(s) => match parse_list("fit-window", s)?.as_slice() {
                [a, b] => Some((*a, *b)),
                _ => return Err(Error::Config("--fit-window takes two numbers".into())),
            },
            None => None,
        };
        Ok(FileConfig {
            gamma_up: self.gamma_up,
            gamma_down: self.gamma_down,
            kappa: self.kappa,
            big_k: self.big_k,
            strategy: self.strategy,
            theta: self.theta,
            tau: self.tau,
            horizon: self.horizon,
            grid: self.grid.as_deref().map(GridSpec::parse).transpose()?,
            end_rule: self.end_rule.as_deref().map(|s| match s {
                "snap" => EndRule::Snap,
                _ => EndRule::Truncate,
            }),
            evaluator: self.evaluator,
            prune_eps: self.prune_eps,
            merge_tol: self.merge_tol,
            max_branches: self.max_branches,
            ntraj: self.ntraj,
            seed: self.seed,
            workers: self.workers,
            steps: self.steps,
            k_list: self
                .k_list
                .as_deref()
                .map(|s| parse_list("k-list", s))
                .transpose()?,
            fit_window,
            nc: self.nc.then_some(true),
            out: self.out.clone(),
            ..Default::default()
        })
    }

    /// Merge defaults, the config file and the flags, in that order.
    pub fn resolve(&self, command: Command) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        ExperimentConfig::resolve(command, file.overlay(self.to_file_config()?))
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Main output text (CSV or JSON).
    pub body: String,
    /// Quality problems; non-empty means exit code 3.
    pub flags: Vec<String>,
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn nc_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_nc{ext}"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn metadata(cfg: &ExperimentConfig, extra: Value) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "seed": cfg.mc.seed,
        "config": cfg,
        "results": extra,
    })
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Run one command on a resolved configuration, writing any files it names.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let (body, meta, flags) = match cfg.command {
        Command::Coherence => cmd_coherence(cfg)?,
        Command::PhasePortrait => cmd_phase_portrait(cfg)?,
        Command::RateSweep => cmd_rate_sweep(cfg)?,
        Command::Optimize => cmd_optimize(cfg)?,
    };
    if let Some(out) = &cfg.out {
        write_file(out, &body)?;
        let mut meta = meta;
        meta["quality_flags"] = json!(flags);
        write_file(&sidecar_path(out), &to_json(&meta))?;
    }
    Ok(RunOutcome { body, flags })
}

type CmdOutput = (String, Value, Vec<String>);

fn cmd_coherence(cfg: &ExperimentConfig) -> Result<CmdOutput> {
    let schedule = cfg.schedule()?;
    let header = "t,coherence,error_or_bound";
    let mut flags = Vec::new();
    let (body, extra) = match cfg.evaluator {
        Evaluator::Tree => {
            let r = run_exact_tree(&schedule, &cfg.tree, &cfg.grid)?;
            let worst = r.points.iter().map(|p| p.bound).fold(0.0, f64::max);
            if worst > cfg.max_bound {
                flags.push(format!(
                    "truncation bound {worst:e} exceeds {:e}",
                    cfg.max_bound
                ));
            }
            let rows = r
                .points
                .iter()
                .map(|p| vec![fmt_f64(p.t), fmt_f64(p.coherence), fmt_f64(p.bound)]);
            let extra = json!({
                "evaluator": "tree",
                "max_bound": worst,
                "dropped_mass": r.dropped_mass,
                "live_mass": r.live_mass,
                "levels": r.levels,
                "max_live": r.max_live,
                "merged": r.merged,
            });
            (csv(header, rows), extra)
        }
        Evaluator::Mc => {
            let pts = run_monte_carlo(&schedule, &cfg.mc, &cfg.grid)?;
            let rows = pts
                .iter()
                .map(|p| vec![fmt_f64(p.t), fmt_f64(p.coherence), fmt_f64(p.std_error)]);
            let extra = json!({ "evaluator": "mc", "n_traj": cfg.mc.n_traj, "seed": cfg.mc.seed });
            (csv(header, rows), extra)
        }
    };
    if cfg.nc {
        let Some(out) = &cfg.out else {
            return Err(Error::Config(
                "--nc needs --out to name the companion file".into(),
            ));
        };
        let rows = cfg
            .grid
            .iter()
            .map(|&t| {
                Ok(vec![
                    fmt_f64(t),
                    fmt_f64(nc_coherence(t, &cfg.params)?),
                    fmt_f64(0.0),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        let path = nc_path(out);
        write_file(&path, &csv(header, rows))?;
        let meta = metadata(cfg, json!({ "curve": "nocontrol", "exact": true }));
        write_file(&sidecar_path(&path), &to_json(&meta))?;
    }
    Ok((body, metadata(cfg, extra), flags))
}

fn cmd_phase_portrait(cfg: &ExperimentConfig) -> Result<CmdOutput> {
    let r = phase_portrait(&cfg.schedule()?, cfg.steps, &cfg.tree)?;
    let mut flags = Vec::new();
    let dropped = r.dropped_mass.last().copied().unwrap_or(0.0);
    if dropped > cfg.max_bound {
        flags.push(format!(
            "dropped mass {dropped:e} exceeds {:e}",
            cfg.max_bound
        ));
    }
    let rows = r.points.iter().map(|p| {
        vec![
            p.n.to_string(),
            fmt_f64(p.alpha),
            fmt_f64(p.zeta),
            fmt_f64(p.weight),
        ]
    });
    let extra = json!({ "dropped_mass": r.dropped_mass });
    Ok((
        csv("n,alpha,zeta,weight", rows),
        metadata(cfg, extra),
        flags,
    ))
}

/// One row of the rate sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub big_k: f64,
    pub strategy: &'static str,
    pub rate: f64,
    pub scaled_rate: f64,
    pub fit_residual: f64,
    pub bound: f64,
}

/// Fit the decay rate of `strategy` at every `K`.
pub fn rate_sweep(cfg: &ExperimentConfig, strategies: &[Strategy]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &k in &cfg.k_list {
        let params = NoiseParams {
            big_k: k,
            ..cfg.params
        };
        params.validate()?;
        for &strategy in strategies {
            let schedule =
                Schedule::new(cfg.horizon, strategy, params)?.with_end_rule(cfg.end_rule);
            let (series, bound): (Vec<(f64, f64)>, f64) = match cfg.evaluator {
                Evaluator::Tree => {
                    let r = run_exact_tree(&schedule, &cfg.tree, &cfg.grid)?;
                    let b = r.points.iter().map(|p| p.bound).fold(0.0, f64::max);
                    (r.points.iter().map(|p| (p.t, p.coherence)).collect(), b)
                }
                Evaluator::Mc => {
                    let r = run_monte_carlo(&schedule, &cfg.mc, &cfg.grid)?;
                    (r.iter().map(|p| (p.t, p.coherence)).collect(), 0.0)
                }
            };
            let fit = fit_rate(&series, cfg.fit_window, &params)?;
            rows.push(SweepRow {
                big_k: k,
                strategy: strategy.name(),
                rate: fit.rate,
                scaled_rate: fit.scaled_rate,
                fit_residual: fit.relative_residual,
                bound,
            });
        }
    }
    Ok(rows)
}

fn cmd_rate_sweep(cfg: &ExperimentConfig) -> Result<CmdOutput> {
    let theta = match cfg.strategy {
        Strategy::Moaaar { theta } | Strategy::MoaaarGeneral { theta, .. } => theta,
        _ => THETA_STAR,
    };
    let search = match cfg.strategy {
        Strategy::Greedy { search } => search,
        _ => GreedySearch::default(),
    };
    let rows = rate_sweep(
        cfg,
        &[Strategy::Greedy { search }, Strategy::Moaaar { theta }],
    )?;
    let mut flags = Vec::new();
    for r in &rows {
        if r.fit_residual > cfg.max_fit_residual {
            flags.push(format!(
                "K={} {}: relative fit residual {:.3e} exceeds {:.3e}",
                r.big_k, r.strategy, r.fit_residual, cfg.max_fit_residual
            ));
        }
        if r.bound > cfg.max_bound {
            flags.push(format!(
                "K={} {}: truncation bound {:e}",
                r.big_k, r.strategy, r.bound
            ));
        }
    }
    let (theta_star, h_star) = optimize_theta();
    let extra = json!({
        "asymptotes": {
            "theta_star": theta_star,
            "h_star": h_star,
            "h_pi_2": h_theta(std::f64::consts::FRAC_PI_2)?,
        },
        "rows": rows,
    });
    let body = csv(
        "K,strategy,rate,scaled_rate,fit_residual",
        rows.iter().map(|r| {
            vec![
                fmt_f64(r.big_k),
                r.strategy.to_string(),
                fmt_f64(r.rate),
                fmt_f64(r.scaled_rate),
                fmt_f64(r.fit_residual),
            ]
        }),
    );
    Ok((body, metadata(cfg, extra), flags))
}

/// Output of the `optimize` command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub theta_star: f64,
    pub h_star: f64,
    pub curve: Vec<(f64, f64)>,
    pub finite_regime_check: Vec<(f64, f64)>,
}

pub fn optimize_report(cfg: &ExperimentConfig) -> Result<OptimizeReport> {
    let (theta_star, h_star) = optimize_theta();
    let o = &cfg.optimize;
    let deep = NoiseParams {
        kappa: o.kappa,
        big_k: o.big_k,
        ..cfg.params
    };
    deep.validate()?;
    let (lo, hi) = (0.1, std::f64::consts::PI - 0.1);
    let thetas: Vec<f64> = (0..o.points)
        .map(|i| lo + (hi - lo) * i as f64 / (o.points - 1) as f64)
        .collect();
    let curve = thetas
        .iter()
        .map(|&t| Ok((t, h_theta(t)?)))
        .collect::<Result<Vec<_>>>()?;
    let check = thetas
        .iter()
        .map(|&t| Ok((t, ergodic_rate(t, None, &deep)? * deep.rate_scale())))
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimizeReport {
        theta_star,
        h_star,
        curve,
        finite_regime_check: check,
    })
}

fn cmd_optimize(cfg: &ExperimentConfig) -> Result<CmdOutput> {
    let r = optimize_report(cfg)?;
    let body = to_json(&r);
    let extra = json!({ "theta_star": r.theta_star, "h_star": r.h_star });
    Ok((body, metadata(cfg, extra), Vec::new()))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INVALID,
    }
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (command, flags) = match &cli.command {
        Cmd::Coherence(f) => (Command::Coherence, f),
        Cmd::PhasePortrait(f) => (Command::PhasePortrait, f),
        Cmd::RateSweep(f) => (Command::RateSweep, f),
        Cmd::Optimize(f) => (Command::Optimize, f),
    };
    let result = flags.resolve(command).and_then(|cfg| {
        let outcome = execute(&cfg)?;
        if cfg.out.is_none() {
            std::io::stdout()
                .write_all(outcome.body.as_bytes())
                .map_err(Error::from)?;
        }
        Ok(outcome)
    });
    match result {
        Ok(o) if o.flags.is_empty() => EXIT_OK,
        Ok(o) => {
            for f in &o.flags {
                eprintln!("quality: {f}");
            }
            EXIT_QUALITY
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0).parse::<f64>().unwrap(), 1.0);
    }

    #[test]
    fn companion_paths() {
        assert_eq!(
            sidecar_path(Path::new("a/b.csv")),
            PathBuf::from("a/b.csv.json")
        );
        assert_eq!(nc_path(Path::new("a/b.csv")), PathBuf::from("a/b_nc.csv"));
    }
}
