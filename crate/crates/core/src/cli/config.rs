//! Experiment configuration: file schema, flag overrides and resolution.
//!
//! Precedence is flags, then config-file keys, then the built-in defaults
//! (κ = 0.2, γ↑ = γ↓ = 1, K = 20).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::{GreedySearch, Strategy, THETA_STAR};
use crate::engine::{uniform_grid, EndRule, McOptions, Schedule, TreeOptions};
use crate::error::{Error, Result};
use crate::rtp::NoiseParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Evaluator {
    #[default]
    Tree,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum StrategyKind {
    #[serde(rename = "nocontrol")]
    #[value(name = "nocontrol")]
    NoControl,
    #[serde(rename = "periodic")]
    #[value(name = "periodic")]
    Periodic,
    #[serde(rename = "greedy")]
    #[value(name = "greedy")]
    Greedy,
    #[serde(rename = "moaaar")]
    #[value(name = "moaaar")]
    Moaaar,
    #[serde(rename = "moaaar-general")]
    #[value(name = "moaaar-general")]
    MoaaarGeneral,
}

/// Time grid: a point count spread evenly over `[0, T]`, or explicit times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Count(usize),
    Times(Vec<f64>),
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |e: String| Error::Config(format!("grid `{s}`: {e}"));
        if s.contains(',') || s.contains('.') || s.contains('e') {
            let times = s
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| bad(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            Ok(GridSpec::Times(times))
        } else {
            s.trim()
                .parse::<usize>()
                .map(GridSpec::Count)
                .map_err(|e| bad(e.to_string()))
        }
    }

    pub fn times(&self, horizon: f64) -> Vec<f64> {
        match self {
            GridSpec::Count(n) => uniform_grid(horizon, *n),
            GridSpec::Times(t) => t.clone(),
        }
    }
}

/// Deep-regime point and grid for the `optimize` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub kappa: f64,
    pub big_k: f64,
    pub points: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            kappa: 1e-3,
            big_k: 1e3,
            points: 50,
        }
    }
}

/// Contents of a config file. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub gamma_up: Option<f64>,
    pub gamma_down: Option<f64>,
    pub kappa: Option<f64>,
    pub big_k: Option<f64>,
    pub strategy: Option<StrategyKind>,
    pub theta: Option<f64>,
    pub tau: Option<f64>,
    pub greedy_search: Option<GreedySearch>,
    pub horizon: Option<f64>,
    pub grid: Option<GridSpec>,
    pub end_rule: Option<EndRule>,
    pub evaluator: Option<Evaluator>,
    pub prune_eps: Option<f64>,
    pub merge_tol: Option<f64>,
    pub max_branches: Option<usize>,
    pub ntraj: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub steps: Option<usize>,
    pub k_list: Option<Vec<f64>>,
    pub fit_window: Option<(f64, f64)>,
    pub nc: Option<bool>,
    pub max_bound: Option<f64>,
    pub max_fit_residual: Option<f64>,
    pub optimize: Option<OptimizeConfig>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    /// Parse a config file; `.toml` files are TOML, everything else JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let is_toml = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        if is_toml {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }

    /// Fill every field set in `over`, keeping ours elsewhere.
    pub fn overlay(self, over: FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => { FileConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            command,
            gamma_up,
            gamma_down,
            kappa,
            big_k,
            strategy,
            theta,
            tau,
            greedy_search,
            horizon,
            grid,
            end_rule,
            evaluator,
            prune_eps,
            merge_tol,
            max_branches,
            ntraj,
            seed,
            workers,
            steps,
            k_list,
            fit_window,
            nc,
            max_bound,
            max_fit_residual,
            optimize,
            out
        )
    }
}

/// The four experiment commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Coherence,
    PhasePortrait,
    RateSweep,
    Optimize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Coherence => "coherence",
            Command::PhasePortrait => "phase-portrait",
            Command::RateSweep => "rate-sweep",
            Command::Optimize => "optimize",
        }
    }

    fn default_horizon(self) -> f64 {
        match self {
            Command::RateSweep => 4.0,
            _ => 3.0,
        }
    }
}

/// Fully resolved, validated experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub params: NoiseParams,
    pub strategy: Strategy,
    pub horizon: f64,
    pub grid: Vec<f64>,
    pub end_rule: EndRule,
    pub evaluator: Evaluator,
    pub tree: TreeOptions,
    pub mc: McOptions,
    pub steps: usize,
    pub k_list: Vec<f64>,
    pub fit_window: (f64, f64),
    pub nc: bool,
    /// Truncation bound above which results are flagged.
    pub max_bound: f64,
    /// Relative fit residual above which rates are flagged.
    pub max_fit_residual: f64,
    pub optimize: OptimizeConfig,
    pub out: Option<PathBuf>,
}

fn build_strategy(c: &FileConfig, big_k: f64) -> Result<Strategy> {
    let theta = c.theta.unwrap_or(THETA_STAR);
    let s = match c.strategy.unwrap_or(StrategyKind::Moaaar) {
        StrategyKind::NoControl => Strategy::NoControl,
        StrategyKind::Periodic => Strategy::NonAdaptivePeriodic { theta },
        StrategyKind::Greedy => Strategy::Greedy {
            search: c.greedy_search.unwrap_or_default(),
        },
        StrategyKind::Moaaar => Strategy::Moaaar { theta },
        StrategyKind::MoaaarGeneral => Strategy::MoaaarGeneral {
            theta,
            tau: c.tau.unwrap_or(theta / big_k),
        },
    };
    s.validate()?;
    Ok(s)
}

impl ExperimentConfig {
    /// Resolve a merged file/flag configuration for `command`.
    pub fn resolve(command: Command, c: FileConfig) -> Result<Self> {
        if let Some(name) = &c.command {
            if name != command.name() {
                return Err(Error::Config(format!(
                    "config is for `{name}` but `{}` was requested",
                    command.name()
                )));
            }
        }
        let d = NoiseParams::default();
        let params = NoiseParams::new(
            c.gamma_up.unwrap_or(d.gamma_up),
            c.gamma_down.unwrap_or(d.gamma_down),
            c.kappa.unwrap_or(d.kappa),
            c.big_k.unwrap_or(d.big_k),
        )?;
        let strategy = build_strategy(&c, params.big_k)?;
        let horizon = c.horizon.unwrap_or(command.default_horizon());
        let fit_window = c
            .fit_window
            .unwrap_or_else(|| crate::analysis::default_window(&params, horizon));
        let grid = match (&c.grid, command) {
            (Some(g), _) => g.times(horizon),
            // Rate fits only use points inside the window.
            (None, Command::RateSweep) => (0..=40)
                .map(|i| {
                    (fit_window.0 + (fit_window.1 - fit_window.0) * i as f64 / 40.0).min(horizon)
                })
                .collect(),
            (None, _) => GridSpec::Count(31).times(horizon),
        };
        let tree = TreeOptions {
            prune_eps: c.prune_eps.unwrap_or(1e-9),
            max_branches: c
                .max_branches
                .unwrap_or(TreeOptions::default().max_branches),
            merge_tol: match c.merge_tol {
                Some(0.0) => None,
                Some(t) => Some(t),
                None => Some(1e-10),
            },
        };
        tree.validate()?;
        let mc = McOptions {
            n_traj: c.ntraj.unwrap_or(100_000),
            seed: c.seed.unwrap_or(0),
            workers: c.workers,
        };
        let cfg = Self {
            command,
            params,
            strategy,
            horizon,
            grid,
            end_rule: c.end_rule.unwrap_or_default(),
            evaluator: c.evaluator.unwrap_or_default(),
            tree,
            mc,
            steps: c.steps.unwrap_or(10),
            k_list: c.k_list.unwrap_or_else(|| vec![10.0, 20.0, 40.0, 80.0]),
            fit_window,
            nc: c.nc.unwrap_or(false),
            max_bound: c.max_bound.unwrap_or(1e-6),
            max_fit_residual: c
                .max_fit_residual
                .unwrap_or(crate::analysis::FIT_RESIDUAL_THRESHOLD),
            optimize: c.optimize.unwrap_or_default(),
            out: c.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.strategy.validate()?;
        self.tree.validate()?;
        self.schedule()?;
        let bad = |m: String| Err(Error::Config(m));
        if self.grid.is_empty()
            || self.grid.windows(2).any(|w| w[0] > w[1])
            || self.grid.iter().any(|t| !(*t >= 0.0 && *t <= self.horizon))
        {
            return bad(format!(
                "grid times must be sorted and inside [0, {}]",
                self.horizon
            ));
        }
        if self.mc.n_traj == 0 {
            return bad("ntraj must be at least 1".into());
        }
        if self.mc.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        if self.k_list.is_empty()
            || self.k_list.iter().any(|k| !(k.is_finite() && *k > 0.0))
            || self.k_list.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("k_list must be positive and strictly ascending".into());
        }
        let (a, b) = self.fit_window;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return bad(format!("fit window ({a}, {b}) must satisfy t_min < t_max"));
        }
        if self.command == Command::RateSweep && b > self.horizon * (1.0 + 1e-12) {
            return bad(format!(
                "fit window ends after the horizon {}",
                self.horizon
            ));
        }
        let o = &self.optimize;
        if !(o.kappa > 0.0 && o.big_k > 0.0 && o.points >= 2) {
            return bad("optimize needs kappa > 0, big_k > 0 and at least 2 points".into());
        }
        if !(self.max_bound >= 0.0 && self.max_fit_residual >= 0.0) {
            return bad("quality thresholds must be non-negative".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Ok(Schedule::new(self.horizon, self.strategy, self.params)?.with_end_rule(self.end_rule))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_point() {
        let c = ExperimentConfig::resolve(Command::Coherence, FileConfig::default()).unwrap();
        assert_eq!(c.params, NoiseParams::default());
        assert_eq!(c.strategy, Strategy::Moaaar { theta: THETA_STAR });
        assert_eq!(c.grid.len(), 31);
        assert_eq!(*c.grid.last().unwrap(), 3.0);
    }

    #[test]
    fn overlay_prefers_the_top_layer() {
        let file = FileConfig {
            kappa: Some(0.1),
            big_k: Some(30.0),
            ..Default::default()
        };
        let flags = FileConfig {
            kappa: Some(0.3),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(Command::Coherence, file.overlay(flags)).unwrap();
        assert_eq!((c.params.kappa, c.params.big_k), (0.3, 30.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"kapa": 0.1}"#).is_err());
        assert!(toml::from_str::<FileConfig>("kappa = 0.1\nbogus = 1\n").is_err());
        let ok: FileConfig =
            toml::from_str("kappa = 0.1\nstrategy = \"moaaar-general\"\ntau = 0.1\n").unwrap();
        assert_eq!(ok.strategy, Some(StrategyKind::MoaaarGeneral));
    }

    #[test]
    fn resolved_config_round_trips() {
        let file = FileConfig {
            strategy: Some(StrategyKind::Greedy),
            grid: Some(GridSpec::Times(vec![0.1, 0.2])),
            merge_tol: Some(0.0),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(Command::Coherence, file).unwrap();
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_errors() {
        let bad = |f: FileConfig| ExperimentConfig::resolve(Command::Coherence, f).is_err();
        assert!(bad(FileConfig {
            kappa: Some(-1.0),
            ..Default::default()
        }));
        assert!(bad(FileConfig {
            theta: Some(4.0),
            ..Default::default()
        }));
        assert!(bad(FileConfig {
            grid: Some(GridSpec::Times(vec![5.0])),
            ..Default::default()
        }));
        assert!(bad(FileConfig {
            k_list: Some(vec![20.0, 10.0]),
            ..Default::default()
        }));
        assert!(bad(FileConfig {
            command: Some("optimize".into()),
            ..Default::default()
        }));
        assert!(bad(FileConfig {
            prune_eps: Some(0.5),
            ..Default::default()
        }));
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(GridSpec::parse("5").unwrap(), GridSpec::Count(5));
        assert_eq!(
            GridSpec::parse("0.5,1,2").unwrap(),
            GridSpec::Times(vec![0.5, 1.0, 2.0])
        );
        assert!(GridSpec::parse("x").is_err());
    }
}
