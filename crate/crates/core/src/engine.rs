//! Evaluators of the controlled coherence `𝒞ᶜ(t) = Σ_Y |1ᵀ A_Y(t)|`.
//!
//! [`run_exact_tree`] enumerates measurement records level by level with
//! optional pruning and merging, carrying a sound truncation bound.
//! [`run_monte_carlo`] simulates physical records with explicit final
//! control. [`phase_portrait`] reports the `(α, ζ)` cloud of the tree.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{likelihood, stats, BayesMap, MeasurementSetting, Outcome, StepPropagators};
use crate::control::{Policy, Strategy};
use crate::error::{invalid, Error, Result};
use crate::linalg::AVector;
use crate::rtp::{char_matrix, sample_trajectory, stationary_vector, InitialSign, NoiseParams};

/// How the last interval is handled when `T` is not on the measurement grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndRule {
    /// No measurement may end after `T`; the remainder is free evolution.
    #[default]
    Truncate,
    /// Coherence at `t` is read right after the last measurement at or
    /// before `t`, without free evolution.
    Snap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub horizon: f64,
    pub strategy: Strategy,
    pub params: NoiseParams,
    #[serde(default)]
    pub end_rule: EndRule,
}

impl Schedule {
    pub fn new(horizon: f64, strategy: Strategy, params: NoiseParams) -> Result<Self> {
        let s = Self {
            horizon,
            strategy,
            params,
            end_rule: EndRule::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_end_rule(mut self, end_rule: EndRule) -> Self {
        self.end_rule = end_rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(invalid(
                "horizon",
                format!("must be > 0, got {}", self.horizon),
            ));
        }
        self.params.validate()?;
        self.strategy.validate()
    }

    fn eps(&self) -> f64 {
        1e-9 * self.horizon.max(1.0)
    }

    /// Longest waiting time the strategy can ask for.
    fn max_tau(&self) -> f64 {
        match self.strategy {
            Strategy::MoaaarGeneral { tau, .. } => tau,
            _ => PI / self.params.big_k,
        }
    }
}

/// Tree enumeration controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeOptions {
    /// Children with record probability below `prune_eps / live` are dropped.
    pub prune_eps: f64,
    /// Largest frontier allowed at any level.
    pub max_branches: usize,
    /// Branches at the same time whose normalized A-vectors agree to this
    /// tolerance are merged.
    pub merge_tol: Option<f64>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            prune_eps: 0.0,
            max_branches: 1 << 22,
            merge_tol: None,
        }
    }
}

impl TreeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.01).contains(&self.prune_eps) {
            return Err(invalid(
                "prune_eps",
                format!("must lie in [0, 0.01], got {}", self.prune_eps),
            ));
        }
        if self.max_branches == 0 {
            return Err(invalid("max_branches", "must be positive"));
        }
        if let Some(tol) = self.merge_tol {
            if !(tol > 0.0 && tol < 1e-2) {
                return Err(invalid(
                    "merge_tol",
                    format!("must lie in (0, 0.01), got {tol}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreePoint {
    pub t: f64,
    pub coherence: f64,
    /// The exact value lies in `[coherence, coherence + bound]`.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeReport {
    pub points: Vec<TreePoint>,
    /// Record probability of all dropped branches.
    pub dropped_mass: f64,
    /// Record probability that reached the end of the schedule.
    pub live_mass: f64,
    pub levels: usize,
    pub max_live: usize,
    pub merged: usize,
}

/// One record, or records merged onto a shared normalized state.
#[derive(Clone, Debug)]
struct Entry {
    t: f64,
    /// The record's A-vector is `w · a` of the owning node.
    w: f64,
    /// Same record at `κ = 0`: a joint probability vector.
    q: AVector,
}

impl Entry {
    fn prob(&self) -> f64 {
        self.q.total().re
    }
}

/// A-vector shared by one or more records. All entries of a node receive
/// the same decisions because those depend on the A-vector only up to scale.
#[derive(Clone, Debug)]
struct Node {
    a: AVector,
    entries: Vec<Entry>,
}

impl Node {
    fn root(params: &NoiseParams) -> Self {
        Self {
            a: stationary_vector(params),
            entries: vec![Entry {
                t: 0.0,
                w: 1.0,
                q: stationary_vector(params),
            }],
        }
    }

    fn prob(&self) -> f64 {
        self.entries.iter().map(Entry::prob).sum()
    }
}

/// The maps of one setting, at `κ` and at `κ = 0`.
#[derive(Clone, Debug)]
struct StepMaps {
    f: [BayesMap; 2],
    q: [BayesMap; 2],
}

impl StepMaps {
    fn new(s: &MeasurementSetting, params: &NoiseParams) -> Self {
        let pk = StepPropagators::new(&s.tau, params);
        let p0 = StepPropagators::with_kappa(&0.0, &s.tau, params);
        Self {
            f: Outcome::BOTH.map(|y| pk.map(&s.theta, y)),
            q: Outcome::BOTH.map(|y| p0.map(&s.theta, y)),
        }
    }
}

fn setting_key(s: &MeasurementSetting) -> (u64, u64) {
    (s.theta.to_bits(), s.tau.to_bits())
}

struct Walker {
    policy: Policy,
    cache: HashMap<(u64, u64), Arc<StepMaps>>,
}

impl Walker {
    fn new(schedule: &Schedule) -> Result<Self> {
        schedule.validate()?;
        let policy = Policy::new(schedule.strategy, schedule.params)?;
        let cache = policy
            .fixed_settings()
            .into_iter()
            .map(|s| {
                (
                    setting_key(&s),
                    Arc::new(StepMaps::new(&s, &schedule.params)),
                )
            })
            .collect();
        Ok(Self { policy, cache })
    }

    fn maps(&self, s: &MeasurementSetting) -> Arc<StepMaps> {
        match self.cache.get(&setting_key(s)) {
            Some(m) => Arc::clone(m),
            None => Arc::new(StepMaps::new(s, self.policy.params())),
        }
    }

    fn children(&self, a: &AVector, entries: &[Entry], s: &MeasurementSetting) -> [Node; 2] {
        let m = self.maps(s);
        [0, 1].map(|y| Node {
            a: m.f[y].apply(a),
            entries: entries
                .iter()
                .map(|e| Entry {
                    t: e.t + s.tau,
                    w: e.w,
                    q: m.q[y].apply(&e.q),
                })
                .collect(),
        })
    }
}

fn validate_grid(grid: &[f64], horizon: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("grid", "needs at least one time"));
    }
    if grid
        .iter()
        .any(|t| !(t.is_finite() && *t >= 0.0 && *t <= horizon * (1.0 + 1e-12)))
    {
        return Err(invalid("grid", format!("times must lie in [0, {horizon}]")));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("grid", "times must be non-decreasing"));
    }
    Ok(())
}

/// Grid indices with `t_g ∈ [from, until)`, both edges shifted down by `eps`.
fn grid_span(grid: &[f64], from: f64, until: f64, eps: f64) -> std::ops::Range<usize> {
    let lo = grid.partition_point(|&t| t < from - eps);
    let hi = grid.partition_point(|&t| t < until - eps);
    lo..hi.max(lo)
}

/// `|1ᵀ M(κ; dt) a|`, skipping the propagator for `|dt| ≤ eps`.
fn evolved_coherence(a: &AVector, dt: f64, eps: f64, params: &NoiseParams) -> Result<f64> {
    if dt.abs() <= eps {
        return Ok(a.total().norm());
    }
    Ok(char_matrix(params.kappa, dt, params)?
        .apply(a)
        .total()
        .norm())
}

/// Whether a record at time `t` may still start a measurement.
fn may_measure(schedule: &Schedule, t: f64) -> bool {
    match schedule.end_rule {
        EndRule::Truncate => true,
        EndRule::Snap => t < schedule.horizon - schedule.eps(),
    }
}

/// Whether a record at time `t` takes the measurement `s`.
fn takes(schedule: &Schedule, t: f64, s: &MeasurementSetting) -> bool {
    match schedule.end_rule {
        EndRule::Truncate => t + s.tau <= schedule.horizon + schedule.eps(),
        EndRule::Snap => may_measure(schedule, t),
    }
}

/// Coherence of a record with A-vector `a` at grid time `tg`, last measured at `t`.
fn grid_value(schedule: &Schedule, a: &AVector, t: f64, tg: f64) -> Result<f64> {
    match schedule.end_rule {
        EndRule::Truncate => evolved_coherence(a, tg - t, schedule.eps(), &schedule.params),
        EndRule::Snap => Ok(a.total().norm()),
    }
}

struct Expansion {
    contrib: Vec<(usize, f64)>,
    children: Option<[Node; 2]>,
    finished_mass: f64,
}

fn expand(walker: &Walker, schedule: &Schedule, grid: &[f64], node: &Node) -> Result<Expansion> {
    let eps = schedule.eps();
    let setting = if node.entries.iter().any(|e| may_measure(schedule, e.t)) {
        walker.policy.next_setting(&node.a)?
    } else {
        None
    };
    let mut contrib = Vec::new();
    let mut going = Vec::new();
    let mut finished_mass = 0.0;
    for e in &node.entries {
        let next = setting.filter(|s| takes(schedule, e.t, s));
        let until = next.map_or(f64::INFINITY, |s| e.t + s.tau);
        for g in grid_span(grid, e.t, until, eps) {
            contrib.push((g, e.w * grid_value(schedule, &node.a, e.t, grid[g])?));
        }
        match next {
            Some(_) => going.push(e.clone()),
            None => finished_mass += e.prob(),
        }
    }
    let children = match setting {
        Some(s) if !going.is_empty() => Some(walker.children(&node.a, &going, &s)),
        _ => None,
    };
    Ok(Expansion {
        contrib,
        children,
        finished_mass,
    })
}

/// Normalized A-vector: dominant component real positive, `|a|₁ = 1`.
fn normalized(a: &AVector) -> AVector {
    let dom = if a.a_plus.norm() >= a.a_minus.norm() {
        a.a_plus
    } else {
        a.a_minus
    };
    let n = a.norm1();
    if n == 0.0 {
        return a.clone();
    }
    let u = dom.conj() / dom.norm();
    a.scale(&(u / n))
}

type MergeKey = (i64, i64, i64, i64);

fn merge_key(n: &AVector, tol: f64) -> MergeKey {
    let q = |x: f64| (x / tol).round() as i64;
    (
        q(n.a_plus.re),
        q(n.a_plus.im),
        q(n.a_minus.re),
        q(n.a_minus.im),
    )
}

/// Add `e` to time-sorted `entries`, pooling it with an entry at the same time.
fn insert_entry(entries: &mut Vec<Entry>, e: Entry, eps: f64) {
    let i = entries.partition_point(|x| x.t < e.t - eps);
    match entries.get_mut(i) {
        Some(x) if (x.t - e.t).abs() <= eps => {
            x.w += e.w;
            x.q = x.q.clone() + e.q;
        }
        _ => entries.insert(i, e),
    }
}

/// A record removed from the frontier.
enum Removed {
    /// Dropped by pruning; owes its probability to the bound.
    Dropped(AVector, Entry),
    /// Moved onto a nearby state; owes the proportionality defect from `t` on.
    Merged { t: f64, defect: f64 },
}

/// Level-synchronous walk shared by the tree evaluator and the portrait.
struct LevelWalk<'a> {
    walker: Walker,
    schedule: &'a Schedule,
    opts: TreeOptions,
    frontier: Vec<Node>,
    dropped_mass: f64,
    merged: usize,
    max_live: usize,
}

impl<'a> LevelWalk<'a> {
    fn new(schedule: &'a Schedule, opts: TreeOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self {
            walker: Walker::new(schedule)?,
            schedule,
            opts,
            frontier: vec![Node::root(&schedule.params)],
            dropped_mass: 0.0,
            merged: 0,
            max_live: 1,
        })
    }

    /// Prune and merge freshly generated children, keeping their order.
    fn admit(&mut self, children: Vec<Node>) -> Result<Vec<Removed>> {
        let threshold = self.opts.prune_eps / children.len().max(1) as f64;
        let eps = self.schedule.eps();
        let mut removed = Vec::new();
        let mut kept: Vec<Node> = Vec::with_capacity(children.len());
        let mut norms: Vec<AVector> = Vec::new();
        let mut index: HashMap<MergeKey, usize> = HashMap::new();
        for mut child in children {
            if threshold > 0.0 {
                let (drop, keep): (Vec<Entry>, Vec<Entry>) = child
                    .entries
                    .into_iter()
                    .partition(|e| e.prob() < threshold);
                for e in drop {
                    self.dropped_mass += e.prob();
                    removed.push(Removed::Dropped(child.a.clone(), e));
                }
                child.entries = keep;
                if child.entries.is_empty() {
                    continue;
                }
            }
            let Some(tol) = self.opts.merge_tol else {
                kept.push(child);
                continue;
            };
            let size = child.a.norm1();
            if size == 0.0 {
                kept.push(child);
                norms.push(AVector::from_real(0.0, 0.0));
                continue;
            }
            // keep |a|₁ = 1 and move the scale into the weights
            child.a = child.a.scale_real(&(1.0 / size));
            for e in &mut child.entries {
                e.w *= size;
            }
            let n = normalized(&child.a);
            let key = merge_key(&n, tol);
            match index.get(&key) {
                Some(&i) => {
                    let gap = (n - norms[i].clone()).norm1();
                    for e in child.entries {
                        removed.push(Removed::Merged {
                            t: e.t,
                            defect: gap * e.w,
                        });
                        insert_entry(&mut kept[i].entries, e, eps);
                    }
                    self.merged += 1;
                }
                None => {
                    index.insert(key, kept.len());
                    kept.push(child);
                    norms.push(n);
                }
            }
        }
        if kept.len() > self.opts.max_branches {
            return Err(Error::BranchCap {
                live: kept.len(),
                cap: self.opts.max_branches,
            });
        }
        self.max_live = self.max_live.max(kept.len());
        self.frontier = kept;
        Ok(removed)
    }
}

/// Exact evaluation of `𝒞ᶜ(t)` on `grid` by record enumeration.
///
/// Children are kept in lexicographic record order (first outcome most
/// significant) and per-time sums are accumulated in that order, so the
/// result does not depend on the number of worker threads.
pub fn run_exact_tree(schedule: &Schedule, opts: &TreeOptions, grid: &[f64]) -> Result<TreeReport> {
    validate_grid(grid, schedule.horizon)?;
    let mut walk = LevelWalk::new(schedule, *opts)?;
    let eps = schedule.eps();
    let mut sums = vec![0.0; grid.len()];
    let mut bounds = vec![0.0; grid.len()];
    let mut live_mass = 0.0;
    let mut levels = 0;

    while !walk.frontier.is_empty() {
        let expansions: Vec<Result<Expansion>> = walk
            .frontier
            .par_iter()
            .map(|node| expand(&walk.walker, schedule, grid, node))
            .collect();
        let mut children = Vec::new();
        for e in expansions {
            let e = e?;
            for (g, v) in e.contrib {
                sums[g] += v;
            }
            live_mass += e.finished_mass;
            if let Some(c) = e.children {
                children.extend(c);
            }
        }
        if children.is_empty() {
            break;
        }
        levels += 1;
        for r in walk.admit(children)? {
            match r {
                Removed::Dropped(a, e) => {
                    let p = e.prob().max(0.0);
                    for g in grid_span(grid, e.t, f64::INFINITY, eps) {
                        // the lost subtree is worth between |1ᵀ M a| and its probability
                        let lower = match schedule.end_rule {
                            EndRule::Truncate => e.w * grid_value(schedule, &a, e.t, grid[g])?,
                            EndRule::Snap => 0.0,
                        };
                        sums[g] += lower;
                        bounds[g] += (p - lower).max(0.0);
                    }
                }
                Removed::Merged { t, defect } => {
                    for g in grid_span(grid, t, f64::INFINITY, eps) {
                        bounds[g] += defect;
                    }
                }
            }
        }
    }

    let points = grid
        .iter()
        .zip(sums.iter().zip(&bounds))
        .map(|(&t, (&c, &b))| TreePoint {
            t,
            coherence: c,
            bound: b,
        })
        .collect();
    Ok(TreeReport {
        points,
        dropped_mass: walk.dropped_mass,
        live_mass,
        levels,
        max_live: walk.max_live,
        merged: walk.merged,
    })
}

/// One aggregated point of the `(α, ζ)` cloud after `n` measurements.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortraitPoint {
    pub n: usize,
    pub alpha: f64,
    pub zeta: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortraitReport {
    pub points: Vec<PortraitPoint>,
    /// Cumulative dropped probability after each level `0..=n_steps`.
    pub dropped_mass: Vec<f64>,
}

fn aggregate(n: usize, frontier: &[Node], params: &NoiseParams) -> Result<Vec<PortraitPoint>> {
    let tol = 1e-9;
    let mut cells: BTreeMap<(i64, i64), (f64, f64, f64)> = BTreeMap::new();
    for node in frontier {
        let s = stats(&node.a, params)?;
        let alpha = s.alpha_or_zero();
        let key = ((s.zeta / tol).round() as i64, (alpha / tol).round() as i64);
        let cell = cells.entry(key).or_insert((alpha, s.zeta, 0.0));
        cell.2 += node.prob();
    }
    Ok(cells
        .into_values()
        .map(|(alpha, zeta, weight)| PortraitPoint {
            n,
            alpha,
            zeta,
            weight,
        })
        .collect())
}

/// `(α, ζ, ℘(Y_n))` for every record up to depth `n_steps`.
///
/// The walk runs a fixed number of levels; the schedule's horizon and end
/// rule are not used.
pub fn phase_portrait(
    schedule: &Schedule,
    n_steps: usize,
    opts: &TreeOptions,
) -> Result<PortraitReport> {
    let mut walk = LevelWalk::new(schedule, *opts)?;
    let params = schedule.params;
    let mut points = aggregate(0, &walk.frontier, &params)?;
    let mut dropped = vec![0.0];
    for n in 1..=n_steps {
        let settings: Vec<Result<Option<MeasurementSetting>>> = walk
            .frontier
            .par_iter()
            .map(|node| walk.walker.policy.next_setting(&node.a))
            .collect();
        let mut children = Vec::new();
        for (node, s) in walk.frontier.iter().zip(settings) {
            if let Some(s) = s? {
                children.extend(walk.walker.children(&node.a, &node.entries, &s));
            }
        }
        if children.is_empty() {
            break;
        }
        walk.admit(children)?;
        points.extend(aggregate(n, &walk.frontier, &params)?);
        dropped.push(walk.dropped_mass);
    }
    Ok(PortraitReport {
        points,
        dropped_mass: dropped,
    })
}

/// Monte Carlo controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McOptions {
    pub n_traj: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl McOptions {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self {
            n_traj,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub t: f64,
    pub coherence: f64,
    /// Batch-means standard error; NaN with fewer than two batches.
    pub std_error: f64,
}

const MC_BATCHES: usize = 30;
const MC_CHUNK: usize = 256;

/// Phasor `e^{iφ(t_g)}` of one trajectory at every grid time.
fn simulate_one(
    walker: &Walker,
    schedule: &Schedule,
    grid: &[f64],
    rng: &mut ChaCha8Rng,
    out: &mut [Complex<f64>],
) -> Result<()> {
    let params = &schedule.params;
    let eps = schedule.eps();
    let path = sample_trajectory(
        params,
        InitialSign::Stationary,
        schedule.horizon + schedule.max_tau() + eps,
        rng,
    )?;
    let mut a = stationary_vector(params);
    let mut t = 0.0;
    let mut x = 0.0;
    loop {
        let setting = if may_measure(schedule, t) {
            walker
                .policy
                .next_setting(&a)?
                .filter(|s| takes(schedule, t, s))
        } else {
            None
        };
        let until = setting.map_or(f64::INFINITY, |s| t + s.tau);
        for g in grid_span(grid, t, until, eps) {
            let dt = grid[g] - t;
            let total = match schedule.end_rule {
                EndRule::Truncate if dt.abs() > eps => {
                    char_matrix(params.kappa, dt, params)?.apply(&a).total()
                }
                _ => a.total(),
            };
            let c = if total.norm() > 0.0 { total.arg() } else { 0.0 };
            let xg = x + path.integrate(t, grid[g].max(t))?;
            out[g] += Complex::from_polar(1.0, params.kappa * xg - c);
        }
        let Some(s) = setting else { break };
        let dx = path.integrate(t, t + s.tau)?;
        let y = if rng.random::<f64>() < likelihood(Outcome::Null, s.theta, dx, params.big_k) {
            0
        } else {
            1
        };
        let next = walker.maps(&s).f[y].apply(&a);
        let n = next.norm1();
        if n == 0.0 {
            return Err(Error::DegenerateState(
                "measurement annihilated the A-vector",
            ));
        }
        a = next.scale_real(&(1.0 / n));
        t += s.tau;
        x += dx;
    }
    Ok(())
}

/// Monte Carlo estimate of `𝒞ᶜ(t)` with batch-means standard errors.
///
/// Trajectory `i` draws from its own ChaCha8 stream `(seed, i)`, and partial
/// sums are reduced in a fixed order, so the output does not depend on the
/// number of workers.
pub fn run_monte_carlo(
    schedule: &Schedule,
    opts: &McOptions,
    grid: &[f64],
) -> Result<Vec<McPoint>> {
    if opts.n_traj == 0 {
        return Err(invalid("n_traj", "must be at least 1"));
    }
    validate_grid(grid, schedule.horizon)?;
    let walker = Walker::new(schedule)?;
    let n = opts.n_traj;
    let batches = MC_BATCHES.min(n);
    let bounds: Vec<usize> = (0..=batches).map(|b| b * n / batches).collect();
    let units: Vec<(usize, usize, usize)> = (0..batches)
        .flat_map(|b| {
            let end = bounds[b + 1];
            (bounds[b]..end)
                .step_by(MC_CHUNK)
                .map(move |lo| (b, lo, (lo + MC_CHUNK).min(end)))
        })
        .collect();

    let run = || -> Vec<Result<Vec<Complex<f64>>>> {
        units
            .par_iter()
            .map(|&(_, lo, hi)| {
                let mut acc = vec![Complex::new(0.0, 0.0); grid.len()];
                for i in lo..hi {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(i as u64);
                    simulate_one(&walker, schedule, grid, &mut rng, &mut acc)?;
                }
                Ok(acc)
            })
            .collect()
    };
    let partials = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run),
        None => run(),
    };

    let mut batch_sums = vec![vec![Complex::new(0.0, 0.0); grid.len()]; batches];
    for (&(b, _, _), part) in units.iter().zip(partials) {
        for (s, v) in batch_sums[b].iter_mut().zip(part?) {
            *s += v;
        }
    }
    let points = (0..grid.len())
        .map(|g| {
            let total: Complex<f64> = batch_sums.iter().map(|s| s[g]).sum();
            let coherence = (total / n as f64).norm();
            let mods: Vec<f64> = (0..batches)
                .map(|b| (batch_sums[b][g] / (bounds[b + 1] - bounds[b]) as f64).norm())
                .collect();
            let std_error = if batches < 2 {
                f64::NAN
            } else {
                let m = mods.iter().sum::<f64>() / batches as f64;
                let var = mods.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
                (var / batches as f64).sqrt()
            };
            McPoint {
                t: grid[g],
                coherence,
                std_error,
            }
        })
        .collect();
    Ok(points)
}

/// `n` evenly spaced times on `[0, horizon]` (`n ≥ 2`), or `[horizon]`.
pub fn uniform_grid(horizon: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![horizon];
    }
    (0..n)
        .map(|i| horizon * i as f64 / (n - 1) as f64)
        .collect()
}
