//! Measurement strategies: how the next `(θ, τ)` is chosen from the current
//! A-vector.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bayes::{
    measured_coherence, stats, MeasurementSetting, StepPropagators, SufficientStats,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::AVector;
use crate::rtp::NoiseParams;

/// Optimal constant angle magnitude for the asymptotic regime.
pub const THETA_STAR: f64 = 1.500_55;

/// Grid sizes and refinement tolerance for the Greedy search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GreedySearch {
    pub n_theta: usize,
    pub n_tau: usize,
    pub tol: f64,
}

impl Default for GreedySearch {
    fn default() -> Self {
        Self {
            n_theta: 64,
            n_tau: 48,
            tol: 1e-4,
        }
    }
}

impl GreedySearch {
    fn validate(&self) -> Result<()> {
        if self.n_theta < 4 || self.n_tau < 4 {
            return Err(invalid("greedy_search", "grids need at least 4 points"));
        }
        if !(self.tol > 0.0 && self.tol < 0.1) {
            return Err(invalid("greedy_search.tol", "must lie in (0, 0.1)"));
        }
        Ok(())
    }
}

/// Strategy configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Strategy {
    #[serde(rename = "nocontrol")]
    NoControl,
    /// Fixed `θ = +Θ`, `τ = Θ/K` regardless of the record.
    #[serde(rename = "periodic")]
    NonAdaptivePeriodic { theta: f64 },
    #[serde(rename = "greedy")]
    Greedy {
        #[serde(default)]
        search: GreedySearch,
    },
    /// `θ = sign(ζ)Θ`, `τ = Θ/K`.
    #[serde(rename = "moaaar")]
    Moaaar { theta: f64 },
    /// `θ = sign(ζ)Θ` with a free waiting time.
    #[serde(rename = "moaaar-general")]
    MoaaarGeneral { theta: f64, tau: f64 },
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Moaaar { theta: THETA_STAR }
    }
}

fn check_cap(theta: f64) -> Result<()> {
    if theta.is_finite() && theta > 0.0 && theta <= PI {
        Ok(())
    } else {
        Err(invalid("theta", format!("must lie in (0, π], got {theta}")))
    }
}

impl Strategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            Strategy::NoControl => Ok(()),
            Strategy::NonAdaptivePeriodic { theta } | Strategy::Moaaar { theta } => {
                check_cap(*theta)
            }
            Strategy::MoaaarGeneral { theta, tau } => {
                check_cap(*theta)?;
                if tau.is_finite() && *tau > 0.0 {
                    Ok(())
                } else {
                    Err(invalid("tau", format!("must be > 0, got {tau}")))
                }
            }
            Strategy::Greedy { search } => search.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::NoControl => "nocontrol",
            Strategy::NonAdaptivePeriodic { .. } => "periodic",
            Strategy::Greedy { .. } => "greedy",
            Strategy::Moaaar { .. } => "moaaar",
            Strategy::MoaaarGeneral { .. } => "moaaar-general",
        }
    }
}

/// MOAAAR choice from the sufficient statistics.
pub fn next_setting_moaaar(
    stats: &SufficientStats,
    theta_cap: f64,
    params: &NoiseParams,
) -> Result<MeasurementSetting> {
    check_cap(theta_cap)?;
    MeasurementSetting::new(stats.sign() * theta_cap, theta_cap / params.big_k)
}

/// `δ = 1 - Σ_y |1ᵀF a| / |1ᵀa|`.
pub fn one_step_loss(
    a: &AVector,
    setting: &MeasurementSetting,
    params: &NoiseParams,
) -> Result<f64> {
    let norm = a.total().norm();
    if norm == 0.0 {
        return Err(Error::DegenerateState("1ᵀa = 0"));
    }
    let props = StepPropagators::new(&setting.tau, params);
    Ok(1.0 - measured_coherence(&props, &setting.theta, a) / norm)
}

/// One-step objective `J(θ, τ) = Σ_y |1ᵀ F(θ,τ,y) a|`.
pub fn greedy_objective(a: &AVector, theta: f64, tau: f64, params: &NoiseParams) -> f64 {
    measured_coherence(&StepPropagators::new(&tau, params), &theta, a)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of `f` on `[lo, hi]`; returns `(x, f(x))`.
fn golden_max(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Best angle magnitude `u ∈ (0, π]` (θ = s·u) at fixed `τ`.
fn best_theta(
    a: &AVector,
    s: f64,
    tau: f64,
    params: &NoiseParams,
    search: &GreedySearch,
) -> (f64, f64) {
    let props = StepPropagators::new(&tau, params);
    let j = |u: f64| measured_coherence(&props, &(s * u), a);
    let n = search.n_theta;
    let step = PI / n as f64;
    let mut best = (step, j(step));
    for i in 2..=n {
        let u = step * i as f64;
        let v = j(u);
        if v > best.1 {
            best = (u, v);
        }
    }
    let lo = (best.0 - step).max(0.0);
    let hi = (best.0 + step).min(PI);
    let refined = golden_max(lo, hi, search.tol, j);
    if refined.1 > best.1 {
        refined
    } else {
        best
    }
}

/// Greedy choice from a raw A-vector.
///
/// `J` alone is maximized by `τ → 0` (nothing happens, nothing is lost), so
/// the search looks for the informative maximum: along the `τ` grid the
/// profile `max_θ J` first dips under dephasing and then recovers as the
/// measurement becomes informative. The returned point is the best one past
/// the first dip. If the profile has no dip, the flattest point is used.
///
/// The result is rounded to the `tol` lattice in `|θ|` and `τK`.
///
/// `J(θ + π) = J(θ)` with the outcomes relabelled, so `θ` is searched on
/// `sign(ζ)·(0, π]`, which makes `y = 0` the likely (null) outcome.
pub fn next_setting_greedy(
    a: &AVector,
    params: &NoiseParams,
    search: &GreedySearch,
) -> Result<MeasurementSetting> {
    search.validate()?;
    let s = stats(a, params)?.sign();
    let n = search.n_tau;
    let dx = PI / n as f64;
    let tau_of = |i: usize| dx * i as f64 / params.big_k;
    let profile: Vec<(f64, f64)> = (1..=n)
        .map(|i| best_theta(a, s, tau_of(i), params, search))
        .collect();

    let dip =
        (1..n - 1).find(|&i| profile[i].1 < profile[i - 1].1 && profile[i].1 <= profile[i + 1].1);
    let (u, tau) = match dip {
        Some(d) => {
            let mut im = d;
            for i in d + 1..n {
                if profile[i].1 > profile[im].1 {
                    im = i;
                }
            }
            // profile[i] sits at tau_of(i + 1); bracket one grid step either side
            let lo = tau_of(im.max(d + 1));
            let hi = tau_of((im + 2).min(n));
            let tol_tau = search.tol / params.big_k;
            let (tau, jv) = golden_max(lo, hi, tol_tau, |t| best_theta(a, s, t, params, search).1);
            if jv > profile[im].1 {
                (best_theta(a, s, tau, params, search).0, tau)
            } else {
                (profile[im].0, tau_of(im + 1))
            }
        }
        None => {
            let mut im = 0;
            let mut slope = f64::NEG_INFINITY;
            for i in 0..n - 1 {
                let d = profile[i + 1].1 - profile[i].1;
                if d > slope {
                    slope = d;
                    im = i;
                }
            }
            (profile[im].0, tau_of(im + 1))
        }
    };
    // report on the tolerance lattice so equivalent branches share settings
    let snap = |v: f64| ((v / search.tol).round() * search.tol).clamp(search.tol, PI);
    MeasurementSetting::new(s * snap(u), snap(tau * params.big_k) / params.big_k)
}

/// A strategy bound to noise parameters, ready to be queried per branch.
#[derive(Clone, Debug)]
pub struct Policy {
    strategy: Strategy,
    params: NoiseParams,
}

impl Policy {
    pub fn new(strategy: Strategy, params: NoiseParams) -> Result<Self> {
        strategy.validate()?;
        params.validate()?;
        Ok(Self { strategy, params })
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    /// Settings that can be produced independently of the record, if the
    /// strategy only ever uses finitely many.
    pub fn fixed_settings(&self) -> Vec<MeasurementSetting> {
        let k = self.params.big_k;
        let pair = |theta: f64, tau: f64| {
            vec![
                MeasurementSetting { theta, tau },
                MeasurementSetting { theta: -theta, tau },
            ]
        };
        match self.strategy {
            Strategy::NoControl | Strategy::Greedy { .. } => Vec::new(),
            Strategy::NonAdaptivePeriodic { theta } => vec![MeasurementSetting {
                theta,
                tau: theta / k,
            }],
            Strategy::Moaaar { theta } => pair(theta, theta / k),
            Strategy::MoaaarGeneral { theta, tau } => pair(theta, tau),
        }
    }

    /// Next setting, or `None` when the strategy makes no more measurements.
    pub fn next_setting(&self, a: &AVector) -> Result<Option<MeasurementSetting>> {
        next_setting(&self.strategy, a, &self.params)
    }
}

/// Strategy dispatch.
pub fn next_setting(
    strategy: &Strategy,
    a: &AVector,
    params: &NoiseParams,
) -> Result<Option<MeasurementSetting>> {
    let k = params.big_k;
    let setting = match *strategy {
        Strategy::NoControl => return Ok(None),
        Strategy::NonAdaptivePeriodic { theta } => {
            check_cap(theta)?;
            MeasurementSetting::new(theta, theta / k)?
        }
        Strategy::Moaaar { theta } => next_setting_moaaar(&stats(a, params)?, theta, params)?,
        Strategy::MoaaarGeneral { theta, tau } => {
            check_cap(theta)?;
            MeasurementSetting::new(stats(a, params)?.sign() * theta, tau)?
        }
        Strategy::Greedy { search } => next_setting_greedy(a, params, &search)?,
    };
    Ok(Some(setting))
}
