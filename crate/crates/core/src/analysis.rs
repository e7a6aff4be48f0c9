//! Closed-form and semi-analytic results: fixed points of the null-outcome
//! maps, the ergodic decay rate, the asymptotic cost `H_Θ`, the no-control
//! coherence and slope fitting.

use std::f64::consts::PI;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::bayes::{measured_coherence, Outcome, StepPropagators};
use crate::error::{invalid, Error, Result};
use crate::linalg::{AVector, Mat2};
use crate::rtp::{char_matrix, stationary_vector, steady_state, NoiseParams};
use crate::scalar::{cabs, csqrt, Real, Wide};

/// Dominant eigenvectors of the null-outcome maps `F⁰±(Θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointPair {
    pub e_plus: AVector,
    pub e_minus: AVector,
    pub eigenvalues: (Complex<f64>, Complex<f64>),
}

/// Dominant eigenpair of a 2×2 complex matrix.
///
/// The eigenvector is normalized to `|A⁺| + |A⁻| = 1` and `arg(1ᵀE) = 0`.
pub fn fixed_point<T: Real>(map: &Mat2<T>) -> Result<(AVector<T>, Complex<T>)> {
    let [[a, b], [c, d]] = map.m.clone();
    let two = T::from_f64(2.0);
    let h = (a.clone() + d.clone()).unscale(two.clone());
    let g = (a.clone() - d.clone()).unscale(two);
    let mut s = csqrt(&(g.clone() * g + b.clone() * c.clone()));
    // pick the root that adds to h, so λ_a does not cancel
    if (h.clone().conj() * s.clone()).re < T::zero() {
        s = -s;
    }
    let lam_a = h + s;
    let det = map.det();
    let lam_b = if cabs(&lam_a).is_zero() {
        lam_a.clone()
    } else {
        det / lam_a.clone()
    };
    let (ra, rb) = (cabs(&lam_a).to_f64(), cabs(&lam_b).to_f64());
    if (ra - rb).abs() <= 1e-12 {
        return Err(Error::DegenerateDominance(ra, rb));
    }
    let lam = if ra > rb { lam_a } else { lam_b };

    let v1 = AVector::new(b, lam.clone() - a);
    let v2 = AVector::new(lam.clone() - d, c);
    let v = if v1.norm1() >= v2.norm1() { v1 } else { v2 };
    if v.is_zero() {
        return Err(Error::DegenerateState("zero eigenvector"));
    }
    let total = v.total();
    let phase = if cabs(&total).is_zero() {
        v.a_plus.clone()
    } else {
        total
    };
    let unit = phase.clone().unscale(cabs(&phase));
    let v = v.scale(&unit.conj());
    let n = v.norm1();
    Ok((v.scale_real(&(T::one() / n)), lam))
}

/// `F⁰₊(Θ)` and `F⁰₋(Θ)` at waiting time `τ`, in precision `T`.
fn null_maps<T: Real>(
    theta_cap: &T,
    tau: &T,
    params: &NoiseParams,
) -> [(f64, Mat2<T>, StepPropagators<T>); 2] {
    let props = StepPropagators::<T>::new(tau, params);
    let (pp, pm) = steady_state(params);
    let fp = props.map(theta_cap, Outcome::Null);
    let fm = props.map(&-theta_cap.clone(), Outcome::Null);
    [(pp, fp, props.clone()), (pm, fm, props)]
}

fn check_theta(theta_cap: f64) -> Result<()> {
    if theta_cap.is_finite() && theta_cap > 0.0 && theta_cap <= PI {
        Ok(())
    } else {
        Err(invalid(
            "theta",
            format!("must lie in (0, π], got {theta_cap}"),
        ))
    }
}

/// Fixed points `E⁰±` of `F⁰±(Θ)` with `τ` defaulting to `Θ/K`.
pub fn fixed_points(
    theta_cap: f64,
    tau: Option<f64>,
    params: &NoiseParams,
) -> Result<FixedPointPair> {
    check_theta(theta_cap)?;
    let tau = tau.unwrap_or(theta_cap / params.big_k);
    let [(_, fp, _), (_, fm, _)] = null_maps(&theta_cap, &tau, params);
    let (e_plus, lp) = fixed_point(&fp)?;
    let (e_minus, lm) = fixed_point(&fm)?;
    Ok(FixedPointPair {
        e_plus,
        e_minus,
        eigenvalues: (lp, lm),
    })
}

/// Ergodic decay rate
/// `Γ̄(Θ) = Σ_s P_ss(s) (|1ᵀE_s| - Σ_y |1ᵀF^y_s E_s|) / (τ |1ᵀE_s|)`.
///
/// Evaluated in [`Wide`] precision: deep in the asymptotic regime the
/// per-step loss is far below `f64` resolution.
pub fn ergodic_rate(theta_cap: f64, tau: Option<f64>, params: &NoiseParams) -> Result<f64> {
    check_theta(theta_cap)?;
    params.validate()?;
    if let Some(t) = tau {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid("tau", format!("must be > 0, got {t}")));
        }
    }
    let th = Wide::from_f64(theta_cap);
    let tau = match tau {
        Some(t) => Wide::from_f64(t),
        None => th.clone() / Wide::from_f64(params.big_k),
    };
    let mut rate = Wide::zero();
    for (s, (weight, map, props)) in [1.0, -1.0].into_iter().zip(null_maps(&th, &tau, params)) {
        let (e, _) = fixed_point(&map)?;
        let norm = cabs(&e.total());
        let theta = th.clone() * Wide::from_f64(s);
        let kept = measured_coherence(&props, &theta, &e);
        let loss = (norm.clone() - kept) / (tau.clone() * norm);
        rate = rate + Wide::from_f64(weight) * loss;
    }
    Ok(rate.to_f64())
}

/// Asymptotic cost
/// `H_Θ = 3Θ² csc⁴Θ - [2Θ(Θ - cot Θ) + 1] csc²Θ + Θ²/3 - 1`.
pub fn h_theta(theta_cap: f64) -> Result<f64> {
    if !(theta_cap > 0.0 && theta_cap < PI) {
        return Err(invalid(
            "theta",
            format!("must lie in (0, π), got {theta_cap}"),
        ));
    }
    let t = theta_cap;
    let (s, c) = t.sin_cos();
    let csc2 = 1.0 / (s * s);
    let cot = c / s;
    Ok(3.0 * t * t * csc2 * csc2 - (2.0 * t * (t - cot) + 1.0) * csc2 + t * t / 3.0 - 1.0)
}

/// Minimizer and minimum of `H_Θ` on `(0.1, π - 0.1)`.
pub fn optimize_theta() -> (f64, f64) {
    let h = |t: f64| h_theta(t).expect("inside (0, π)");
    let (lo, hi) = (0.1, PI - 0.1);
    let n = 256;
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + step * i as f64)
        .min_by(|x, y| h(*x).total_cmp(&h(*y)))
        .expect("non-empty grid");
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let r = 0.618_033_988_749_894_8;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (h(x1), h(x2));
    while b - a > 1e-10 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = h(x2);
        }
    }
    let t = 0.5 * (a + b);
    (t, h(t))
}

/// No-control coherence `|1ᵀ M(κ; t) P_ss|`.
pub fn nc_coherence(t: f64, params: &NoiseParams) -> Result<f64> {
    let m = char_matrix(params.kappa, t, params)?;
    Ok(m.apply(&stationary_vector(params)).total().norm())
}

/// Asymptotic no-control rate `κ²γ̆ / (2γ̄²)`.
pub fn nc_rate(params: &NoiseParams) -> f64 {
    params.kappa.powi(2) * params.gamma_breve() / (2.0 * params.gamma_bar().powi(2))
}

/// Least-squares decay rate of a coherence series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub rate: f64,
    pub scaled_rate: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    /// RMS residual of `-ln 𝒞` about the fitted line.
    pub residual: f64,
    /// `residual` relative to the fitted decay across the window.
    pub relative_residual: f64,
}

impl RateResult {
    pub fn exceeds(&self, threshold: f64) -> bool {
        self.relative_residual > threshold
    }
}

/// Relative fit residual above which a fit is flagged.
pub const FIT_RESIDUAL_THRESHOLD: f64 = 0.05;

/// Default fit window `[min(5/γ̆, T/2), T]`.
pub fn default_window(params: &NoiseParams, horizon: f64) -> (f64, f64) {
    ((5.0 / params.gamma_breve()).min(horizon / 2.0), horizon)
}

/// Slope of `-ln 𝒞` versus `t` over `window`.
pub fn fit_rate(
    series: &[(f64, f64)],
    window: (f64, f64),
    params: &NoiseParams,
) -> Result<RateResult> {
    let eps = 1e-12 * window.1.abs().max(1.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 - eps && *t <= window.1 + eps)
        .copied()
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!(
            "{} points in window [{}, {}], need at least 5",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, c)) = pts.iter().find(|(_, c)| !(*c > 0.0 && *c <= 1.0 + 1e-12)) {
        return Err(Error::Fit(format!(
            "coherence {c} at t = {t} is outside (0, 1]"
        )));
    }
    let n = pts.len() as f64;
    let ys: Vec<f64> = pts.iter().map(|(_, c)| -c.min(1.0).ln()).collect();
    let mt = pts.iter().map(|(t, _)| t).sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all points share one time".into()));
    }
    let sxy: f64 = pts
        .iter()
        .zip(&ys)
        .map(|((t, _), y)| (t - mt) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let residual = (pts
        .iter()
        .zip(&ys)
        .map(|((t, _), y)| (y - my - slope * (t - mt)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if slope < 0.0 {
        return Err(Error::Fit(format!("negative decay rate {slope}")));
    }
    let span = pts.last().unwrap().0 - pts[0].0;
    let drop = slope * span;
    let relative_residual = if drop > 0.0 {
        residual / drop
    } else if residual == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(RateResult {
        rate: slope,
        scaled_rate: slope * params.rate_scale(),
        window,
        n_points: pts.len(),
        residual,
        relative_residual,
    })
}
