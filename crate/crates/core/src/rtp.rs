//! Random telegraph process: parameters, stationary law, exact path sampling
//! and integration, and the characteristic-matrix propagator
//! `exp[(Λ + i k Z) τ]`.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{AVector, Mat2};
use crate::scalar::{cabs, ccosh, cexp, csinh, csqrt, Real};

/// Characteristic matrix: entry `(z', z)` is `E[e^{ikx} 1{z_τ = z'} | z_0 = z]`.
pub type CharMatrix<T = f64> = Mat2<T>;

/// Below this `|Δτ|` the propagator switches to a Taylor expansion.
const SERIES_THRESHOLD: f64 = 1e-6;

/// Physical rates and couplings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    /// Flip rate from `z = -1` to `z = +1`.
    pub gamma_up: f64,
    /// Flip rate from `z = +1` to `z = -1`.
    pub gamma_down: f64,
    /// Data-qubit coupling (rad/time).
    pub kappa: f64,
    /// Spectator-qubit coupling (rad/time).
    pub big_k: f64,
}

impl Default for NoiseParams {
    /// κ = 0.2, γ↑ = γ↓ = 1, K = 20.
    fn default() -> Self {
        Self {
            gamma_up: 1.0,
            gamma_down: 1.0,
            kappa: 0.2,
            big_k: 20.0,
        }
    }
}

impl NoiseParams {
    pub fn new(gamma_up: f64, gamma_down: f64, kappa: f64, big_k: f64) -> Result<Self> {
        let p = Self {
            gamma_up,
            gamma_down,
            kappa,
            big_k,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_up", self.gamma_up),
            ("gamma_down", self.gamma_down),
            ("kappa", self.kappa),
            ("big_k", self.big_k),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Arithmetic mean rate `γ̄`.
    pub fn gamma_bar(&self) -> f64 {
        0.5 * (self.gamma_up + self.gamma_down)
    }

    /// Harmonic mean rate `γ̆`.
    pub fn gamma_breve(&self) -> f64 {
        2.0 * self.gamma_up * self.gamma_down / (self.gamma_up + self.gamma_down)
    }

    /// Rate matrix `Λ` of the master equation, acting on `(P₊, P₋)`.
    pub fn rate_matrix(&self) -> [[f64; 2]; 2] {
        [
            [-self.gamma_down, self.gamma_up],
            [self.gamma_down, -self.gamma_up],
        ]
    }

    /// Factor turning a decay rate into the dimensionless `2K²Γ/(γ̆κ²)`.
    pub fn rate_scale(&self) -> f64 {
        2.0 * self.big_k * self.big_k / (self.gamma_breve() * self.kappa * self.kappa)
    }

    /// Same parameters with a different data-qubit coupling.
    pub fn with_kappa(&self, kappa: f64) -> Self {
        Self { kappa, ..*self }
    }
}

/// Stationary probabilities `(p₊, p₋) = (γ↑, γ↓) / (2γ̄)`.
pub fn steady_state(params: &NoiseParams) -> (f64, f64) {
    let s = params.gamma_up + params.gamma_down;
    (params.gamma_up / s, params.gamma_down / s)
}

/// Stationary probabilities as the initial A-vector `A₀ = P_ss`.
pub fn stationary_vector<T: Real>(params: &NoiseParams) -> AVector<T> {
    let (p, m) = steady_state(params);
    AVector::from_real(T::from_f64(p), T::from_f64(m))
}

/// Initial sign for path sampling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialSign {
    Plus,
    Minus,
    #[default]
    Stationary,
}

/// One telegraph path on `[0, horizon]`, stored exactly as its jump times.
#[derive(Clone, Debug, PartialEq)]
pub struct RtpTrajectory {
    z0: i8,
    jumps: Vec<f64>,
    horizon: f64,
}

impl RtpTrajectory {
    pub fn new(z0: i8, jumps: Vec<f64>, horizon: f64) -> Result<Self> {
        if z0 != 1 && z0 != -1 {
            return Err(invalid("z0", format!("must be ±1, got {z0}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
        }
        if jumps.iter().any(|&s| !(0.0..=horizon).contains(&s))
            || jumps.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(invalid(
                "jumps",
                "must be strictly increasing and inside [0, horizon]",
            ));
        }
        Ok(Self { z0, jumps, horizon })
    }

    pub fn z0(&self) -> i8 {
        self.z0
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn sign_after(&self, n_jumps: usize) -> f64 {
        if n_jumps.is_multiple_of(2) {
            f64::from(self.z0)
        } else {
            -f64::from(self.z0)
        }
    }

    /// Sign at time `t`: `z0 · (-1)^{#jumps ≤ t}`.
    pub fn sign_at(&self, t: f64) -> i8 {
        let n = self.jumps.partition_point(|&s| s <= t);
        self.sign_after(n) as i8
    }

    /// Exact `∫_{t1}^{t2} z(s) ds`.
    pub fn integrate(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(0.0 <= t1 && t1 <= t2 && t2 <= self.horizon) {
            return Err(Error::InvalidInterval {
                t1,
                t2,
                horizon: self.horizon,
            });
        }
        let start = self.jumps.partition_point(|&s| s <= t1);
        let mut sign = self.sign_after(start);
        let mut cursor = t1;
        let mut x = 0.0;
        for &s in &self.jumps[start..] {
            if s >= t2 {
                break;
            }
            x += sign * (s - cursor);
            cursor = s;
            sign = -sign;
        }
        Ok(x + sign * (t2 - cursor))
    }
}

/// Sample a path by inverse-CDF exponential holding times: the process
/// leaves `+1` at rate `γ↓` and `-1` at rate `γ↑`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    params: &NoiseParams,
    start: InitialSign,
    horizon: f64,
    rng: &mut R,
) -> Result<RtpTrajectory> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
    }
    let z0: i8 = match start {
        InitialSign::Plus => 1,
        InitialSign::Minus => -1,
        InitialSign::Stationary => {
            let (p_plus, _) = steady_state(params);
            if rng.random::<f64>() < p_plus {
                1
            } else {
                -1
            }
        }
    };
    let mut jumps = Vec::new();
    let mut z = z0;
    let mut t = 0.0;
    loop {
        let rate = if z > 0 {
            params.gamma_down
        } else {
            params.gamma_up
        };
        // 1 - U lies in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        t += -u.ln() / rate;
        if t > horizon {
            break;
        }
        jumps.push(t);
        z = -z;
    }
    RtpTrajectory::new(z0, jumps, horizon)
}

/// `exp[(Λ + i k Z) τ]` in closed form, evaluated in precision `T`.
///
/// With `B = Λ + ikZ + γ̄·1` (traceless, `B² = Δ²·1`) the exponential is
/// `e^{-γ̄τ}[cosh(Δτ)·1 + sinh(Δτ)/Δ · B]`, where
/// `Δ² = γ̄² - k² + ik(γ↑ - γ↓)`.
pub fn char_matrix_in<T: Real>(k: &T, tau: &T, params: &NoiseParams) -> CharMatrix<T> {
    let gu = T::from_f64(params.gamma_up);
    let gd = T::from_f64(params.gamma_down);
    let half = T::half();
    let gbar = half.clone() * (gu.clone() + gd.clone());
    let zero = T::zero();

    let diag = half * (gu.clone() - gd.clone());
    let b00 = Complex::new(diag.clone(), k.clone());
    let b11 = Complex::new(-diag, -k.clone());
    let b01 = Complex::new(gu.clone(), zero.clone());
    let b10 = Complex::new(gd.clone(), zero.clone());

    let delta_sq = Complex::new(
        gbar.clone() * gbar.clone() - k.clone() * k.clone(),
        k.clone() * (gu - gd),
    );
    let delta = csqrt(&delta_sq);
    let x = delta.clone() * tau.clone();
    let tau_c = Complex::new(tau.clone(), zero.clone());

    let (c, s) = if cabs(&x) < T::from_f64(SERIES_THRESHOLD) {
        let x2 = x.clone() * x.clone();
        let x4 = x2.clone() * x2.clone();
        let one = Complex::new(T::one(), zero.clone());
        let c = one.clone()
            + x2.clone() * T::from_f64(0.5)
            + x4.clone() / Complex::new(T::from_f64(24.0), zero.clone());
        let s = tau_c
            * (one
                + x2 / Complex::new(T::from_f64(6.0), zero.clone())
                + x4 / Complex::new(T::from_f64(120.0), zero.clone()));
        let decay = (-(gbar * tau.clone())).exp();
        (c * decay.clone(), s * decay)
    } else if x.re > T::from_f64(30.0) {
        // cosh/sinh would overflow long before e^{-γ̄τ} underflows
        let g = Complex::new(gbar, zero.clone()) * tau_c;
        let e1 = cexp(&(x.clone() - g.clone()));
        let e2 = cexp(&(-x - g));
        let two = T::from_f64(2.0);
        (
            (e1.clone() + e2.clone()) / Complex::new(two.clone(), zero.clone()),
            (e1 - e2) / (delta * two),
        )
    } else {
        let decay = (-(gbar * tau.clone())).exp();
        (ccosh(&x) * decay.clone(), csinh(&x) / delta * decay)
    };

    Mat2::new(
        c.clone() + s.clone() * b00,
        s.clone() * b01,
        s.clone() * b10,
        c + s * b11,
    )
}

/// `f64` characteristic matrix; rejects negative `tau`.
pub fn char_matrix(k: f64, tau: f64, params: &NoiseParams) -> Result<CharMatrix> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(invalid(
            "tau",
            format!("must be finite and >= 0, got {tau}"),
        ));
    }
    if !k.is_finite() {
        return Err(invalid("k", "must be finite"));
    }
    Ok(char_matrix_in(&k, &tau, params))
}
