//! Bayesian estimation core: measurement likelihood, the complex transfer
//! maps `F(θ, τ, y)`, sufficient statistics and the final control phase.
//!
//! Expanding the likelihood as
//! `½ + ((1-2y)/4)(e^{iθ}e^{-iKx} + e^{-iθ}e^{iKx})` and averaging
//! `℘(y|θ,x) e^{iκx} 1{z_τ = z'}` over paths gives
//!
//! ```text
//! F(θ,τ,y) = ½ M(κ;τ) + ((1-2y)/4) [e^{iθ} M(κ-K;τ) + e^{-iθ} M(κ+K;τ)]
//! ```
//!
//! with `M(k;τ)` the characteristic matrix. Both outcomes sum to `M(κ;τ)`.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{AVector, Mat2};
use crate::rtp::{char_matrix_in, CharMatrix, NoiseParams};
use crate::scalar::{cabs, cis, Real};

/// Transfer map of one wait-and-measure step.
pub type BayesMap<T = f64> = Mat2<T>;

/// Projective SQ measurement outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// `y = 0`, the null result when measuring along the most likely state.
    Null,
    /// `y = 1`.
    Click,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Null, Outcome::Click];

    pub fn bit(self) -> u8 {
        match self {
            Outcome::Null => 0,
            Outcome::Click => 1,
        }
    }

    pub fn from_bit(y: u8) -> Result<Self> {
        match y {
            0 => Ok(Outcome::Null),
            1 => Ok(Outcome::Click),
            _ => Err(invalid("y", format!("outcome must be 0 or 1, got {y}"))),
        }
    }

    /// `1 - 2y`.
    fn parity(self) -> f64 {
        match self {
            Outcome::Null => 1.0,
            Outcome::Click => -1.0,
        }
    }
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Measurement angle and waiting time of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub theta: f64,
    pub tau: f64,
}

impl MeasurementSetting {
    pub fn new(theta: f64, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("tau", format!("must be > 0, got {tau}")));
        }
        if !theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        Ok(Self {
            theta: wrap_angle(theta),
            tau,
        })
    }
}

/// `℘(y|θ, x) = |y - cos²[(θ - Kx)/2]|`.
pub fn likelihood(y: Outcome, theta: f64, x: f64, big_k: f64) -> f64 {
    let c = (0.5 * (theta - big_k * x)).cos();
    let c2 = c * c;
    match y {
        Outcome::Null => c2,
        Outcome::Click => 1.0 - c2,
    }
}

/// The three characteristic matrices `M(κ)`, `M(κ-K)`, `M(κ+K)` at one `τ`.
#[derive(Clone, Debug)]
pub struct StepPropagators<T = f64> {
    pub free: CharMatrix<T>,
    pub minus: CharMatrix<T>,
    pub plus: CharMatrix<T>,
}

impl<T: Real> StepPropagators<T> {
    pub fn new(tau: &T, params: &NoiseParams) -> Self {
        Self::with_kappa(&T::from_f64(params.kappa), tau, params)
    }

    /// Propagators for an arbitrary data coupling (`κ = 0` gives probabilities).
    pub fn with_kappa(kappa: &T, tau: &T, params: &NoiseParams) -> Self {
        let big_k = T::from_f64(params.big_k);
        Self {
            free: char_matrix_in(kappa, tau, params),
            minus: char_matrix_in(&(kappa.clone() - big_k.clone()), tau, params),
            plus: char_matrix_in(&(kappa.clone() + big_k), tau, params),
        }
    }

    /// `F(θ, τ, y)` assembled from the cached propagators.
    pub fn map(&self, theta: &T, y: Outcome) -> BayesMap<T> {
        let half = Complex::new(T::half(), T::zero());
        let quarter = Complex::new(T::from_f64(0.25 * y.parity()), T::zero());
        let e = cis(theta);
        let rot = self.minus.scale(&e) + self.plus.scale(&e.conj());
        self.free.scale(&half) + rot.scale(&quarter)
    }
}

/// `F(θ, τ, y)` in precision `T`.
pub fn bayes_map_in<T: Real>(theta: &T, tau: &T, y: Outcome, params: &NoiseParams) -> BayesMap<T> {
    StepPropagators::new(tau, params).map(theta, y)
}

/// `F(θ, τ, y)` for a validated setting.
pub fn bayes_map(setting: &MeasurementSetting, y: Outcome, params: &NoiseParams) -> BayesMap {
    bayes_map_in(&setting.theta, &setting.tau, y, params)
}

/// `F · a`.
pub fn apply<T: Real>(map: &BayesMap<T>, a: &AVector<T>) -> AVector<T> {
    map.apply(a)
}

/// Measurement-free segment: `a ← M(κ; τ) a`.
pub fn free_evolve(a: &AVector, tau: f64, params: &NoiseParams) -> Result<AVector> {
    let m = crate::rtp::char_matrix(params.kappa, tau, params)?;
    Ok(m.apply(a))
}

/// Sufficient statistics `(α, ζ)` of an A-vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    /// `(K/κ) arg(A⁺/A⁻)` on the principal branch; `None` when either
    /// component vanishes.
    pub alpha: Option<f64>,
    /// `(|A⁺| - |A⁻|) / (|A⁺| + |A⁻|)`.
    pub zeta: f64,
}

impl SufficientStats {
    /// `α`, falling back to 0 where it is undefined.
    pub fn alpha_or_zero(&self) -> f64 {
        self.alpha.unwrap_or(0.0)
    }

    /// `s = sign(ζ)` with `sign(0) = +1`.
    pub fn sign(&self) -> f64 {
        if self.zeta < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

pub fn stats(a: &AVector, params: &NoiseParams) -> Result<SufficientStats> {
    let mp = a.a_plus.norm();
    let mm = a.a_minus.norm();
    if mp + mm == 0.0 {
        return Err(Error::DegenerateState("both components are zero"));
    }
    let zeta = (mp - mm) / (mp + mm);
    let alpha = if mp > 0.0 && mm > 0.0 {
        Some(params.big_k / params.kappa * (a.a_plus / a.a_minus).arg())
    } else {
        None
    };
    Ok(SufficientStats { alpha, zeta })
}

/// Optimal final control phase and the record-weighted coherence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlOutcome {
    /// `arg(1ᵀ a)`; `None` when `1ᵀ a = 0`.
    pub phase: Option<f64>,
    /// `|1ᵀ a| = ℘(Y) |𝒜_{|Y}|`.
    pub coherence: f64,
}

pub fn control_and_coherence(a: &AVector) -> ControlOutcome {
    let total = a.total();
    let coherence = total.norm();
    ControlOutcome {
        phase: (coherence > 0.0).then(|| total.arg()),
        coherence,
    }
}

/// `Σ_y |1ᵀ F(θ,τ,y) a|` in precision `T`.
pub fn measured_coherence<T: Real>(props: &StepPropagators<T>, theta: &T, a: &AVector<T>) -> T {
    Outcome::BOTH
        .iter()
        .map(|&y| cabs(&props.map(theta, y).apply(a).total()))
        .fold(T::zero(), |s, v| s + v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtp::{char_matrix, stationary_vector};

    fn reference() -> NoiseParams {
        NoiseParams::default()
    }

    #[test]
    fn likelihood_examples() {
        let k = 20.0;
        let x = 0.03;
        assert!((likelihood(Outcome::Null, k * x, x, k) - 1.0).abs() < 1e-15);
        assert!(likelihood(Outcome::Click, k * x, x, k).abs() < 1e-15);
        assert!((likelihood(Outcome::Null, k * x + PI / 2.0, x, k) - 0.5).abs() < 1e-15);
        for th in [-3.0, -1.0, 0.2, 2.9] {
            let s = likelihood(Outcome::Null, th, x, k) + likelihood(Outcome::Click, th, x, k);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn outcome_bits() {
        assert_eq!(Outcome::from_bit(0).unwrap(), Outcome::Null);
        assert_eq!(Outcome::from_bit(1).unwrap().bit(), 1);
        assert!(Outcome::from_bit(2).is_err());
    }

    #[test]
    fn setting_wraps_and_validates() {
        let s = MeasurementSetting::new(3.0 * PI / 2.0, 0.1).unwrap();
        assert!((s.theta + PI / 2.0).abs() < 1e-12);
        assert_eq!(MeasurementSetting::new(-PI, 0.1).unwrap().theta, PI);
        assert!(MeasurementSetting::new(1.0, 0.0).is_err());
    }

    #[test]
    fn completeness() {
        let p = NoiseParams::new(1.7, 0.6, 0.3, 12.0).unwrap();
        let s = MeasurementSetting::new(0.9, 0.11).unwrap();
        let sum = bayes_map(&s, Outcome::Null, &p) + bayes_map(&s, Outcome::Click, &p);
        let m = char_matrix(p.kappa, s.tau, &p).unwrap();
        assert!(sum.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn probability_conservation_at_zero_kappa() {
        let p = NoiseParams::new(1.7, 0.6, 1e-300, 12.0).unwrap();
        let props = StepPropagators::with_kappa(&0.0, &0.2, &p);
        let prob = AVector::from_real(0.3, 0.7);
        let tot: f64 = Outcome::BOTH
            .iter()
            .map(|&y| props.map(&1.1, y).apply(&prob).total().re)
            .sum();
        assert!((tot - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_map_leaves_vector() {
        let a = AVector::new(Complex::new(0.2, 0.1), Complex::new(0.3, -0.4));
        assert_eq!(apply(&Mat2::identity(), &a), a);
    }

    #[test]
    fn free_evolve_is_outcome_sum() {
        let p = reference();
        let a = AVector::new(Complex::new(0.4, 0.05), Complex::new(0.5, -0.02));
        let s = MeasurementSetting::new(-1.2, 0.07).unwrap();
        let free = free_evolve(&a, s.tau, &p).unwrap();
        let sum = apply(&bayes_map(&s, Outcome::Null, &p), &a)
            + apply(&bayes_map(&s, Outcome::Click, &p), &a);
        assert!((free - sum).norm1() < 1e-13);
        assert_eq!(free_evolve(&a, 0.0, &p).unwrap(), a);
    }

    #[test]
    fn stats_examples() {
        let p = reference();
        let s = stats(&stationary_vector(&p), &p).unwrap();
        assert_eq!(s.zeta, 0.0);
        assert_eq!(s.alpha, Some(0.0));

        let s = stats(
            &AVector::new(Complex::new(0.3, 0.1), Complex::new(0.0, 0.0)),
            &p,
        )
        .unwrap();
        assert_eq!(s.zeta, 1.0);
        assert_eq!(s.alpha, None);
        assert_eq!(s.alpha_or_zero(), 0.0);

        let phase = Complex::from_polar(0.5, p.kappa / p.big_k);
        let s = stats(&AVector::new(phase, Complex::new(0.5, 0.0)), &p).unwrap();
        assert!((s.alpha.unwrap() - 1.0).abs() < 1e-12);
        assert!(s.zeta.abs() < 1e-15);

        assert!(stats(&AVector::from_real(0.0, 0.0), &p).is_err());
    }

    #[test]
    fn control_examples() {
        let c = control_and_coherence(&AVector::from_real(0.5, 0.5));
        assert_eq!(c.phase, Some(0.0));
        assert_eq!(c.coherence, 1.0);
        let c = control_and_coherence(&AVector::new(
            Complex::new(0.0, 0.5),
            Complex::new(0.0, 0.0),
        ));
        assert!((c.phase.unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((c.coherence - 0.5).abs() < 1e-15);
        let p = NoiseParams::new(3.0, 0.4, 0.2, 20.0).unwrap();
        let c = control_and_coherence(&stationary_vector(&p));
        assert!((c.coherence - 1.0).abs() < 1e-15);
        let c = control_and_coherence(&AVector::new(
            Complex::new(0.5, 0.0),
            Complex::new(-0.5, 0.0),
        ));
        assert_eq!(c.phase, None);
        assert_eq!(c.coherence, 0.0);
    }

    #[test]
    fn measurement_never_hurts() {
        let p = reference();
        let a = AVector::new(Complex::new(0.45, 0.02), Complex::new(0.35, -0.03));
        for (theta, tau) in [(1.5, 0.075), (-0.4, 0.2), (3.0, 0.01)] {
            let props = StepPropagators::new(&tau, &p);
            let measured = measured_coherence(&props, &theta, &a);
            let free = props.free.apply(&a).total().norm();
            assert!(measured >= free - 1e-15);
        }
    }
}
