#![allow(dead_code)]

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spectator::bayes::{bayes_map, Outcome};
use spectator::control::next_setting;
use spectator::engine::Schedule;
use spectator::linalg::{AVector, Mat2};
use spectator::rtp::{char_matrix, sample_trajectory, stationary_vector, InitialSign, NoiseParams};

/// Sample mean and standard error of a complex quantity, per component.
#[derive(Clone, Copy, Debug, Default)]
pub struct Estimate {
    pub mean: Complex64,
    pub se_re: f64,
    pub se_im: f64,
}

impl Estimate {
    /// Both components within `k` standard errors of `exact`.
    pub fn agrees(&self, exact: Complex64, k: f64) -> bool {
        let d = self.mean - exact;
        d.re.abs() <= k * self.se_re.max(1e-15) && d.im.abs() <= k * self.se_im.max(1e-15)
    }
}

#[derive(Default)]
pub struct Acc {
    n: usize,
    sum: Complex64,
    sq_re: f64,
    sq_im: f64,
}

impl Acc {
    pub fn push(&mut self, v: Complex64) {
        self.n += 1;
        self.sum += v;
        self.sq_re += v.re * v.re;
        self.sq_im += v.im * v.im;
    }

    pub fn finish(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = |sq: f64, m: f64| ((sq / n - m * m) * n / (n - 1.0)).max(0.0);
        Estimate {
            mean,
            se_re: (var(self.sq_re, mean.re) / n).sqrt(),
            se_im: (var(self.sq_im, mean.im) / n).sqrt(),
        }
    }
}

/// Monte Carlo estimate of `E[w(x) 1{z_τ = z'} | z_0 = z]` for every
/// `(z', z)`, with `x = ∫₀^τ z dt`; index 0 is `+1`.
pub fn trajectory_matrix(
    params: &NoiseParams,
    tau: f64,
    n: usize,
    seed: u64,
    w: impl Fn(f64) -> Complex64,
) -> [[Estimate; 2]; 2] {
    let mut out = [[Estimate::default(); 2]; 2];
    for (col, start) in [InitialSign::Plus, InitialSign::Minus]
        .into_iter()
        .enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + col as u64);
        let mut acc = [Acc::default(), Acc::default()];
        for _ in 0..n {
            let path = sample_trajectory(params, start, tau, &mut rng).unwrap();
            let x = path.integrate(0.0, tau).unwrap();
            let end = usize::from(path.sign_at(tau) < 0);
            let v = w(x);
            acc[end].push(v);
            acc[1 - end].push(Complex64::new(0.0, 0.0));
        }
        for row in 0..2 {
            out[row][col] = acc[row].finish();
        }
    }
    out
}

pub fn assert_matrix_agrees(est: &[[Estimate; 2]; 2], exact: &Mat2, k: f64, what: &str) {
    for r in 0..2 {
        for c in 0..2 {
            let e = &est[r][c];
            let x = *exact.get(r, c);
            assert!(
                e.agrees(x, k),
                "{what} entry ({r},{c}): exact {x}, estimate {} ± ({:.2e}, {:.2e})",
                e.mean,
                e.se_re,
                e.se_im
            );
        }
    }
}

/// Straightforward recursive enumeration of every record, used as an
/// oracle for the exact tree under the truncate end rule.
pub fn brute_force_tree(schedule: &Schedule, grid: &[f64]) -> Vec<f64> {
    let eps = 1e-9 * schedule.horizon.max(1.0);
    let mut out = vec![0.0; grid.len()];
    fn rec(s: &Schedule, a: AVector, t: f64, eps: f64, grid: &[f64], out: &mut [f64]) {
        let p = &s.params;
        let setting = next_setting(&s.strategy, &a, p).unwrap();
        let next_t = setting.map(|st| t + st.tau);
        let measures = next_t.is_some_and(|nt| nt <= s.horizon + eps);
        for (i, &g) in grid.iter().enumerate() {
            let in_span = g >= t - eps && (!measures || g < next_t.unwrap() - eps);
            if in_span {
                let m = char_matrix(p.kappa, (g - t).max(0.0), p).unwrap();
                out[i] += m.apply(&a).total().norm();
            }
        }
        if measures {
            let st = setting.unwrap();
            for y in Outcome::BOTH {
                let b = bayes_map(&st, y, p).apply(&a);
                rec(s, b, next_t.unwrap(), eps, grid, out);
            }
        }
    }
    rec(
        schedule,
        stationary_vector(&schedule.params),
        0.0,
        eps,
        grid,
        &mut out,
    );
    out
}
