//! Complex 2-vectors and 2×2 matrices indexed by the telegraph sign.
//!
//! Component/row/column 0 is `z = +1`, component 1 is `z = -1`, everywhere.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::scalar::{cabs, Real};

/// Complex 2-vector `(A⁺, A⁻)`.
///
/// As a Bayesian state, component `z` holds the joint probability of the
/// record so far and `z_t = z`, times the conditional phasor average of the
/// data qubit. With `κ = 0` the same vector is a plain joint probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AVector<T = f64> {
    pub a_plus: Complex<T>,
    pub a_minus: Complex<T>,
}

impl<T: Real> AVector<T> {
    pub fn new(a_plus: Complex<T>, a_minus: Complex<T>) -> Self {
        Self { a_plus, a_minus }
    }

    pub fn from_real(plus: T, minus: T) -> Self {
        Self::new(
            Complex::new(plus, T::zero()),
            Complex::new(minus, T::zero()),
        )
    }

    /// `1ᵀ a`.
    pub fn total(&self) -> Complex<T> {
        self.a_plus.clone() + self.a_minus.clone()
    }

    /// `|A⁺| + |A⁻|`.
    pub fn norm1(&self) -> T {
        cabs(&self.a_plus) + cabs(&self.a_minus)
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        Self::new(
            self.a_plus.clone() * c.clone(),
            self.a_minus.clone() * c.clone(),
        )
    }

    pub fn scale_real(&self, c: &T) -> Self {
        Self::new(
            self.a_plus.clone() * c.clone(),
            self.a_minus.clone() * c.clone(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.a_plus.is_zero() && self.a_minus.is_zero()
    }
}

impl AVector<f64> {
    pub fn lift<T: Real>(&self) -> AVector<T> {
        AVector::new(
            crate::scalar::lift(self.a_plus),
            crate::scalar::lift(self.a_minus),
        )
    }
}

impl<T: Real> AVector<T> {
    pub fn lower(&self) -> AVector<f64> {
        AVector::new(
            crate::scalar::lower(&self.a_plus),
            crate::scalar::lower(&self.a_minus),
        )
    }
}

impl<T: Real> Add for AVector<T> {
    type Output = AVector<T>;
    fn add(self, rhs: Self) -> Self {
        AVector::new(self.a_plus + rhs.a_plus, self.a_minus + rhs.a_minus)
    }
}

impl<T: Real> Sub for AVector<T> {
    type Output = AVector<T>;
    fn sub(self, rhs: Self) -> Self {
        AVector::new(self.a_plus - rhs.a_plus, self.a_minus - rhs.a_minus)
    }
}

/// 2×2 complex matrix; entry `(row, col)` maps sign `col` at the start of an
/// interval to sign `row` at its end.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat2<T = f64> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(m00: Complex<T>, m01: Complex<T>, m10: Complex<T>, m11: Complex<T>) -> Self {
        Self {
            m: [[m00, m01], [m10, m11]],
        }
    }

    pub fn identity() -> Self {
        let z = Complex::<T>::zero();
        let o = Complex::<T>::one();
        Self::new(o.clone(), z.clone(), z, o)
    }

    pub fn get(&self, row: usize, col: usize) -> &Complex<T> {
        &self.m[row][col]
    }

    pub fn apply(&self, a: &AVector<T>) -> AVector<T> {
        let [[m00, m01], [m10, m11]] = &self.m;
        AVector::new(
            m00.clone() * a.a_plus.clone() + m01.clone() * a.a_minus.clone(),
            m10.clone() * a.a_plus.clone() + m11.clone() * a.a_minus.clone(),
        )
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        let [[a, b], [d, e]] = &self.m;
        Self::new(
            a.clone() * c.clone(),
            b.clone() * c.clone(),
            d.clone() * c.clone(),
            e.clone() * c.clone(),
        )
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0].clone() + self.m[1][1].clone()
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0].clone() * self.m[1][1].clone() - self.m[0][1].clone() * self.m[1][0].clone()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                let d = cabs(&(self.m[r][c].clone() - other.m[r][c].clone()));
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn lower(&self) -> Mat2<f64> {
        let l = crate::scalar::lower::<T>;
        Mat2::new(
            l(&self.m[0][0]),
            l(&self.m[0][1]),
            l(&self.m[1][0]),
            l(&self.m[1][1]),
        )
    }
}

impl Mat2<f64> {
    pub fn lift<T: Real>(&self) -> Mat2<T> {
        let l = crate::scalar::lift::<T>;
        Mat2::new(
            l(self.m[0][0]),
            l(self.m[0][1]),
            l(self.m[1][0]),
            l(self.m[1][1]),
        )
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Mat2<T>;
    fn add(self, rhs: Self) -> Self {
        let [[a, b], [c, d]] = self.m;
        let [[e, f], [g, h]] = rhs.m;
        Mat2::new(a + e, b + f, c + g, d + h)
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Mat2<T>;
    fn sub(self, rhs: Self) -> Self {
        let [[a, b], [c, d]] = self.m;
        let [[e, f], [g, h]] = rhs.m;
        Mat2::new(a - e, b - f, c - g, d - h)
    }
}

impl<T: Real> Mul for &Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, rhs: &Mat2<T>) -> Mat2<T> {
        let [[a, b], [c, d]] = &self.m;
        let [[e, f], [g, h]] = &rhs.m;
        Mat2::new(
            a.clone() * e.clone() + b.clone() * g.clone(),
            a.clone() * f.clone() + b.clone() * h.clone(),
            c.clone() * e.clone() + d.clone() * g.clone(),
            c.clone() * f.clone() + d.clone() * h.clone(),
        )
    }
}
