//! Real scalar abstraction shared by the `f64` fast path and an extended
//! precision path.
//!
//! Deep in the asymptotic regime the per-step relative coherence loss is of
//! order 1e-20, far below `f64` resolution. The few closed-form quantities
//! that need it (the ergodic decay rate in particular) are evaluated over
//! [`Wide`], a 192-bit binary float, and only the final result is rounded
//! back to `f64`.

use std::cell::RefCell;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use astro_float::{BigFloat, Consts, RoundingMode};
use num_complex::Complex;
use num_traits::{Num, One, Zero};

/// Minimal real-number interface needed by the closed-form propagators.
pub trait Real:
    Num + Clone + PartialOrd + Neg<Output = Self> + fmt::Debug + Send + Sync + 'static
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sinh(&self) -> Self;
    fn cosh(&self) -> Self;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn hypot(&self, other: &Self) -> Self {
        (self.clone() * self.clone() + other.clone() * other.clone()).sqrt()
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sinh(&self) -> Self {
        f64::sinh(*self)
    }
    fn cosh(&self) -> Self {
        f64::cosh(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn hypot(&self, other: &Self) -> Self {
        f64::hypot(*self, *other)
    }
}

const WIDE_BITS: usize = 192;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// 192-bit binary floating point (about 57 significant decimal digits).
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Wide(BigFloat);

impl Wide {
    fn lift(x: BigFloat) -> Self {
        Wide(x)
    }
}

impl fmt::Debug for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

macro_rules! wide_binop {
    ($tr:ident, $method:ident, $call:ident) => {
        impl $tr for Wide {
            type Output = Wide;
            fn $method(self, rhs: Wide) -> Wide {
                Wide::lift(self.0.$call(&rhs.0, WIDE_BITS, RM))
            }
        }
    };
}

wide_binop!(Add, add, add);
wide_binop!(Sub, sub, sub);
wide_binop!(Mul, mul, mul);
wide_binop!(Div, div, div);

impl Rem for Wide {
    type Output = Wide;
    fn rem(self, rhs: Wide) -> Wide {
        Wide::lift(self.0.rem(&rhs.0))
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide::lift(self.0.neg())
    }
}

impl Zero for Wide {
    fn zero() -> Self {
        Wide::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Wide {
    fn one() -> Self {
        Wide::from_f64(1.0)
    }
}

impl Num for Wide {
    type FromStrRadixErr = String;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, String> {
        if radix != 10 {
            return Err(format!("unsupported radix {radix}"));
        }
        let v = with_consts(|cc| BigFloat::parse(s, astro_float::Radix::Dec, WIDE_BITS, RM, cc));
        if v.is_nan() {
            Err(format!("cannot parse {s:?}"))
        } else {
            Ok(Wide(v))
        }
    }
}

impl Real for Wide {
    fn from_f64(x: f64) -> Self {
        Wide(BigFloat::from_f64(x, WIDE_BITS))
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        if self.0.is_zero() {
            return 0.0;
        }
        self.0.to_string().parse::<f64>().unwrap_or(f64::NAN)
    }

    fn sqrt(&self) -> Self {
        Wide(self.0.sqrt(WIDE_BITS, RM))
    }

    fn exp(&self) -> Self {
        Wide(with_consts(|cc| self.0.exp(WIDE_BITS, RM, cc)))
    }

    fn sin(&self) -> Self {
        Wide(with_consts(|cc| self.0.sin(WIDE_BITS, RM, cc)))
    }

    fn cos(&self) -> Self {
        Wide(with_consts(|cc| self.0.cos(WIDE_BITS, RM, cc)))
    }

    fn sinh(&self) -> Self {
        Wide(with_consts(|cc| self.0.sinh(WIDE_BITS, RM, cc)))
    }

    fn cosh(&self) -> Self {
        Wide(with_consts(|cc| self.0.cosh(WIDE_BITS, RM, cc)))
    }

    fn abs(&self) -> Self {
        Wide(self.0.abs())
    }
}

/// Modulus of a complex number.
pub fn cabs<T: Real>(z: &Complex<T>) -> T {
    z.re.hypot(&z.im)
}

/// `e^z`.
pub fn cexp<T: Real>(z: &Complex<T>) -> Complex<T> {
    let r = z.re.exp();
    Complex::new(r.clone() * z.im.cos(), r * z.im.sin())
}

/// `e^{i phi}` for real `phi`.
pub fn cis<T: Real>(phi: &T) -> Complex<T> {
    Complex::new(phi.cos(), phi.sin())
}

/// Principal square root (non-negative real part).
pub fn csqrt<T: Real>(z: &Complex<T>) -> Complex<T> {
    let zero = T::zero();
    if z.re.is_zero() && z.im.is_zero() {
        return Complex::new(zero.clone(), zero);
    }
    let m = cabs(z);
    let half = T::half();
    if z.re >= zero {
        let re = (half * (m + z.re.clone())).sqrt();
        let im = z.im.clone() / (T::from_f64(2.0) * re.clone());
        Complex::new(re, im)
    } else {
        let mut im = (half * (m - z.re.clone())).sqrt();
        if z.im < zero {
            im = -im;
        }
        let re = z.im.clone() / (T::from_f64(2.0) * im.clone());
        Complex::new(re, im)
    }
}

/// `cosh z`.
pub fn ccosh<T: Real>(z: &Complex<T>) -> Complex<T> {
    Complex::new(z.re.cosh() * z.im.cos(), z.re.sinh() * z.im.sin())
}

/// `sinh z`.
pub fn csinh<T: Real>(z: &Complex<T>) -> Complex<T> {
    Complex::new(z.re.sinh() * z.im.cos(), z.re.cosh() * z.im.sin())
}

/// Lift an `f64` complex number.
pub fn lift<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::from_f64(z.re), T::from_f64(z.im))
}

/// Round a complex number back to `f64`.
pub fn lower<T: Real>(z: &Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}
