//! First-order forward mode. `Dual<f64>` carries one directional derivative;
//! nesting as `Dual<Dual<f64>>` composes forward mode over itself and yields
//! exact second derivatives without materializing a Hessian.

use super::scalar::Scalar;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A number together with one derivative slot, generic so it can nest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T: Scalar> {
    pub re: T,
    pub du: T,
}

impl<T: Scalar> Dual<T> {
    /// Lift a value with a zero derivative slot.
    pub fn constant(re: T) -> Self {
        Dual { re, du: T::zero() }
    }

    /// Lift a value whose derivative slot is seeded to one, i.e. the
    /// variable we are differentiating with respect to.
    pub fn seeded(re: T) -> Self {
        Dual { re, du: T::one() }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual {
            re: self.re + rhs.re,
            du: self.du + rhs.du,
        }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual {
            re: self.re - rhs.re,
            du: self.du - rhs.du,
        }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual {
            re: self.re * rhs.re,
            du: self.du * rhs.re + self.re * rhs.du,
        }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.re / rhs.re;
        Dual {
            re: q,
            du: (self.du - q * rhs.du) / rhs.re,
        }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            du: -self.du,
        }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn zero() -> Self {
        Dual::constant(T::zero())
    }
    fn one() -> Self {
        Dual::constant(T::one())
    }
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }
    fn value(&self) -> f64 {
        self.re.value()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            du: self.du * e,
        }
    }

    fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            du: self.du * self.re.cos(),
        }
    }

    fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            du: -(self.du * self.re.sin()),
        }
    }

    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual {
            re: t,
            du: self.du * (T::one() - t * t),
        }
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        Dual {
            re: self.re.powi(n),
            du: self.du * T::from_f64(n as f64) * self.re.powi(n - 1),
        }
    }

    fn max(self, other: Self) -> Self {
        // Branch on primal values only; the chosen side carries its slot.
        if other.value() > self.value() {
            other
        } else {
            self
        }
    }

    fn relu(self) -> Self {
        if self.value() > 0.0 {
            self
        } else {
            Self::zero()
        }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.du.is_zero()
    }
}

/// Value and first derivative of `f` at `x`.
pub fn derivative<F>(f: F, x: f64) -> (f64, f64)
where
    F: Fn(Dual<f64>) -> Dual<f64>,
{
    let y = f(Dual::seeded(x));
    (y.re, y.du)
}

/// Value, first, and second derivative of `f` at `x` via one nesting level.
///
/// The input is seeded so the inner slot tracks d/dx and the outer slot tracks
/// d/dx again; the outer-inner slot of the result is then exactly d2f/dx2.
pub fn second_derivative<F>(f: F, x: f64) -> (f64, f64, f64)
where
    F: Fn(Dual<Dual<f64>>) -> Dual<Dual<f64>>,
{
    let seed = Dual {
        re: Dual::seeded(x),
        du: Dual::constant(1.0),
    };
    let y = f(seed);
    (y.re.re, y.re.du, y.du.du)
}
