//! The scalar algebra every differentiation mode is generic over.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Closed arithmetic type shared by plain numbers, forward-mode duals, and
/// second-order jets. All primitives follow IEEE semantics: a zero denominator
/// propagates infinities or NaNs through the derivative slots, never a panic.
///
/// The supported primitive set is add, sub, mul, div, neg, max, exp, sin, cos,
/// powi, plus relu and tanh as convenience activations (tanh is native rather
/// than composed from exp so its derivatives saturate cleanly at large inputs).
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Lift a plain number; all derivative slots are zero.
    fn from_f64(v: f64) -> Self;
    /// Primal component, stripped of every derivative slot.
    fn value(&self) -> f64;

    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    /// Integer power. Negative exponents follow IEEE at zero.
    fn powi(self, n: i32) -> Self;

    /// Picks the operand with the larger primal value; ties keep `self`.
    /// With a NaN primal on either side, `self` is kept (comparison is false).
    fn max(self, other: Self) -> Self;
    /// max(0, x) with derivative 0 at the origin, i.e. the tie goes to the
    /// zero branch. Matches the convention relu(x) = max(0, x) with max
    /// keeping its first argument on ties.
    fn relu(self) -> Self;

    /// Exact structural zero test, used to skip dead adjoints in reverse sweeps.
    fn is_zero(&self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    #[inline]
    fn relu(self) -> Self {
        if self > 0.0 {
            self
        } else {
            0.0
        }
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}
