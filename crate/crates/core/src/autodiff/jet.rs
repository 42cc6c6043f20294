//! Second-order forward mode along two independent input directions at once.
//!
//! A `SpacetimeJet` carries a value plus first and second derivatives along a
//! space direction and a time direction. One evaluation of a field u(x, t)
//! with both inputs seeded therefore yields u, u_x, u_xx, u_t, u_tt, which is
//! everything the heat and wave residuals need. Mixed derivatives are never
//! tracked; neither residual uses them.

use super::scalar::Scalar;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Slots hold full derivatives (not Taylor coefficients): `dxx` is d2/dx2 of
/// the quantity along the seeded space direction, likewise `dtt` in time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacetimeJet {
    pub v: f64,
    pub dx: f64,
    pub dxx: f64,
    pub dt: f64,
    pub dtt: f64,
}

impl SpacetimeJet {
    pub fn constant(v: f64) -> Self {
        SpacetimeJet {
            v,
            dx: 0.0,
            dxx: 0.0,
            dt: 0.0,
            dtt: 0.0,
        }
    }

    /// Seed for the space coordinate: dx = 1, all other slots zero.
    pub fn space_seeded(x: f64) -> Self {
        SpacetimeJet {
            v: x,
            dx: 1.0,
            dxx: 0.0,
            dt: 0.0,
            dtt: 0.0,
        }
    }

    /// Seed for the time coordinate: dt = 1, all other slots zero.
    pub fn time_seeded(t: f64) -> Self {
        SpacetimeJet {
            v: t,
            dx: 0.0,
            dxx: 0.0,
            dt: 1.0,
            dtt: 0.0,
        }
    }

    /// Chain rule for a smooth unary primitive with derivatives `fp`, `fpp`
    /// at the primal point.
    #[inline]
    fn unary(self, v: f64, fp: f64, fpp: f64) -> Self {
        SpacetimeJet {
            v,
            dx: fp * self.dx,
            dxx: fp * self.dxx + fpp * self.dx * self.dx,
            dt: fp * self.dt,
            dtt: fp * self.dtt + fpp * self.dt * self.dt,
        }
    }
}

impl Add for SpacetimeJet {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        SpacetimeJet {
            v: self.v + r.v,
            dx: self.dx + r.dx,
            dxx: self.dxx + r.dxx,
            dt: self.dt + r.dt,
            dtt: self.dtt + r.dtt,
        }
    }
}

impl Sub for SpacetimeJet {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        SpacetimeJet {
            v: self.v - r.v,
            dx: self.dx - r.dx,
            dxx: self.dxx - r.dxx,
            dt: self.dt - r.dt,
            dtt: self.dtt - r.dtt,
        }
    }
}

impl Mul for SpacetimeJet {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        SpacetimeJet {
            v: self.v * r.v,
            dx: self.dx * r.v + self.v * r.dx,
            dxx: self.dxx * r.v + 2.0 * self.dx * r.dx + self.v * r.dxx,
            dt: self.dt * r.v + self.v * r.dt,
            dtt: self.dtt * r.v + 2.0 * self.dt * r.dt + self.v * r.dtt,
        }
    }
}

impl Div for SpacetimeJet {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        // From a = q*b: solve each slot of q in turn.
        let v = self.v / r.v;
        let dx = (self.dx - v * r.dx) / r.v;
        let dt = (self.dt - v * r.dt) / r.v;
        SpacetimeJet {
            v,
            dx,
            dxx: (self.dxx - 2.0 * dx * r.dx - v * r.dxx) / r.v,
            dt,
            dtt: (self.dtt - 2.0 * dt * r.dt - v * r.dtt) / r.v,
        }
    }
}

impl Neg for SpacetimeJet {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        SpacetimeJet {
            v: -self.v,
            dx: -self.dx,
            dxx: -self.dxx,
            dt: -self.dt,
            dtt: -self.dtt,
        }
    }
}

impl Scalar for SpacetimeJet {
    fn zero() -> Self {
        Self::constant(0.0)
    }
    fn one() -> Self {
        Self::constant(1.0)
    }
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }

    fn exp(self) -> Self {
        let e = self.v.exp();
        self.unary(e, e, e)
    }

    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.unary(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.unary(c, -s, -c)
    }

    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let sech2 = 1.0 - t * t;
        self.unary(t, sech2, -2.0 * t * sech2)
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        let fp = f64::from(n) * self.v.powi(n - 1);
        // n = 1 short-circuits so 0^-1 never multiplies the zero coefficient.
        let fpp = if n == 1 {
            0.0
        } else {
            f64::from(n) * f64::from(n - 1) * self.v.powi(n - 2)
        };
        self.unary(self.v.powi(n), fp, fpp)
    }

    fn max(self, other: Self) -> Self {
        if other.v > self.v {
            other
        } else {
            self
        }
    }

    fn relu(self) -> Self {
        if self.v > 0.0 {
            self
        } else {
            Self::zero()
        }
    }

    fn is_zero(&self) -> bool {
        self.v == 0.0 && self.dx == 0.0 && self.dxx == 0.0 && self.dt == 0.0 && self.dtt == 0.0
    }
}
