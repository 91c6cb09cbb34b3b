//! Scalar types for forward-mode differentiation.
//!
//! [`Dual`] carries one infinitesimal direction and yields exact first
//! derivatives. [`HyperDual`] carries two nilpotent directions `e1`, `e2`
//! with `e1 * e2 != 0`, so a single evaluation yields both first partials
//! and the mixed second partial along the chosen pair of seeds.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the expression evaluator.
///
/// Every elementary function is routed through [`Scalar::chain`], which
/// applies a univariate function given its value and first two derivatives
/// at the real part.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn constant(value: f64) -> Self;

    fn re(&self) -> f64;

    /// `f(self)` where `f(re) = f0`, `f'(re) = f1`, `f''(re) = f2`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self;

    /// True when all infinitesimal parts are zero.
    fn is_real(&self) -> bool;

    /// All components finite.
    fn is_finite(&self) -> bool;

    fn scale(self, k: f64) -> Self {
        self * Self::constant(k)
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(value: f64) -> Self {
        value
    }
    #[inline]
    fn re(&self) -> f64 {
        *self
    }
    #[inline]
    fn chain(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    #[inline]
    fn is_real(&self) -> bool {
        true
    }
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

/// First-order dual number `re + eps * ε`, `ε² = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    /// A variable seeded with unit derivative.
    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Self::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let re = self.re * inv;
        Self::new(re, (self.eps - re * rhs.eps) * inv)
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.eps)
    }
}

impl Scalar for Dual {
    #[inline]
    fn constant(value: f64) -> Self {
        Self::new(value, 0.0)
    }
    #[inline]
    fn re(&self) -> f64 {
        self.re
    }
    #[inline]
    fn chain(self, f0: f64, f1: f64, _f2: f64) -> Self {
        Self::new(f0, f1 * self.eps)
    }
    #[inline]
    fn is_real(&self) -> bool {
        self.eps == 0.0
    }
    #[inline]
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.eps.is_finite()
    }
}

/// Hyper-dual number `re + e1 ε₁ + e2 ε₂ + e12 ε₁ε₂` with `ε₁² = ε₂² = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HyperDual {
    pub re: f64,
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
}

impl HyperDual {
    pub const fn new(re: f64, e1: f64, e2: f64, e12: f64) -> Self {
        Self { re, e1, e2, e12 }
    }

    pub const fn real(re: f64) -> Self {
        Self::new(re, 0.0, 0.0, 0.0)
    }

    /// Seed for a variable: `d1`/`d2` select which directions it moves along.
    pub fn seeded(re: f64, d1: bool, d2: bool) -> Self {
        Self::new(re, f64::from(u8::from(d1)), f64::from(u8::from(d2)), 0.0)
    }
}

impl Add for HyperDual {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        Self::new(self.re + r.re, self.e1 + r.e1, self.e2 + r.e2, self.e12 + r.e12)
    }
}

impl Sub for HyperDual {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        Self::new(self.re - r.re, self.e1 - r.e1, self.e2 - r.e2, self.e12 - r.e12)
    }
}

impl Mul for HyperDual {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        Self::new(
            self.re * r.re,
            self.re * r.e1 + self.e1 * r.re,
            self.re * r.e2 + self.e2 * r.re,
            self.re * r.e12 + self.e1 * r.e2 + self.e2 * r.e1 + self.e12 * r.re,
        )
    }
}

impl Div for HyperDual {
    type Output = Self;
    #[inline]
    fn div(self, r: Self) -> Self {
        let inv = 1.0 / r.re;
        let recip = r.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * recip
    }
}

impl Neg for HyperDual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.e1, -self.e2, -self.e12)
    }
}

impl Scalar for HyperDual {
    #[inline]
    fn constant(value: f64) -> Self {
        Self::real(value)
    }
    #[inline]
    fn re(&self) -> f64 {
        self.re
    }
    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self::new(
            f0,
            f1 * self.e1,
            f1 * self.e2,
            f1 * self.e12 + f2 * self.e1 * self.e2,
        )
    }
    #[inline]
    fn is_real(&self) -> bool {
        self.e1 == 0.0 && self.e2 == 0.0 && self.e12 == 0.0
    }
    #[inline]
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.e1.is_finite() && self.e2.is_finite() && self.e12.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperdual_product_rule() {
        // f(x, y) = x * y at (2, 3), seeds e1 -> x, e2 -> y.
        let x = HyperDual::seeded(2.0, true, false);
        let y = HyperDual::seeded(3.0, false, true);
        let p = x * y;
        assert_eq!(p, HyperDual::new(6.0, 3.0, 2.0, 1.0));
    }

    #[test]
    fn hyperdual_reciprocal_second_derivative() {
        // d²/dx² (1/x) = 2/x³
        let x = HyperDual::seeded(2.0, true, true);
        let r = HyperDual::real(1.0) / x;
        assert!((r.e1 + 0.25).abs() < 1e-15);
        assert!((r.e12 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dual_quotient() {
        let x = Dual::variable(4.0);
        let q = Dual::constant(1.0) / x;
        assert!((q.eps + 1.0 / 16.0).abs() < 1e-16);
    }
}
