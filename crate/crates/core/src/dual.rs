//! Forward-mode dual numbers carrying a full spatial gradient.
//!
//! A `Dual<N>` holds a value and its partial derivatives with respect to `N`
//! independent variables. Every arithmetic operation applies the chain rule
//! exactly, so derivatives of metric components come out to machine
//! precision with no step-size tuning.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Numbers the metric evaluators are written against: plain `f64` for fast
/// value-only evaluation and [`Dual`] when gradients are needed.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn recip(self) -> Self {
        Self::constant(1.0) / self
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
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
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

#[derive(Clone, Copy, PartialEq)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub eps: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub const fn constant(re: f64) -> Self {
        Dual { re, eps: [0.0; N] }
    }

    /// The `i`-th independent variable with value `re`.
    pub fn variable(re: f64, i: usize) -> Self {
        let mut eps = [0.0; N];
        eps[i] = 1.0;
        Dual { re, eps }
    }

    /// Seeds every coordinate of a point as an independent variable.
    pub fn seed(x: &[f64; N]) -> [Self; N] {
        std::array::from_fn(|i| Self::variable(x[i], i))
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        Dual {
            re: f,
            eps: self.eps.map(|d| d * df),
        }
    }
}

impl<const N: usize> fmt::Debug for Dual<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({} ; {:?})", self.re, self.eps)
    }
}

impl<const N: usize> Default for Dual<N> {
    fn default() -> Self {
        Self::constant(0.0)
    }
}

impl<const N: usize> From<f64> for Dual<N> {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual {
            re: self.re + rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] + rhs.eps[i]),
        }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual {
            re: self.re - rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] - rhs.eps[i]),
        }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual {
            re: self.re * rhs.re,
            eps: std::array::from_fn(|i| self.eps[i] * rhs.re + self.re * rhs.eps[i]),
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.re;
        let re = self.re * inv;
        Dual {
            re,
            eps: std::array::from_fn(|i| (self.eps[i] - re * rhs.eps[i]) * inv),
        }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: self.eps.map(|d| -d),
        }
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Dual {
            re: self.re + rhs,
            eps: self.eps,
        }
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Dual {
            re: self.re - rhs,
            eps: self.eps,
        }
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Dual {
            re: self.re * rhs,
            eps: self.eps.map(|d| d * rhs),
        }
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> SubAssign for Dual<N> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const N: usize> MulAssign for Dual<N> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn constant(v: f64) -> Self {
        Dual::constant(v)
    }

    fn value(&self) -> f64 {
        self.re
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn atan2(self, x: Self) -> Self {
        let r2 = self.re * self.re + x.re * x.re;
        Dual {
            re: self.re.atan2(x.re),
            eps: std::array::from_fn(|i| (x.re * self.eps[i] - self.re * x.eps[i]) / r2),
        }
    }

    fn powi(self, n: i32) -> Self {
        match n {
            0 => Dual::constant(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let p = self.re.powi(n - 1);
                self.chain(p * self.re, f64::from(n) * p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-5;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn product_rule_is_exact() {
        let [x, y] = Dual::<2>::seed(&[1.5, -0.25]);
        let f = x * y + x / y;
        // d/dx = y + 1/y, d/dy = x - x/y^2
        assert_eq!(f.eps[0], -0.25 + 1.0 / -0.25);
        assert!((f.eps[1] - (1.5 - 1.5 / 0.0625)).abs() < 1e-12);
    }

    #[test]
    fn elementary_functions_match_finite_differences() {
        let x0 = 0.7;
        let x = Dual::<1>::variable(x0, 0);
        let cases: [(Dual<1>, fn(f64) -> f64); 5] = [
            (x.sqrt(), f64::sqrt),
            (x.sin(), f64::sin),
            (x.cos(), f64::cos),
            (x.powi(-3), |v| v.powi(-3)),
            (x.powi(5), |v| v.powi(5)),
        ];
        for (d, f) in cases {
            assert!((d.re - f(x0)).abs() < 1e-15);
            assert!((d.eps[0] - fd(f, x0)).abs() < 1e-8, "{d:?}");
        }
        let y = Dual::<1>::constant(0.3);
        let a = x.atan2(y);
        assert!((a.eps[0] - fd(|v| v.atan2(0.3), x0)).abs() < 1e-8);
    }

    #[test]
    fn powi_zero_and_negative_base() {
        let x = Dual::<1>::variable(-2.0, 0);
        assert_eq!(x.powi(0).re, 1.0);
        assert_eq!(x.powi(0).eps[0], 0.0);
        let c = x.powi(3);
        assert_eq!(c.re, -8.0);
        assert_eq!(c.eps[0], 12.0);
    }
}
