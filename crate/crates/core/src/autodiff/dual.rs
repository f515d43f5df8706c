//! Forward-mode dual numbers with `N` simultaneous tangent directions.
//!
//! `Dual<T, N>` is generic over its component scalar, so `Dual<Dual<f64, 1>, 1>`
//! carries mixed second derivatives.

use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::Scalar;

#[derive(Clone, Copy, Debug)]
pub struct Dual<T: Scalar, const N: usize> {
    pub re: T,
    pub eps: [T; N],
}

impl<T: Scalar, const N: usize> Dual<T, N> {
    #[inline]
    pub fn constant(re: T) -> Self {
        Dual {
            re,
            eps: [T::zero(); N],
        }
    }

    /// A variable seeded along direction `k`.
    #[inline]
    pub fn variable(re: T, k: usize) -> Self {
        let mut eps = [T::zero(); N];
        eps[k] = T::one();
        Dual { re, eps }
    }

    #[inline]
    pub fn new(re: T, eps: [T; N]) -> Self {
        Dual { re, eps }
    }

    /// Applies the chain rule for a unary function with derivative `d`.
    #[inline(always)]
    fn chain(self, re: T, d: T) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e *= d;
        }
        Dual { re, eps }
    }
}

impl<T: Scalar, const N: usize> PartialEq for Dual<T, N> {
    fn eq(&self, other: &Self) -> bool {
        self.re.value() == other.re.value()
    }
}

impl<T: Scalar, const N: usize> PartialOrd for Dual<T, N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.re.value().partial_cmp(&other.re.value())
    }
}

impl<T: Scalar, const N: usize> Add for Dual<T, N> {
    type Output = Self;
    #[inline(always)]
    fn add(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps.iter()) {
            *e += *r;
        }
        Dual {
            re: self.re + rhs.re,
            eps,
        }
    }
}

impl<T: Scalar, const N: usize> Sub for Dual<T, N> {
    type Output = Self;
    #[inline(always)]
    fn sub(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps.iter()) {
            *e -= *r;
        }
        Dual {
            re: self.re - rhs.re,
            eps,
        }
    }
}

impl<T: Scalar, const N: usize> Mul for Dual<T, N> {
    type Output = Self;
    #[inline(always)]
    fn mul(self, rhs: Self) -> Self {
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps.iter()) {
            *e = *e * rhs.re + self.re * *r;
        }
        Dual {
            re: self.re * rhs.re,
            eps,
        }
    }
}

impl<T: Scalar, const N: usize> Div for Dual<T, N> {
    type Output = Self;
    #[inline(always)]
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let re = self.re * inv;
        let mut eps = self.eps;
        for (e, r) in eps.iter_mut().zip(rhs.eps.iter()) {
            *e = (*e - re * *r) * inv;
        }
        Dual { re, eps }
    }
}

impl<T: Scalar, const N: usize> Neg for Dual<T, N> {
    type Output = Self;
    #[inline(always)]
    fn neg(self) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e = -*e;
        }
        Dual { re: -self.re, eps }
    }
}

impl<T: Scalar, const N: usize> AddAssign for Dual<T, N> {
    #[inline(always)]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar, const N: usize> SubAssign for Dual<T, N> {
    #[inline(always)]
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<T: Scalar, const N: usize> MulAssign for Dual<T, N> {
    #[inline(always)]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<T: Scalar, const N: usize> Scalar for Dual<T, N> {
    #[inline(always)]
    fn from_f64(v: f64) -> Self {
        Dual::constant(T::from_f64(v))
    }

    #[inline(always)]
    fn value(&self) -> f64 {
        self.re.value()
    }

    #[inline]
    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c)
    }

    #[inline]
    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s)
    }

    #[inline]
    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.re.sin_cos();
        (self.chain(s, c), self.chain(c, -s))
    }

    #[inline]
    fn tan(self) -> Self {
        let t = self.re.tan();
        self.chain(t, T::one() + t * t)
    }

    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    #[inline]
    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::one() / self.re)
    }

    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::from_f64(0.5) / s)
    }

    #[inline]
    fn abs(self) -> Self {
        let sign = if self.re.value() < 0.0 {
            -T::one()
        } else {
            T::one()
        };
        self.chain(self.re.abs(), sign)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type D1 = Dual<f64, 1>;

    #[test]
    fn square_at_three() {
        let x = D1::variable(3.0, 0);
        let y = x * x;
        assert_eq!(y.re, 9.0);
        assert_eq!(y.eps[0], 6.0);
    }

    #[test]
    fn sin_at_zero() {
        let y = D1::variable(0.0, 0).sin();
        assert_eq!(y.re, 0.0);
        assert_eq!(y.eps[0], 1.0);
    }

    #[test]
    fn quotient_rule() {
        let x = Dual::<f64, 2>::variable(2.0, 0);
        let y = Dual::<f64, 2>::variable(5.0, 1);
        let z = x / y;
        assert!((z.eps[0] - 0.2).abs() < 1e-15);
        assert!((z.eps[1] + 2.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn nested_second_derivative() {
        // d²/dx² of x³ at x = 2 is 12.
        type DD = Dual<Dual<f64, 1>, 1>;
        let x = DD::new(Dual::variable(2.0, 0), [Dual::constant(1.0)]);
        let y = x * x * x;
        assert_eq!(y.re.re, 8.0);
        assert_eq!(y.eps[0].re, 12.0);
        assert_eq!(y.eps[0].eps[0], 12.0);
    }

    #[test]
    fn comparisons_use_primal() {
        let a = Dual::<f64, 1>::new(1.0, [100.0]);
        let b = Dual::<f64, 1>::new(2.0, [-100.0]);
        assert!(a < b);
        assert!(a == Dual::new(1.0, [0.0]));
    }
}
