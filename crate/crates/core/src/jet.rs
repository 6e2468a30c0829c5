//! Truncated Taylor series ("jets") in one variable.
//!
//! A jet of length `n` stores `f(t), f'(t), f''(t)/2!, ...` up to order
//! `n - 1`. Products follow the Leibniz rule automatically, so derivatives of
//! `a = λ ω` and of the diagonalizer symbols come out of plain arithmetic.

use core::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{Float, One, Zero};

pub const JET_CAP: usize = 8;

/// Scalar types a jet can carry.
pub trait Field:
    Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
}

impl Field for f64 {}
impl Field for Complex64 {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    coef: [T; JET_CAP],
    len: usize,
}

pub type RJet = Jet<f64>;
pub type CJet = Jet<Complex64>;

const FACT: [f64; JET_CAP] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];

impl<T: Field> Jet<T> {
    pub fn constant(c: T, len: usize) -> Self {
        assert!((1..=JET_CAP).contains(&len), "jet length out of range");
        let mut coef = [T::zero(); JET_CAP];
        coef[0] = c;
        Jet { coef, len }
    }

    /// Taylor coefficients `c[k] = f^(k)(t) / k!`.
    pub fn from_coefficients(c: &[T]) -> Self {
        assert!((1..=JET_CAP).contains(&c.len()), "jet length out of range");
        let mut coef = [T::zero(); JET_CAP];
        coef[..c.len()].copy_from_slice(c);
        Jet { coef, len: c.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> T {
        self.coef[0]
    }

    pub fn coefficient(&self, k: usize) -> T {
        self.coef[k]
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coef[..self.len]
    }

    /// `k`-th derivative at the expansion point.
    pub fn deriv(&self, k: usize) -> T {
        assert!(k < self.len, "derivative order beyond jet length");
        self.coef[k] * FACT[k]
    }

    /// Jet of the derivative; one order shorter.
    pub fn derivative(&self) -> Self {
        assert!(self.len >= 2, "cannot differentiate a length-1 jet");
        let mut coef = [T::zero(); JET_CAP];
        for i in 0..self.len - 1 {
            coef[i] = self.coef[i + 1] * (i as f64 + 1.0);
        }
        Jet { coef, len: self.len - 1 }
    }

    pub fn truncate(&self, len: usize) -> Self {
        let mut out = *self;
        out.len = len.min(self.len).max(1);
        for c in out.coef[out.len..].iter_mut() {
            *c = T::zero();
        }
        out
    }

    pub fn constant_like(&self, c: T) -> Self {
        Self::constant(c, self.len)
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for c in out.coef[..self.len].iter_mut() {
            *c = *c * s;
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a = &self.coef;
        let mut b = [T::zero(); JET_CAP];
        let inv0 = T::one() / a[0];
        b[0] = inv0;
        for k in 1..self.len {
            let mut s = T::zero();
            for i in 1..=k {
                s = s + a[i] * b[k - i];
            }
            b[k] = -(s * inv0);
        }
        Jet { coef: b, len: self.len }
    }
}

impl RJet {
    /// Jet of the identity map at `t`.
    pub fn variable(t: f64, len: usize) -> Self {
        let mut j = Self::constant(t, len);
        if len > 1 {
            j.coef[1] = 1.0;
        }
        j
    }

    pub fn to_complex(&self) -> CJet {
        let mut coef = [Complex64::zero(); JET_CAP];
        for (o, c) in coef.iter_mut().zip(self.coef.iter()) {
            *o = Complex64::new(*c, 0.0);
        }
        Jet { coef, len: self.len }
    }

    pub fn exp(&self) -> Self {
        let a = &self.coef;
        let mut e = [0.0; JET_CAP];
        e[0] = a[0].exp();
        for k in 1..self.len {
            let mut s = 0.0;
            for i in 1..=k {
                s += i as f64 * a[i] * e[k - i];
            }
            e[k] = s / k as f64;
        }
        Jet { coef: e, len: self.len }
    }

    pub fn ln(&self) -> Self {
        let a = &self.coef;
        let mut l = [0.0; JET_CAP];
        l[0] = a[0].ln();
        for k in 1..self.len {
            let mut s = 0.0;
            for i in 1..k {
                s += i as f64 * l[i] * a[k - i];
            }
            l[k] = (a[k] - s / k as f64) / a[0];
        }
        Jet { coef: l, len: self.len }
    }

    /// `self^p` for a positive base.
    pub fn powf(&self, p: f64) -> Self {
        let a = &self.coef;
        let mut b = [0.0; JET_CAP];
        b[0] = a[0].powf(p);
        for k in 1..self.len {
            let mut s = 0.0;
            for i in 1..=k {
                s += (p * i as f64 - (k - i) as f64) * a[i] * b[k - i];
            }
            b[k] = s / (k as f64 * a[0]);
        }
        Jet { coef: b, len: self.len }
    }
}

impl CJet {
    pub fn conj(&self) -> Self {
        let mut out = *self;
        for c in out.coef[..self.len].iter_mut() {
            *c = c.conj();
        }
        out
    }

    pub fn re(&self) -> RJet {
        let mut coef = [0.0; JET_CAP];
        for (o, c) in coef.iter_mut().zip(self.coef.iter()) {
            *o = c.re;
        }
        Jet { coef, len: self.len }
    }

    pub fn im(&self) -> RJet {
        let mut coef = [0.0; JET_CAP];
        for (o, c) in coef.iter_mut().zip(self.coef.iter()) {
            *o = c.im;
        }
        Jet { coef, len: self.len }
    }
}

impl<T: Field> Add for Jet<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let len = self.len.min(rhs.len);
        let mut coef = [T::zero(); JET_CAP];
        for i in 0..len {
            coef[i] = self.coef[i] + rhs.coef[i];
        }
        Jet { coef, len }
    }
}

impl<T: Field> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let len = self.len.min(rhs.len);
        let mut coef = [T::zero(); JET_CAP];
        for i in 0..len {
            coef[i] = self.coef[i] - rhs.coef[i];
        }
        Jet { coef, len }
    }
}

impl<T: Field> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let len = self.len.min(rhs.len);
        let mut coef = [T::zero(); JET_CAP];
        for k in 0..len {
            let mut s = T::zero();
            for i in 0..=k {
                s = s + self.coef[i] * rhs.coef[k - i];
            }
            coef[k] = s;
        }
        Jet { coef, len }
    }
}

impl<T: Field> Div for Jet<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<T: Field> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Field> Add<f64> for Jet<T>
where
    T: Add<f64, Output = T>,
{
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.coef[0] = self.coef[0] + rhs;
        self
    }
}

impl<T: Field> Sub<f64> for Jet<T>
where
    T: Sub<f64, Output = T>,
{
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.coef[0] = self.coef[0] - rhs;
        self
    }
}

impl<T: Field> Mul<f64> for Jet<T> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for c in self.coef[..self.len].iter_mut() {
            *c = *c * rhs;
        }
        self
    }
}

impl<T: Field> Div<f64> for Jet<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

/// Scalars on which coefficient formulas are written once and evaluated both
/// pointwise (`f64`) and with derivatives (`RJet`).
pub trait Real:
    Copy
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
    fn val(&self) -> f64;
    fn lift(&self, c: f64) -> Self;
    fn rexp(self) -> Self;
    fn rln(self) -> Self;
    fn rpow(self, p: f64) -> Self;
    fn rrecip(self) -> Self;
}

impl Real for f64 {
    fn val(&self) -> f64 {
        *self
    }
    fn lift(&self, c: f64) -> Self {
        c
    }
    fn rexp(self) -> Self {
        Float::exp(self)
    }
    fn rln(self) -> Self {
        Float::ln(self)
    }
    fn rpow(self, p: f64) -> Self {
        Float::powf(self, p)
    }
    fn rrecip(self) -> Self {
        1.0 / self
    }
}

impl Real for RJet {
    fn val(&self) -> f64 {
        self.value()
    }
    fn lift(&self, c: f64) -> Self {
        self.constant_like(c)
    }
    fn rexp(self) -> Self {
        RJet::exp(&self)
    }
    fn rln(self) -> Self {
        RJet::ln(&self)
    }
    fn rpow(self, p: f64) -> Self {
        RJet::powf(&self, p)
    }
    fn rrecip(self) -> Self {
        Jet::recip(&self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_of_variable_has_all_derivatives_equal() {
        let j = RJet::variable(0.7, 8).exp();
        for k in 0..8 {
            assert!(close(j.deriv(k), 0.7f64.exp(), 1e-13));
        }
    }

    #[test]
    fn powf_matches_falling_factorials() {
        let p = 2.5;
        let t = 1.3;
        let j = (RJet::variable(t, 6) + 1.0).powf(p);
        let mut fall = 1.0;
        for k in 0..6 {
            let expect = fall * (1.0 + t).powf(p - k as f64);
            assert!(close(j.deriv(k), expect, 1e-12), "k={k}");
            fall *= p - k as f64;
        }
    }

    #[test]
    fn ln_inverts_exp() {
        let x = RJet::from_coefficients(&[0.3, -1.2, 0.5, 2.0, 0.1]);
        let y = x.exp().ln();
        for k in 0..5 {
            assert!(close(y.coefficient(k), x.coefficient(k), 1e-13));
        }
    }

    #[test]
    fn product_rule_and_recip() {
        let t = RJet::variable(2.0, 5);
        let f = t * t * t;
        assert!(close(f.deriv(1), 12.0, 1e-14));
        assert!(close(f.deriv(2), 12.0, 1e-14));
        assert!(close(f.deriv(3), 6.0, 1e-14));
        let g = t.recip();
        assert!(close(g.deriv(3), -6.0 / 16.0, 1e-14));
        let one = f / f;
        assert!(close(one.value(), 1.0, 1e-15) && one.coefficient(3).abs() < 1e-14);
    }

    #[test]
    fn derivative_drops_one_order() {
        let f = RJet::variable(1.0, 4).exp();
        let d = f.derivative();
        assert_eq!(d.len(), 3);
        assert!(close(d.deriv(2), 1f64.exp(), 1e-13));
    }
}
