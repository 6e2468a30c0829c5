//! Complex 2x2 matrices.

use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::{Float, Zero};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0), C64::new(d, 0.0))
    }

    pub fn identity() -> Self {
        Mat2::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Mat2::real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, C64::zero(), C64::zero(), d)
    }

    pub fn det(&self) -> C64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.m;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let size = self.max_abs();
        if !(det.norm() > 1e-300 && det.norm() > f64::EPSILON * 1e-2 * size * size) {
            return Err(Error::Singular);
        }
        let m = self.m;
        let inv = C64::new(1.0, 0.0) / det;
        Ok(Mat2::new(m[1][1] * inv, -m[0][1] * inv, -m[1][0] * inv, m[0][0] * inv))
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |acc: f64, z| acc.max(z.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest and smallest singular values.
    pub fn singular_values(&self) -> (f64, f64) {
        let m = self.m;
        let p = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let r = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let z = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        let half = 0.5 * (p - r);
        let root = (half * half + z.norm_sqr()).sqrt();
        let smax2 = 0.5 * (p + r) + root;
        let smax = smax2.max(0.0).sqrt();
        let smin = if smax > 0.0 { self.det().norm() / smax } else { 0.0 };
        (smax, smin)
    }

    pub fn spectral_norm(&self) -> f64 {
        self.singular_values().0
    }

    pub fn condition_number(&self) -> Result<f64> {
        let (smax, smin) = self.singular_values();
        if !(smin > 0.0) || !(smax / smin).is_finite() {
            return Err(Error::Singular);
        }
        Ok(smax / smin)
    }

    /// Eigenvalues from the characteristic polynomial, larger modulus first.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let tr = self.trace();
        let det = self.det();
        let disc = (tr * tr - det * 4.0).sqrt();
        let s = if (tr.conj() * disc).re >= 0.0 { disc } else { -disc };
        let q = (tr + s) * 0.5;
        if q.norm() == 0.0 {
            return [C64::zero(), C64::zero()];
        }
        let other = det / q;
        if q.norm() >= other.norm() {
            [q, other]
        } else {
            [other, q]
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.m, o.m);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.m, o.m);
        Mat2::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.m, o.m);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

pub fn vec_norm(v: [C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_of_rotation_is_one() {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = Mat2::new(C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0));
        assert!((r.spectral_norm() - 1.0).abs() < 1e-15);
        assert!((r.condition_number().unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn norm_matches_power_iteration() {
        let m = Mat2::new(C64::new(1.0, 2.0), C64::new(-0.5, 0.1), C64::new(3.0, -1.0), C64::new(0.2, 0.7));
        let mut v = [C64::new(1.0, 0.0), C64::new(0.3, 0.2)];
        let mut est = 0.0;
        for _ in 0..200 {
            let w = m.adjoint().apply(m.apply(v));
            let n = vec_norm(w);
            est = n.sqrt();
            v = [w[0] / n, w[1] / n];
        }
        assert!((m.spectral_norm() - est).abs() < 1e-12 * est);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = Mat2::real(1.0, 2.0, 2.0, 4.0);
        assert_eq!(m.condition_number(), Err(Error::Singular));
        assert_eq!(m.inverse(), Err(Error::Singular));
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let m = Mat2::new(C64::new(2.0, 0.0), C64::new(5.0, 0.0), C64::zero(), C64::new(0.5, 0.0));
        let e = m.eigenvalues();
        assert!((e[0] - C64::new(2.0, 0.0)).norm() < 1e-14);
        assert!((e[1] - C64::new(0.5, 0.0)).norm() < 1e-14);
    }
}
