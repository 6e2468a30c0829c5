use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::jet::Real;
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum ShapeFamily {
    /// `λ ≡ 1`.
    Constant,
    /// `λ = (1 + t)^p`, `p > 0`.
    Polynomial { p: f64 },
    /// `λ = exp(t^α)`, `0 < α < 1`.
    Suprapolynomial { alpha: f64 },
    /// `λ = e^t`.
    Exponential,
}

#[derive(Clone, Debug)]
pub struct ShapeFunction {
    family: ShapeFamily,
    table: Option<Arc<PrimitiveTable>>,
}

/// Validates the family parameters and, for `exp(t^α)`, tabulates `Λ`.
pub fn make_shape(family: ShapeFamily) -> Result<ShapeFunction> {
    let table = match family {
        ShapeFamily::Polynomial { p } => {
            if !(p > 0.0 && p.is_finite()) {
                return Err(invalid(format!("polynomial exponent p = {p} must be positive")));
            }
            None
        }
        ShapeFamily::Suprapolynomial { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")));
            }
            Some(Arc::new(PrimitiveTable::build(alpha)))
        }
        ShapeFamily::Constant | ShapeFamily::Exponential => None,
    };
    Ok(ShapeFunction { family, table })
}

impl ShapeFunction {
    pub fn family(&self) -> ShapeFamily {
        self.family
    }

    pub fn lambda<R: Real>(&self, t: R) -> R {
        match self.family {
            ShapeFamily::Constant => t.lift(1.0),
            ShapeFamily::Polynomial { p } => (t + 1.0).rpow(p),
            ShapeFamily::Suprapolynomial { alpha } => t.rpow(alpha).rexp(),
            ShapeFamily::Exponential => t.rexp(),
        }
    }

    /// `ln λ(t)`, finite far beyond the range where `λ` itself overflows.
    pub fn log_lambda(&self, t: f64) -> f64 {
        match self.family {
            ShapeFamily::Constant => 0.0,
            ShapeFamily::Polynomial { p } => p * t.ln_1p(),
            ShapeFamily::Suprapolynomial { alpha } => t.powf(alpha),
            ShapeFamily::Exponential => t,
        }
    }

    /// `λ'/λ`; infinite at `t = 0` for `exp(t^α)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        match self.family {
            ShapeFamily::Constant => 0.0,
            ShapeFamily::Polynomial { p } => p / (1.0 + t),
            ShapeFamily::Suprapolynomial { alpha } => alpha * t.powf(alpha - 1.0),
            ShapeFamily::Exponential => 1.0,
        }
    }

    /// `Λ(t) = 1 + ∫_0^t λ(s) ds`.
    pub fn primitive(&self, t: f64) -> f64 {
        match self.family {
            ShapeFamily::Constant => 1.0 + t,
            ShapeFamily::Polynomial { p } => 1.0 + ((1.0 + t).powf(p + 1.0) - 1.0) / (p + 1.0),
            ShapeFamily::Suprapolynomial { .. } => self.table.as_ref().expect("table").eval(t),
            ShapeFamily::Exponential => t.exp(),
        }
    }

    /// Inverse of `Λ` on `[0, ∞)`; returns 0 below `Λ(0)`.
    pub fn primitive_inverse(&self, y: f64) -> f64 {
        if y <= self.primitive(0.0) {
            return 0.0;
        }
        match self.family {
            ShapeFamily::Constant => y - 1.0,
            ShapeFamily::Polynomial { p } => (1.0 + (y - 1.0) * (p + 1.0)).powf(1.0 / (p + 1.0)) - 1.0,
            ShapeFamily::Exponential => y.ln(),
            ShapeFamily::Suprapolynomial { .. } => {
                let (mut lo, mut hi) = (0.0, 1.0);
                while self.primitive(hi) < y {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.primitive(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

/// `Λ` for `λ = exp(t^α)`, tabulated in `u = t^α` and interpolated with cubic
/// Hermite polynomials using the exact slope `dΛ/du`.
#[derive(Debug)]
struct PrimitiveTable {
    alpha: f64,
    h: f64,
    values: Vec<f64>,
}

const TABLE_STEP: f64 = 0.004;
const TABLE_T_MAX: f64 = 1e4;
const TABLE_U_CAP: f64 = 700.0;

impl PrimitiveTable {
    fn slope(alpha: f64, u: f64) -> f64 {
        if u <= 0.0 {
            return if alpha == 1.0 { 1.0 } else if alpha < 1.0 { 0.0 } else { f64::INFINITY };
        }
        u.exp() * u.powf(1.0 / alpha - 1.0) / alpha
    }

    fn build(alpha: f64) -> Self {
        let u_max = TABLE_T_MAX.powf(alpha).min(TABLE_U_CAP);
        let n = (u_max / TABLE_STEP).ceil() as usize;
        let h = u_max / n as f64;
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 1.0;
        values.push(acc);
        for i in 0..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            acc += quad::integrate(|u| Self::slope(alpha, u), a, b, 0.0, 1e-15).value;
            values.push(acc);
        }
        PrimitiveTable { alpha, h, values }
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let u = t.powf(self.alpha);
        let last = self.values.len() - 1;
        let u_end = last as f64 * self.h;
        if u >= u_end {
            let extra = quad::integrate(|v| Self::slope(self.alpha, v), u_end, u, 0.0, 1e-14).value;
            return self.values[last] + extra;
        }
        let i = ((u / self.h) as usize).min(last - 1);
        let (u0, u1) = (i as f64 * self.h, (i + 1) as f64 * self.h);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (Self::slope(self.alpha, u0), Self::slope(self.alpha, u1));
        let h = u1 - u0;
        let s = (u - u0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supra_primitive_matches_closed_form_for_half() {
        let s = make_shape(ShapeFamily::Suprapolynomial { alpha: 0.5 }).unwrap();
        for &t in &[0.01, 0.3, 1.0, 2.7, 10.0, 123.4, 999.0, 9000.0, 2e4] {
            let r = t.sqrt();
            let exact = 1.0 + 2.0 * (r - 1.0) * r.exp() + 2.0;
            let got = s.primitive(t);
            assert!((got - exact).abs() <= 1e-10 * exact, "t={t} got={got} exact={exact}");
        }
    }

    #[test]
    fn primitive_inverse_roundtrip() {
        for fam in [
            ShapeFamily::Polynomial { p: 2.0 },
            ShapeFamily::Exponential,
            ShapeFamily::Suprapolynomial { alpha: 0.5 },
        ] {
            let s = make_shape(fam).unwrap();
            for &t in &[0.5, 3.0, 17.0] {
                let back = s.primitive_inverse(s.primitive(t));
                assert!((back - t).abs() < 1e-9 * t, "{fam:?} t={t} back={back}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_shape(ShapeFamily::Polynomial { p: 0.0 }).is_err());
        assert!(make_shape(ShapeFamily::Suprapolynomial { alpha: 1.0 }).is_err());
    }
}
