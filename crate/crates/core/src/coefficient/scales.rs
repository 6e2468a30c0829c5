use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use super::shape::{ShapeFamily, ShapeFunction};
use crate::error::{invalid, Error, Result};

/// Parameters of the scale pair `(Θ, Ξ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum ScaleParams {
    /// `Θ = 1 + t`, `Ξ = 1`.
    Constant,
    /// `Θ = (1+t)^{θ}` with `θ = 1 + q` unless overridden, `Ξ = (1+t)^r`.
    Polynomial { q: f64, r: f64, theta_exponent: Option<f64> },
    /// `Θ = (1+t)^{-β} exp(t^α)`, `Ξ = (1+t)^γ`.
    Suprapolynomial { beta: f64, gamma: f64 },
    /// `Θ = e^{at}`, `Ξ = e^{bt}`.
    Exponential { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScaleSet {
    pub shape: ShapeFamily,
    pub params: ScaleParams,
    pub m: u32,
    /// Zone constant `N`.
    pub zone_constant: f64,
}

const SLACK: f64 = 1e-12;

impl ScaleParams {
    /// Admissible interval for the free `Ξ` exponent (`r`, `γ` or `b`).
    pub fn window(&self, shape: ShapeFamily, m: u32) -> Result<(f64, f64)> {
        let mf = m as f64;
        match (*self, shape) {
            (ScaleParams::Polynomial { q, .. }, ShapeFamily::Polynomial { p }) => {
                Ok((1.0 - p + q + (p - q) / mf, 1.0))
            }
            (ScaleParams::Suprapolynomial { beta, .. }, ShapeFamily::Suprapolynomial { alpha }) => {
                Ok((-beta + (beta - alpha + 1.0) / mf, 1.0 - alpha))
            }
            (ScaleParams::Exponential { a, .. }, ShapeFamily::Exponential) => {
                Ok((a - 1.0 + (1.0 - a) / mf, 0.0))
            }
            (ScaleParams::Constant, ShapeFamily::Constant) => Ok((0.0, 0.0)),
            _ => Err(invalid("scale parameters do not match the shape family")),
        }
    }
}

pub fn make_scale_set(shape: &ShapeFunction, params: ScaleParams, m: u32, zone_constant: f64) -> Result<ScaleSet> {
    if m < 1 {
        return Err(invalid("m must be at least 1"));
    }
    if !(zone_constant > 0.0 && zone_constant.is_finite()) {
        return Err(invalid(format!("zone constant N = {zone_constant} must be positive")));
    }
    let family = shape.family();
    let (lo, hi) = params.window(family, m)?;
    let free = match (params, family) {
        (ScaleParams::Polynomial { q, r, theta_exponent }, ShapeFamily::Polynomial { p }) => {
            if !(q >= 0.0 && q < p) {
                return Err(Error::Admissibility(format!("need 0 <= q < p, got q = {q}, p = {p}")));
            }
            if let Some(th) = theta_exponent {
                if !(th > 0.0) {
                    return Err(invalid(format!("theta exponent {th} must be positive")));
                }
            }
            Some(("r", r))
        }
        (ScaleParams::Suprapolynomial { beta, gamma }, ShapeFamily::Suprapolynomial { alpha }) => {
            if !(beta > alpha - 1.0) {
                return Err(Error::Admissibility(format!("need beta > alpha - 1, got beta = {beta}, alpha = {alpha}")));
            }
            Some(("gamma", gamma))
        }
        (ScaleParams::Exponential { a, b }, ShapeFamily::Exponential) => {
            if !(a < 1.0) {
                return Err(Error::Admissibility(format!("need a < 1, got a = {a}")));
            }
            Some(("b", b))
        }
        _ => None,
    };
    if let Some((name, v)) = free {
        if !(v >= lo - SLACK && v <= hi + SLACK) {
            return Err(Error::Admissibility(format!(
                "{name} = {v} outside [{lo}, {hi}] for m = {m}"
            )));
        }
    }
    Ok(ScaleSet { shape: family, params, m, zone_constant })
}

impl ScaleSet {
    pub fn theta(&self, t: f64) -> f64 {
        match (self.params, self.shape) {
            (ScaleParams::Polynomial { q, theta_exponent, .. }, _) => {
                (1.0 + t).powf(theta_exponent.unwrap_or(1.0 + q))
            }
            (ScaleParams::Suprapolynomial { beta, .. }, ShapeFamily::Suprapolynomial { alpha }) => {
                (t.powf(alpha) - beta * (1.0 + t).ln()).exp()
            }
            (ScaleParams::Exponential { a, .. }, _) => (a * t).exp(),
            _ => 1.0 + t,
        }
    }

    /// `Ξ(t)`, the derivative scale of admissible perturbations.
    pub fn xi_weight(&self, t: f64) -> f64 {
        match self.params {
            ScaleParams::Polynomial { r, .. } => (1.0 + t).powf(r),
            ScaleParams::Suprapolynomial { gamma, .. } => (1.0 + t).powf(gamma),
            ScaleParams::Exponential { b, .. } => (b * t).exp(),
            ScaleParams::Constant => 1.0,
        }
    }

    /// `ε` in `(Θ/Λ)^ε` for the `A4'` weights, i.e. `1/m`.
    pub fn stabilisation_exponent(&self) -> f64 {
        1.0 / self.m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::make_shape;

    #[test]
    fn supra_window_at_m_one_is_a_point() {
        let shape = make_shape(ShapeFamily::Suprapolynomial { alpha: 0.5 }).unwrap();
        let p = ScaleParams::Suprapolynomial { beta: 0.5, gamma: 0.5 };
        assert_eq!(p.window(shape.family(), 1).unwrap(), (0.5, 0.5));
        assert!(make_scale_set(&shape, p, 1, 10.0).is_ok());
        let bad = ScaleParams::Suprapolynomial { beta: 0.5, gamma: 0.4 };
        assert!(matches!(make_scale_set(&shape, bad, 1, 10.0), Err(Error::Admissibility(_))));
    }

    #[test]
    fn polynomial_window() {
        let shape = make_shape(ShapeFamily::Polynomial { p: 2.0 }).unwrap();
        let p = ScaleParams::Polynomial { q: 1.0, r: 0.5, theta_exponent: None };
        let (lo, hi) = p.window(shape.family(), 2).unwrap();
        assert!((lo - 0.5).abs() < 1e-15 && hi == 1.0);
        let s = make_scale_set(&shape, p, 2, 10.0).unwrap();
        assert!((s.theta(1.0) - 4.0).abs() < 1e-14);
        let bad = ScaleParams::Polynomial { q: 1.0, r: 0.4, theta_exponent: None };
        assert!(make_scale_set(&shape, bad, 2, 10.0).is_err());
    }
}
