use alloc::format;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::jet::{RJet, Real};
use crate::quad;

/// Smooth bump `ψ` on `[0, 1]`: a plateau of height `scale` on
/// `[edge, 1 - edge]`, C^∞ transitions, and `∫ψ = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BumpProfile {
    pub edge: f64,
    pub scale: f64,
    pub order: u32,
}

pub const DEFAULT_EDGE: f64 = 0.1;

pub fn make_bump(order: u32) -> Result<BumpProfile> {
    make_bump_with_edge(order, DEFAULT_EDGE)
}

pub fn make_bump_with_edge(order: u32, edge: f64) -> Result<BumpProfile> {
    if order < 2 {
        return Err(invalid(format!("bump smoothness order {order} must be at least 2")));
    }
    if !(edge > 0.0 && edge < 0.5) {
        return Err(invalid(format!("edge width {edge} must lie in (0, 1/2)")));
    }
    let unit = BumpProfile { edge, scale: 1.0, order };
    let mass = quad::integrate(|s| unit.eval(s), 0.0, 1.0, 1e-15, 1e-14).value;
    Ok(BumpProfile { scale: 0.5 / mass, ..unit })
}

/// `exp(-1/x)` glued to zero; the building block of the smooth step.
fn flat<R: Real>(x: R) -> R {
    if x.val() <= 0.0 {
        x.lift(0.0)
    } else {
        (-x.rrecip()).rexp()
    }
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step<R: Real>(x: R) -> R {
    let v = x.val();
    if v <= 0.0 {
        return x.lift(0.0);
    }
    if v >= 1.0 {
        return x.lift(1.0);
    }
    let f = flat(x);
    let g = flat(-x + 1.0);
    f / (f + g)
}

impl BumpProfile {
    pub fn eval<R: Real>(&self, s: R) -> R {
        let v = s.val();
        if v <= 0.0 || v >= 1.0 {
            return s.lift(0.0);
        }
        smooth_step(s / self.edge) * smooth_step((-s + 1.0) / self.edge) * self.scale
    }

    /// 1-periodic extension `b(s) = ψ(s mod 1)`.
    pub fn eval_periodic<R: Real>(&self, s: R) -> R {
        let shift = s.val().floor();
        self.eval(s - shift)
    }

    /// `sup |b'| / (1 + b)`, the Gronwall rate for the periodic profile.
    pub fn gronwall_rate(&self) -> f64 {
        let n = 20_000;
        let mut best: f64 = 0.0;
        for i in 1..n {
            let j = self.eval(RJet::variable(i as f64 / n as f64, 2));
            best = best.max(j.deriv(1).abs() / (1.0 + j.value()));
        }
        best
    }

    /// `sup |ψ^(k)|`, sampled.
    pub fn derivative_bound(&self, k: usize) -> f64 {
        let n = 20_000;
        let mut best: f64 = 0.0;
        for i in 1..n {
            let j = self.eval(RJet::variable(i as f64 / n as f64, k + 1));
            best = best.max(j.deriv(k).abs());
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_matches_symmetry_oracle() {
        let b = make_bump(4).unwrap();
        assert!((b.scale - 5.0 / 9.0).abs() < 1e-12);
        assert!(b.scale < 1.0);
    }

    #[test]
    fn plateau_and_support() {
        let b = make_bump(2).unwrap();
        assert_eq!(b.eval(0.0), 0.0);
        assert_eq!(b.eval(1.0), 0.0);
        assert!((b.eval(0.5) - b.scale).abs() < 1e-15);
        assert!((b.eval(0.05) - 0.5 * b.scale).abs() < 1e-15);
    }

    #[test]
    fn smooth_step_midpoint_slope() {
        let j = smooth_step(RJet::variable(0.5, 3));
        assert!((j.deriv(1) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rejects_low_order() {
        assert!(make_bump(1).is_err());
    }
}
