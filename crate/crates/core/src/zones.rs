//! Zone boundaries `Λ(t) |ξ| = N` and `Θ(t) |ξ| = N` and zone classification.

use crate::coefficient::Coefficient;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Zone {
    PseudoDifferential,
    Intermediate,
    Hyperbolic,
}

impl Zone {
    pub fn label(&self) -> &'static str {
        match self {
            Zone::PseudoDifferential => "pd",
            Zone::Intermediate => "int",
            Zone::Hyperbolic => "hyp",
        }
    }
}

/// Boundaries for one frequency. `None` means the defining equation has no
/// root because `scale(0) |ξ| >= N` already; the zone below is then empty.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ZoneBoundaries {
    pub xi: f64,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
}

impl ZoneBoundaries {
    /// Start of the pd zone's complement; 0 when the pd zone is empty.
    pub fn t1_or_zero(&self) -> f64 {
        self.t1.unwrap_or(0.0)
    }

    /// Start of the hyperbolic zone, never before `t1`.
    pub fn t2_effective(&self) -> f64 {
        self.t2.unwrap_or(0.0).max(self.t1_or_zero())
    }

    /// pd is closed on the right, hyp closed on the left.
    pub fn classify(&self, t: f64) -> Zone {
        if let Some(t1) = self.t1 {
            if t <= t1 {
                return Zone::PseudoDifferential;
            }
        }
        if t >= self.t2_effective() {
            Zone::Hyperbolic
        } else {
            Zone::Intermediate
        }
    }
}

pub const ROOT_TOL: f64 = 1e-10;
pub const DEFAULT_T_MAX: f64 = 1e15;

/// Root of `scale(t) |ξ| = n` for an increasing `scale`.
pub fn boundary<F: Fn(f64) -> f64>(scale: F, xi: f64, n: f64, t_max: f64) -> Result<Option<f64>> {
    let xi = xi.abs();
    if !(xi > 0.0) || !(n > 0.0) {
        return Err(invalid("frequency and zone constant must be positive"));
    }
    let f = |t: f64| scale(t) * xi - n;
    if f(0.0) >= 0.0 {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    while fhi < 0.0 {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        if hi > t_max {
            return Err(Error::NoBracket { t_max });
        }
        fhi = f(hi);
    }
    if fhi.is_nan() {
        return Err(Error::NonFinite { t: hi });
    }
    // Bisection until the secant phase is safe.
    for _ in 0..60 {
        if hi - lo <= 1e-3 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm < 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    // Secant with bracket safeguard; the bracket is kept as [lo, hi].
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
    for _ in 0..200 {
        if best.1.abs() <= ROOT_TOL {
            return Ok(Some(best.0));
        }
        let mut x = if fhi.is_finite() && fhi != flo { hi - fhi * (hi - lo) / (fhi - flo) } else { 0.5 * (lo + hi) };
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        if x <= lo || x >= hi {
            break;
        }
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx < 0.0 {
            // Illinois weighting keeps one-sided convergence from stalling.
            if fhi.is_finite() {
                fhi *= 0.5;
            }
            lo = x;
            flo = fx;
        } else {
            flo *= 0.5;
            hi = x;
            fhi = fx;
        }
    }
    if best.1.abs() <= ROOT_TOL {
        Ok(Some(best.0))
    } else {
        Err(Error::NoConvergence { residual: best.1.abs() })
    }
}

pub fn zone_boundaries(coef: &Coefficient, xi: f64) -> Result<ZoneBoundaries> {
    let n = coef.scales.zone_constant;
    let t1 = boundary(|t| coef.primitive(t), xi, n, DEFAULT_T_MAX)?;
    let t2 = boundary(|t| coef.theta(t), xi, n, DEFAULT_T_MAX)?;
    Ok(ZoneBoundaries { xi: xi.abs(), t1, t2 })
}

pub fn classify(coef: &Coefficient, t: f64, xi: f64) -> Result<Zone> {
    Ok(zone_boundaries(coef, xi)?.classify(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_primitive_example() {
        let t = boundary(|t| 1.0 + t, 0.5, 10.0, DEFAULT_T_MAX).unwrap().unwrap();
        assert!((t - 19.0).abs() < 1e-9);
    }

    #[test]
    fn empty_when_already_large() {
        assert_eq!(boundary(|t| 1.0 + t, 20.0, 10.0, DEFAULT_T_MAX).unwrap(), None);
    }

    #[test]
    fn exponential_root_residual() {
        let xi = 3.7e-6;
        let t = boundary(|t: f64| t.exp(), xi, 10.0, DEFAULT_T_MAX).unwrap().unwrap();
        assert!((t.exp() * xi - 10.0).abs() <= ROOT_TOL);
    }

    #[test]
    fn classification_is_closed_correctly() {
        let z = ZoneBoundaries { xi: 1.0, t1: Some(2.0), t2: Some(5.0) };
        assert_eq!(z.classify(2.0), Zone::PseudoDifferential);
        assert_eq!(z.classify(2.0 + 1e-12), Zone::Intermediate);
        assert_eq!(z.classify(5.0), Zone::Hyperbolic);
    }
}
