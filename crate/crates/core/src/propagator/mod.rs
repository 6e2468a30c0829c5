//! Fundamental solution `E(t, s, ξ)` of the first-order system for
//! `V = (λ|ξ|û, D_t û)`, where `∂_t V = iA V` and
//! `iA = [[λ'/λ, iλξ], [iλω²ξ, 0]]`.
//!
//! The integrator carries the trace-free rescaling
//! `F(t, s) = (λ(s)/λ(t))^{1/2} E(t, s)`, whose generator is
//! `[[λ'/(2λ), iλξ], [iλω²ξ, -λ'/(2λ)]]`. Then `‖F‖` is exactly the two-sided
//! ratio `‖E‖ (λ(t)/λ(s))^{-1/2}` and `det F = 1` up to integration error.

pub mod dopri;
mod peano_baker;
pub mod verify;

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

pub use dopri::{integrate_stops, LinearGenerator, StepStats, Tolerance};
pub use peano_baker::{peano_baker, peano_baker_with};

use crate::coefficient::Coefficient;
use crate::error::Result;
use crate::linalg::{Mat2, C64, I};

/// Scaled (trace-free) generator of the wave system at frequency `ξ`.
pub struct WaveSystem<'a> {
    pub coef: &'a Coefficient,
    pub xi: f64,
}

impl LinearGenerator for WaveSystem<'_> {
    fn matrix(&self, t: f64) -> Mat2 {
        let lam = self.coef.lambda(t);
        let om = self.coef.omega(t);
        let g = 0.5 * self.coef.lambda_log_derivative(t);
        let off = lam * self.xi;
        Mat2::new(C64::new(g, 0.0), I * off, I * (off * om * om), C64::new(-g, 0.0))
    }

    fn frequency(&self, t: f64) -> f64 {
        self.coef.a(t) * self.xi.abs()
    }
}

/// Unscaled generator `iA`; used by the Peano–Baker oracle.
pub struct OriginalSystem<'a> {
    pub coef: &'a Coefficient,
    pub xi: f64,
}

impl LinearGenerator for OriginalSystem<'_> {
    fn matrix(&self, t: f64) -> Mat2 {
        let lam = self.coef.lambda(t);
        let om = self.coef.omega(t);
        let off = lam * self.xi;
        Mat2::new(
            C64::new(self.coef.lambda_log_derivative(t), 0.0),
            I * off,
            I * (off * om * om),
            C64::new(0.0, 0.0),
        )
    }

    fn frequency(&self, t: f64) -> f64 {
        self.coef.a(t) * self.xi.abs()
    }
}

/// `E(t, s, ξ)` stored as the scaled flow `F` times `exp(log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Propagation {
    pub s: f64,
    pub t: f64,
    pub xi: f64,
    /// Scaled flow divided by `exp(log_scale)`.
    pub flow: Mat2,
    pub log_scale: f64,
    /// `ln(λ(t)/λ(s))`.
    pub log_lambda_ratio: f64,
    pub stats: StepStats,
}

impl Propagation {
    /// `E(t, s, ξ)`; overflows for blow-up runs, use the log accessors there.
    pub fn matrix(&self) -> Mat2 {
        self.flow.scale_re((0.5 * self.log_lambda_ratio + self.log_scale).exp())
    }

    /// `‖E‖ / (λ(t)/λ(s))^{1/2}`.
    pub fn ratio(&self) -> f64 {
        self.flow.spectral_norm() * self.log_scale.exp()
    }

    pub fn log_norm(&self) -> f64 {
        self.flow.spectral_norm().ln() + self.log_scale + 0.5 * self.log_lambda_ratio
    }

    /// `|det E / (λ(t)/λ(s)) - 1|`.
    pub fn liouville_error(&self) -> f64 {
        let d = self.flow.det() * (2.0 * self.log_scale).exp();
        (d - C64::new(1.0, 0.0)).norm()
    }

    /// Eigenvalues of `E` in log-modulus form, larger first.
    pub fn log_eigen_moduli(&self) -> [f64; 2] {
        let ev = self.flow.eigenvalues();
        let shift = self.log_scale + 0.5 * self.log_lambda_ratio;
        [ev[0].norm().ln() + shift, ev[1].norm().ln() + shift]
    }
}

fn log_lambda_ratio(coef: &Coefficient, t: f64, s: f64) -> f64 {
    coef.lambda(t).ln() - coef.lambda(s).ln()
}

pub fn propagate(coef: &Coefficient, s: f64, t: f64, xi: f64, tol: &Tolerance) -> Result<Propagation> {
    let mut v = propagate_to_times(coef, s, &[t], xi, tol)?;
    Ok(v.pop().expect("one stop"))
}

/// `E(t_k, s, ξ)` for monotone `times`, in one sweep.
pub fn propagate_to_times(
    coef: &Coefficient,
    s: f64,
    times: &[f64],
    xi: f64,
    tol: &Tolerance,
) -> Result<Vec<Propagation>> {
    let sys = WaveSystem { coef, xi };
    let mut out = Vec::with_capacity(times.len());
    let stats = integrate_stops(&sys, s, dopri::mat_to_state(&Mat2::identity()), times, tol, |_, t, y, ls| {
        out.push(Propagation {
            s,
            t,
            xi,
            flow: dopri::state_to_mat(y),
            log_scale: ls,
            log_lambda_ratio: log_lambda_ratio(coef, t, s),
            stats: StepStats::default(),
        });
    })?;
    if let Some(last) = out.last_mut() {
        last.stats = stats;
    }
    Ok(out)
}

/// `E(t_k, s, ξ) v0` for monotone `times`; returns `(t, V, log_scale)` with
/// the true vector equal to `V exp(log_scale)`.
pub fn propagate_vector(
    coef: &Coefficient,
    s: f64,
    times: &[f64],
    xi: f64,
    v0: [C64; 2],
    tol: &Tolerance,
) -> Result<Vec<(f64, [C64; 2], f64)>> {
    let sys = WaveSystem { coef, xi };
    let mut out = Vec::with_capacity(times.len());
    let log_lam_s = coef.lambda(s).ln();
    integrate_stops(&sys, s, v0, times, tol, |_, t, y, ls| {
        out.push((t, *y, ls + 0.5 * (coef.lambda(t).ln() - log_lam_s)));
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{make_scale_set, make_shape, ScaleParams, ShapeFamily};

    fn free_wave() -> Coefficient {
        let shape = make_shape(ShapeFamily::Constant).unwrap();
        let scales = make_scale_set(&shape, ScaleParams::Constant, 2, 10.0).unwrap();
        Coefficient::unperturbed(shape, scales)
    }

    #[test]
    fn free_wave_matches_rotation() {
        let c = free_wave();
        let p = propagate(&c, 0.0, 3.0, 1.0, &Tolerance::new(1e-12)).unwrap();
        let e = p.matrix();
        let exact = Mat2::new(C64::new(3f64.cos(), 0.0), I * 3f64.sin(), I * 3f64.sin(), C64::new(3f64.cos(), 0.0));
        assert!((e - exact).max_abs() < 1e-10);
        assert!(p.liouville_error() < 1e-10);
    }
}
