//! Adapted hyperbolic energy `E_λ(t; u) = ½∫(λ²|∇u|² + |u_t|²) dx` for
//! radial spectral Cauchy data, evaluated through Plancherel: every radial
//! frequency is evolved with the propagator and the squared norms are summed
//! with a composite Gauss rule in `|ξ|`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficient::{smooth_step, Coefficient};
use crate::error::{invalid, Result};
use crate::grid::tail_start;
use crate::linalg::{vec_norm, C64};
use crate::propagator::verify::{tail_drop, tail_growth};
use crate::propagator::{propagate, propagate_vector, Tolerance};
use crate::quad;
use crate::runner::TaskRunner;
use crate::zones::zone_boundaries;

/// Radial data `û_i(ξ) = amp_i · P(|ξ|)` at time `t0`, where `P` is a smooth
/// plateau on `[rho_lo, rho_hi]`. With `rho_lo = 0` the plateau reaches the
/// origin and only the outer edge is smoothed.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CauchyData {
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// Transition width as a fraction of `rho_hi - rho_lo`.
    pub edge: f64,
    pub amp1: C64,
    pub amp2: C64,
    pub dimension: u32,
    pub t0: f64,
}

impl CauchyData {
    pub fn annulus(rho_lo: f64, rho_hi: f64) -> Self {
        CauchyData {
            rho_lo,
            rho_hi,
            edge: 0.2,
            amp1: C64::new(1.0, 0.0),
            amp2: C64::new(0.0, 1.0),
            dimension: 1,
            t0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_lo >= 0.0 && self.rho_hi > self.rho_lo && self.rho_hi.is_finite()) {
            return Err(invalid("need 0 <= rho_lo < rho_hi < inf"));
        }
        if !(self.edge > 0.0 && self.edge <= 0.5) {
            return Err(invalid("edge fraction must lie in (0, 1/2]"));
        }
        if self.dimension == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if !(self.t0 >= 0.0) {
            return Err(invalid("t0 must be non-negative"));
        }
        Ok(())
    }

    pub fn has_gap(&self) -> bool {
        self.rho_lo > 0.0
    }

    pub fn plateau(&self, r: f64) -> f64 {
        let w = self.edge * (self.rho_hi - self.rho_lo);
        let outer = smooth_step((self.rho_hi - r) / w);
        if self.rho_lo > 0.0 {
            outer * smooth_step((r - self.rho_lo) / w)
        } else {
            outer
        }
    }

    /// `(λ(t0)|ξ|û₁, û₂)`.
    pub fn initial_vector(&self, coef: &Coefficient, r: f64) -> [C64; 2] {
        let p = self.plateau(r);
        [self.amp1 * (coef.lambda(self.t0) * r * p), self.amp2 * p]
    }

    /// Surface measure of the unit sphere times `r^{n-1}`.
    pub fn radial_weight(&self, r: f64) -> f64 {
        sphere_area(self.dimension) * r.powi(self.dimension as i32 - 1)
    }

    fn radial<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        quad::integrate(|r| f(r) * self.radial_weight(r), self.rho_lo, self.rho_hi, 0.0, 1e-12).value
    }

    /// `(‖u₁‖²_{H¹}, ‖u₂‖²_{L²}, ‖∇u₁‖²)`.
    pub fn norms(&self) -> (f64, f64, f64) {
        let a1 = self.amp1.norm_sqr();
        let a2 = self.amp2.norm_sqr();
        let grad = a1 * self.radial(|r| r * r * self.plateau(r).powi(2));
        let l2 = a1 * self.radial(|r| self.plateau(r).powi(2));
        let u2 = a2 * self.radial(|r| self.plateau(r).powi(2));
        (l2 + grad, u2, grad)
    }

    /// `½(λ(t0)²‖∇u₁‖² + ‖u₂‖²)`.
    pub fn initial_energy(&self, coef: &Coefficient) -> f64 {
        let (_, u2, grad) = self.norms();
        0.5 * (coef.lambda(self.t0).powi(2) * grad + u2)
    }
}

/// `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    use core::f64::consts::PI;
    let mut area = if n % 2 == 1 { 2.0 } else { 2.0 * PI };
    let mut k = if n % 2 == 1 { 1 } else { 2 };
    while k < n {
        area *= 2.0 * PI / k as f64;
        k += 2;
    }
    area
}

/// Composite Gauss rule in `|ξ|`, with panel breaks at the plateau edges so
/// that the flat-to-smooth transitions get their own panels.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadSpec {
    pub order: usize,
    pub edge_panels: usize,
    pub plateau_panels: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { order: 8, edge_panels: 4, plateau_panels: 2 }
    }
}

impl QuadSpec {
    pub fn doubled(&self) -> Self {
        QuadSpec { order: self.order, edge_panels: 2 * self.edge_panels, plateau_panels: 2 * self.plateau_panels }
    }

    pub fn nodes(&self, data: &CauchyData) -> (Vec<f64>, Vec<f64>) {
        let w = data.edge * (data.rho_hi - data.rho_lo);
        let mut segments = Vec::with_capacity(3);
        if data.has_gap() {
            segments.push((data.rho_lo, data.rho_lo + w, self.edge_panels));
            segments.push((data.rho_lo + w, data.rho_hi - w, self.plateau_panels));
        } else {
            segments.push((0.0, data.rho_hi - w, self.plateau_panels));
        }
        segments.push((data.rho_hi - w, data.rho_hi, self.edge_panels));
        let (mut x, mut wt) = (Vec::new(), Vec::new());
        for (a, b, p) in segments {
            if b > a {
                let (xs, ws) = quad::composite_gauss(a, b, self.order, p.max(1));
                x.extend(xs);
                wt.extend(ws);
            }
        }
        (x, wt)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `E_λ(t)/λ(t)`.
    pub ratios: Vec<f64>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Worst of the running-max growth and running-min drop over the tail.
    pub drift: f64,
}

impl EnergyTrace {
    pub fn spread(&self) -> f64 {
        self.max_ratio / self.min_ratio
    }
}

/// `E_λ(t; u)` at every time in `times` (increasing, all `>= data.t0`).
pub fn energy_trace<R: TaskRunner>(
    coef: &Coefficient,
    data: &CauchyData,
    times: &[f64],
    q: &QuadSpec,
    tol: &Tolerance,
    runner: &R,
) -> Result<EnergyTrace> {
    data.validate()?;
    if times.is_empty() || times[0] < data.t0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("times must be increasing and start at or after t0"));
    }
    let (nodes, weights) = q.nodes(data);
    let per_node = runner.map(&nodes, |&r| -> Result<Vec<f64>> {
        let v0 = data.initial_vector(coef, r);
        if vec_norm(v0) == 0.0 {
            return Ok(alloc::vec![0.0; times.len()]);
        }
        Ok(propagate_vector(coef, data.t0, times, r, v0, tol)?
            .into_iter()
            .map(|(_, v, ls)| (v[0].norm_sqr() + v[1].norm_sqr()) * (2.0 * ls).exp())
            .collect())
    });
    let mut values = alloc::vec![0.0; times.len()];
    for ((res, &w), &r) in per_node.into_iter().zip(&weights).zip(&nodes) {
        let density = res?;
        let wr = 0.5 * w * data.radial_weight(r);
        for (acc, d) in values.iter_mut().zip(density) {
            *acc += wr * d;
        }
    }
    let ratios: Vec<f64> = times.iter().zip(&values).map(|(&t, &e)| e / coef.lambda(t)).collect();
    let cut = tail_start(coef.shape.family(), *times.last().expect("non-empty"));
    let drift = tail_growth(times, &ratios, cut).max(tail_drop(times, &ratios, cut));
    Ok(EnergyTrace {
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        times: times.to_vec(),
        values,
        ratios,
        drift,
    })
}

pub fn energy<R: TaskRunner>(
    coef: &Coefficient,
    data: &CauchyData,
    t: f64,
    q: &QuadSpec,
    tol: &Tolerance,
    runner: &R,
) -> Result<f64> {
    Ok(energy_trace(coef, data, &[t], q, tol, runner)?.values[0])
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    /// Sup (upper bound) or inf (lower bound) of the normalised energy.
    pub constant: f64,
    pub drift: f64,
    pub max_drift: f64,
    pub pass: bool,
}

/// `sup_t E_λ(t)/(λ(t)(‖u₁‖²_{H¹} + ‖u₂‖²_{L²}))` with tail stability.
pub fn verify_upper_bound(coef: &Coefficient, data: &CauchyData, trace: &EnergyTrace, max_drift: f64) -> BoundReport {
    let (h1, l2, _) = data.norms();
    let norm = h1 + l2;
    let normalised: Vec<f64> = trace.ratios.iter().map(|r| r / norm).collect();
    let constant = normalised.iter().copied().fold(0.0, f64::max);
    let cut = tail_start(coef.shape.family(), *trace.times.last().unwrap_or(&0.0));
    let drift = tail_growth(&trace.times, &normalised, cut);
    BoundReport { constant, drift, max_drift, pass: constant.is_finite() && drift < max_drift }
}

/// `inf_t E_λ(t)/λ(t)` with tail stability; needs data with a spectral gap.
pub fn verify_lower_bound(
    coef: &Coefficient,
    data: &CauchyData,
    trace: &EnergyTrace,
    max_drift: f64,
) -> Result<BoundReport> {
    if !data.has_gap() {
        return Err(invalid("the lower bound needs data vanishing near the origin"));
    }
    let cut = tail_start(coef.shape.family(), *trace.times.last().unwrap_or(&0.0));
    let drift = tail_drop(&trace.times, &trace.ratios, cut);
    let constant = trace.min_ratio;
    Ok(BoundReport { constant, drift, max_drift, pass: constant > 0.0 && drift < max_drift })
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScatteringSample {
    pub t: f64,
    /// `λ(t)^{-1/2} ‖V(t) - Ê(t) w̃‖ / ‖λ(t)^{-1/2} V(t)‖`.
    pub deficiency: f64,
    /// `‖Ê(t) w̃‖ / (√λ(t) ‖w̃‖)`.
    pub norm_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scattering {
    pub xi: f64,
    pub t1: f64,
    pub w: [C64; 2],
    pub samples: Vec<ScatteringSample>,
}

/// `w̃ = λ(t₁)^{-1/2} E(t₁, t0, ξ) V0` at `t₁ = t_ξ^(1)` (or `t0` when the
/// pd zone is empty).
pub fn scattering_data(coef: &Coefficient, data: &CauchyData, xi: f64, tol: &Tolerance) -> Result<([C64; 2], f64)> {
    data.validate()?;
    if !data.has_gap() {
        return Err(invalid("scattering data needs a spectral gap"));
    }
    let t1 = zone_boundaries(coef, xi)?.t1_or_zero().max(data.t0);
    let v0 = data.initial_vector(coef, xi);
    let v1 = propagate(coef, data.t0, t1, xi, tol)?.matrix().apply(v0);
    let s = coef.lambda(t1).sqrt().recip();
    Ok(([v1[0] * s, v1[1] * s], t1))
}

/// Compares the direct evolution `V(t) = E(t, t0) V0` with the scattering
/// representation `Ê(t) w̃ = λ(t₁)^{1/2} E(t, t₁) w̃` at the given times past `t₁`.
pub fn scattering_check(
    coef: &Coefficient,
    data: &CauchyData,
    xi: f64,
    times: &[f64],
    tol: &Tolerance,
) -> Result<Scattering> {
    let (w, t1) = scattering_data(coef, data, xi, tol)?;
    let times: Vec<f64> = times.iter().copied().filter(|&t| t > t1).collect();
    let v0 = data.initial_vector(coef, xi);
    let direct = propagate_vector(coef, data.t0, &times, xi, v0, tol)?;
    let lam1 = coef.lambda(t1).sqrt();
    let w_scaled = [w[0] * lam1, w[1] * lam1];
    let via = propagate_vector(coef, t1, &times, xi, w_scaled, tol)?;
    let w_norm = vec_norm(w);
    let samples = direct
        .iter()
        .zip(&via)
        .map(|(&(t, v, lv), &(_, u, lu))| {
            let s = coef.lambda(t).sqrt().recip();
            let a = [v[0] * (lv.exp() * s), v[1] * (lv.exp() * s)];
            let b = [u[0] * (lu.exp() * s), u[1] * (lu.exp() * s)];
            let diff = vec_norm([a[0] - b[0], a[1] - b[1]]);
            ScatteringSample { t, deficiency: diff / vec_norm(a), norm_ratio: vec_norm(b) / w_norm }
        })
        .collect();
    Ok(Scattering { xi, t1, w, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{make_scale_set, make_shape, ScaleParams, ShapeFamily};
    use crate::runner::Sequential;

    fn free() -> Coefficient {
        let shape = make_shape(ShapeFamily::Constant).unwrap();
        let scales = make_scale_set(&shape, ScaleParams::Constant, 2, 10.0).unwrap();
        Coefficient::unperturbed(shape, scales)
    }

    #[test]
    fn sphere_areas() {
        use core::f64::consts::PI;
        assert_eq!(sphere_area(1), 2.0);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn initial_energy_matches_direct_norms() {
        let c = free();
        let d = CauchyData::annulus(1.0, 2.0);
        let e = energy(&c, &d, 0.0, &QuadSpec::default(), &Tolerance::new(1e-12), &Sequential).unwrap();
        let direct = d.initial_energy(&c);
        assert!((e - direct).abs() <= 1e-8 * direct, "{e} vs {direct}");
    }

    #[test]
    fn plateau_vanishes_below_gap() {
        let d = CauchyData::annulus(1.0, 2.0);
        assert_eq!(d.plateau(0.99), 0.0);
        assert_eq!(d.plateau(1.5), 1.0);
        let z = CauchyData::annulus(0.0, 1.0);
        assert_eq!(z.plateau(0.0), 1.0);
    }

    #[test]
    fn free_wave_scattering_is_a_rotation() {
        let c = free();
        let d = CauchyData::annulus(1.0, 2.0);
        let tol = Tolerance::new(1e-12);
        let (w, t1) = scattering_data(&c, &d, 1.5, &tol).unwrap();
        let v0 = d.initial_vector(&c, 1.5);
        let (s, c) = (1.5 * t1).sin_cos();
        let expect = [v0[0] * c + crate::linalg::I * v0[1] * s, crate::linalg::I * v0[0] * s + v0[1] * c];
        assert!(vec_norm([w[0] - expect[0], w[1] - expect[1]]) < 1e-10);
    }
}
