//! Diagonalization hierarchy in the hyperbolic zone.
//!
//! With `M = [[1/ω, -1/ω], [1, 1]]` the system `D_t V = A V` becomes
//! `D_t V⁰ = (D_1 + R_1) V⁰` with diagonal `D_1 = diag(τ_1^+, τ_1^-)` and
//! antidiagonal `R_1`. Each further step conjugates with `I + N^(k)`,
//! where `N^(k)` solves `[D_k, N^(k)] = -R_k`:
//!
//! `D_{k+1} + R_{k+1} = (I + N)^{-1} ((D_k + R_k)(I + N) - D_t N)`.
//!
//! All symbols are carried as jets in `t`, so `D_t N` is exact. Every level
//! consumes one order of the jet, which is the derivative budget.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficient::Coefficient;
use crate::error::{invalid, Error, Result};
use crate::jet::CJet;
use crate::linalg::{Mat2, C64, I};
use crate::quad;

/// `|d_k|` above this is reported as a weak invertibility margin.
pub const MARGIN_WARNING: f64 = 0.9;

/// One level of the hierarchy at a point `(t, ξ)`.
#[derive(Clone, Copy, Debug)]
pub struct Level {
    pub k: usize,
    pub tau_plus: CJet,
    pub tau_minus: CJet,
    /// Upper-right entry of `R_k`.
    pub r12: CJet,
    /// Lower-left entry of `R_k`.
    pub r21: CJet,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl Level {
    pub fn delta(&self) -> CJet {
        self.tau_plus - self.tau_minus
    }

    /// `β_k`, with `R_k = [[0, -i conj β], [i β, 0]]` under hypothesis `H_k`.
    pub fn beta(&self) -> C64 {
        -I * self.r21.value()
    }

    /// `d_k = -det N^(k)`.
    pub fn d(&self) -> CJet {
        let delta = self.delta();
        -(self.r12 * self.r21) / (delta * delta)
    }

    /// `N^(k)` entries as jets `(n12, n21)`.
    pub fn n_entries(&self) -> (CJet, CJet) {
        let inv = self.delta().recip();
        (-(self.r12 * inv), self.r21 * inv)
    }

    pub fn n_matrix(&self) -> Mat2 {
        let (n12, n21) = self.n_entries();
        Mat2::new(c(0.0, 0.0), n12.value(), n21.value(), c(0.0, 0.0))
    }

    /// Deviation from hypothesis `H_k` (`r12 = -conj(r21)`), relative.
    pub fn hypothesis_defect(&self) -> f64 {
        let (a, b) = (self.r12.value(), self.r21.value());
        (a + b.conj()).norm() / (a.norm() + b.norm()).max(f64::MIN_POSITIVE)
    }

    /// Derivatives still available at this level.
    pub fn budget(&self) -> usize {
        self.r12.len().min(self.tau_plus.len()) - 1
    }
}

/// Zero step: diagonalise the principal part with `M(t)`.
pub fn step0(coef: &Coefficient, t: f64, xi: f64) -> Result<Level> {
    if !(xi > 0.0) {
        return Err(invalid("frequency must be positive"));
    }
    let a = coef.a_jet(t);
    if !(a.value() > 0.0) {
        return Err(invalid("a(t) must be positive"));
    }
    let log_rate = (a.derivative() / a.truncate(a.len() - 1)) * 0.5;
    let a = a.truncate(log_rate.len()).to_complex();
    let damp = log_rate.to_complex().scale(-I);
    let r = log_rate.to_complex().scale(I);
    Ok(Level { k: 1, tau_plus: a * xi + damp, tau_minus: -(a * xi) + damp, r12: r, r21: r })
}

/// One conjugation step `k -> k + 1`.
pub fn step_k(level: &Level) -> Result<Level> {
    if level.budget() < 1 {
        return Err(Error::DerivativeBudget { level: level.k });
    }
    let d = level.d();
    let dv = d.value();
    if !(dv.norm() < 1.0) {
        return Err(Error::ZoneConstantTooSmall { level: level.k, d: dv.norm() });
    }
    let (n12, n21) = level.n_entries();
    let len = n12.len() - 1;
    let (n12, n21) = (n12.truncate(len + 1), n21.truncate(len + 1));
    // D_t N = -i N'.
    let dn12 = n12.derivative().scale(-I);
    let dn21 = n21.derivative().scale(-I);
    let (n12, n21) = (n12.truncate(len), n21.truncate(len));
    let r12 = level.r12.truncate(len);
    let r21 = level.r21.truncate(len);
    // X = R N - D_t N.
    let x11 = r12 * n21;
    let x22 = r21 * n12;
    let x12 = -dn12;
    let x21 = -dn21;
    let inv = (-d.truncate(len) + 1.0).recip();
    Ok(Level {
        k: level.k + 1,
        tau_plus: level.tau_plus.truncate(len) + (x11 - n12 * x21) * inv,
        tau_minus: level.tau_minus.truncate(len) + (x22 - n21 * x12) * inv,
        r12: (x12 - n12 * x22) * inv,
        r21: (x21 - n21 * x11) * inv,
    })
}

/// Levels `1..=k_max` at `(t, ξ)` plus the accumulated transform
/// `M(t) (I + N^(1)) ... (I + N^(k_max - 1))`.
#[derive(Clone, Debug)]
pub struct DiagonalizerState {
    pub t: f64,
    pub xi: f64,
    pub levels: Vec<Level>,
    pub transform: Mat2,
    /// Some level had `|d_k| >= MARGIN_WARNING`.
    pub weak_margin: bool,
}

impl DiagonalizerState {
    pub fn level(&self, k: usize) -> &Level {
        &self.levels[k - 1]
    }
}

pub fn zero_step_matrix(coef: &Coefficient, t: f64) -> Mat2 {
    let w = 1.0 / coef.omega(t);
    Mat2::real(w, -w, 1.0, 1.0)
}

pub fn diagonalize(coef: &Coefficient, t: f64, xi: f64, k_max: usize) -> Result<DiagonalizerState> {
    if k_max == 0 {
        return Err(invalid("k_max must be at least 1"));
    }
    let mut levels = Vec::with_capacity(k_max);
    levels.push(step0(coef, t, xi)?);
    let mut transform = zero_step_matrix(coef, t);
    let mut weak_margin = false;
    while levels.len() < k_max {
        let last = levels.last().expect("non-empty");
        weak_margin |= last.d().value().norm() >= MARGIN_WARNING;
        let next = step_k(last)?;
        transform = transform * (Mat2::identity() + last.n_matrix());
        levels.push(next);
    }
    Ok(DiagonalizerState { t, xi, levels, transform, weak_margin })
}

/// One CSV-ready row per level.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LevelSample {
    pub t: f64,
    pub xi: f64,
    pub k: usize,
    pub tau_plus: C64,
    pub tau_minus: C64,
    pub beta_abs: f64,
    pub d: f64,
    /// `|Im δ_k| / |δ_k|`.
    pub delta_imag_rel: f64,
}

pub fn sample_levels(coef: &Coefficient, t: f64, xi: f64, k_max: usize) -> Result<Vec<LevelSample>> {
    let st = diagonalize(coef, t, xi, k_max)?;
    Ok(st
        .levels
        .iter()
        .map(|l| {
            let delta = l.delta().value();
            LevelSample {
                t,
                xi,
                k: l.k,
                tau_plus: l.tau_plus.value(),
                tau_minus: l.tau_minus.value(),
                beta_abs: l.beta().norm(),
                d: l.d().value().re,
                delta_imag_rel: delta.im.abs() / delta.norm(),
            }
        })
        .collect())
}

/// Worst deviations of the imaginary parts over the sample points.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImaginaryPartReport {
    pub points: usize,
    /// `|Im τ_1 + a'/(2a)|`.
    pub level_one_error: f64,
    /// `max_k |Im τ_k^+ - Im τ_k^-|`, indexed by `k - 1`.
    pub pm_mismatch: Vec<f64>,
    /// `|Im τ_k - (-a'/(2a) - Σ_{j<k} ∂_t d_j / (2 (1 - d_j)))|`, indexed by `k - 1`.
    pub sum_formula_error: Vec<f64>,
    /// `max_k |Im δ_k| / |δ_k|`.
    pub delta_imag_rel: Vec<f64>,
    /// Largest `|d_k|` seen.
    pub max_d: f64,
}

/// Checks the imaginary-part identities at each `(t, ξ)`.
pub fn check_imaginary_parts(coef: &Coefficient, k_max: usize, points: &[(f64, f64)]) -> Result<ImaginaryPartReport> {
    let mut rep = ImaginaryPartReport {
        points: points.len(),
        pm_mismatch: alloc::vec![0.0; k_max],
        sum_formula_error: alloc::vec![0.0; k_max],
        delta_imag_rel: alloc::vec![0.0; k_max],
        ..Default::default()
    };
    for &(t, xi) in points {
        let st = diagonalize(coef, t, xi, k_max)?;
        let a = coef.a_jet(t);
        let base = -a.deriv(1) / (2.0 * a.value());
        rep.level_one_error = rep.level_one_error.max((st.level(1).tau_plus.value().im - base).abs());
        let mut predicted = base;
        for (i, l) in st.levels.iter().enumerate() {
            let (tp, tm) = (l.tau_plus.value(), l.tau_minus.value());
            let scale = 1.0 + base.abs();
            rep.pm_mismatch[i] = rep.pm_mismatch[i].max((tp.im - tm.im).abs() / scale);
            rep.sum_formula_error[i] = rep.sum_formula_error[i].max((tp.im - predicted).abs() / scale);
            let delta = l.delta().value();
            rep.delta_imag_rel[i] = rep.delta_imag_rel[i].max(delta.im.abs() / delta.norm());
            let d = l.d();
            rep.max_d = rep.max_d.max(d.value().norm());
            if d.len() >= 2 {
                let dv = d.value().re;
                predicted -= d.deriv(1).re / (2.0 * (1.0 - dv));
            }
        }
    }
    Ok(rep)
}

/// Compares `∫_s^t ∂_t d_k / (2 (1 - d_k))` (quadrature of the jets) with
/// `-(1/2) ln((1 - d_k(t)) / (1 - d_k(s)))`. Returns the absolute gap.
pub fn telescoping_gap(coef: &Coefficient, xi: f64, k: usize, s: f64, t: f64) -> Result<f64> {
    let level_at = |x: f64| diagonalize(coef, x, xi, k).map(|st| *st.level(k));
    let mut failure = None;
    let integral = quad::integrate(
        |x| match level_at(x) {
            Ok(l) => {
                let d = l.d();
                d.deriv(1).re / (2.0 * (1.0 - d.value().re))
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        s,
        t,
        1e-15,
        1e-12,
    )
    .value;
    if let Some(e) = failure {
        return Err(e);
    }
    let ds = level_at(s)?.d().value().re;
    let dt = level_at(t)?.d().value().re;
    let closed = -0.5 * ((1.0 - dt) / (1.0 - ds)).ln();
    Ok((integral - closed).abs())
}

/// Symbol-class statistic for `R_k`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymbolDecayRow {
    pub k: usize,
    /// `sup |β_k| (|ξ| λ)^{k-1} Ξ^k` over the samples.
    pub sup: f64,
    /// Per-packet suprema `(j, sup)` along the time axis.
    pub packet_sups: Vec<(usize, f64)>,
    /// `min |δ_k| / (2 a |ξ|)`: eigenvalue separation.
    pub separation: f64,
}

pub fn check_symbol_decay(coef: &Coefficient, k_max: usize, points: &[(f64, f64)]) -> Result<Vec<SymbolDecayRow>> {
    let mut rows: Vec<SymbolDecayRow> = (1..=k_max)
        .map(|k| SymbolDecayRow { k, sup: 0.0, packet_sups: Vec::new(), separation: f64::INFINITY })
        .collect();
    for &(t, xi) in points {
        let st = diagonalize(coef, t, xi, k_max)?;
        let lam = coef.lambda(t);
        let weight_xi = coef.scales.xi_weight(t);
        let packet = coef.perturbation.packet_at(t);
        for (row, l) in rows.iter_mut().zip(&st.levels) {
            let k = l.k as i32;
            let v = l.beta().norm() * (xi * lam).powi(k - 1) * weight_xi.powi(k);
            row.sup = row.sup.max(v);
            row.separation = row.separation.min(l.delta().value().norm() / (2.0 * coef.a(t) * xi));
            if let Some(j) = packet {
                match row.packet_sups.last_mut() {
                    Some(last) if last.0 == j + 1 => last.1 = last.1.max(v),
                    _ => row.packet_sups.push((j + 1, v)),
                }
            }
        }
    }
    Ok(rows)
}

/// `∫_{t_lo}^{t_hi} |β_k(τ, ξ)| dτ`, the integrability statistic of `R_k`.
pub fn beta_integral(coef: &Coefficient, xi: f64, k: usize, t_lo: f64, t_hi: f64) -> Result<f64> {
    let mut failure = None;
    let v = quad::integrate(
        |x| match diagonalize(coef, x, xi, k) {
            Ok(st) => st.level(k).beta().norm(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        t_lo,
        t_hi,
        1e-300,
        1e-8,
    )
    .value;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Relative residual of the conjugation identity
/// `(D_t - D_k - R_k)(I + N) v = (I + N)(D_t - D_{k+1} - R_{k+1}) v`
/// for a smooth test vector `v`, with `D_t` taken by central differences.
pub fn operator_identity_residual(coef: &Coefficient, t: f64, xi: f64, k: usize, v: impl Fn(f64) -> [C64; 2]) -> Result<f64> {
    let h = 1e-4 * coef.scales.xi_weight(t).min(1.0 / coef.lambda_log_derivative(t).abs().max(1e-300)).min(1.0);
    let at = |x: f64| -> Result<(Level, Level)> {
        let st = diagonalize(coef, x, xi, k + 1)?;
        Ok((*st.level(k), *st.level(k + 1)))
    };
    let plus_n = |l: &Level| Mat2::identity() + l.n_matrix();
    let apply_sym = |l: &Level, w: [C64; 2]| -> [C64; 2] {
        [l.tau_plus.value() * w[0] + l.r12.value() * w[1], l.r21.value() * w[0] + l.tau_minus.value() * w[1]]
    };
    // Fourth-order central differences.
    let dt = |f: &dyn Fn(f64) -> Result<[C64; 2]>| -> Result<[C64; 2]> {
        let (a, b, cc, d) = (f(t - 2.0 * h)?, f(t - h)?, f(t + h)?, f(t + 2.0 * h)?);
        let mut out = [c(0.0, 0.0); 2];
        for i in 0..2 {
            out[i] = -I * ((a[i] - d[i]) + (cc[i] - b[i]) * 8.0) / (12.0 * h);
        }
        Ok(out)
    };
    let (lk, lk1) = at(t)?;
    let w = |x: f64| -> Result<[C64; 2]> { Ok(plus_n(&at(x)?.0).apply(v(x))) };
    let dw = dt(&w)?;
    let sw = apply_sym(&lk, w(t)?);
    let lhs = [dw[0] - sw[0], dw[1] - sw[1]];
    let dv = dt(&|x| Ok(v(x)))?;
    let sv = apply_sym(&lk1, v(t));
    let rhs = plus_n(&lk).apply([dv[0] - sv[0], dv[1] - sv[1]]);
    let scale = dw[0].norm() + dw[1].norm() + sw[0].norm() + sw[1].norm();
    Ok(((lhs[0] - rhs[0]).norm() + (lhs[1] - rhs[1]).norm()) / scale)
}

/// `∫_s^t τ_k^±`, by adaptive quadrature of the level values.
pub fn phase_integral(coef: &Coefficient, xi: f64, k: usize, s: f64, t: f64) -> Result<(C64, C64)> {
    let mut failure = None;
    let mut part = |pick: fn(&Level) -> f64| {
        quad::integrate(
            |x| match diagonalize(coef, x, xi, k) {
                Ok(st) => pick(st.level(k)),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            s,
            t,
            1e-13,
            1e-13,
        )
        .value
    };
    let pr = part(|l| l.tau_plus.value().re);
    let pi = part(|l| l.tau_plus.value().im);
    let mr = part(|l| l.tau_minus.value().re);
    let mi = part(|l| l.tau_minus.value().im);
    match failure {
        Some(e) => Err(e),
        None => Ok((c(pr, pi), c(mr, mi))),
    }
}

/// Comparison of `‖E(t, s, ξ)‖` with the diagonal prediction
/// `exp(-∫_s^t Im τ_k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConsistencySample {
    pub s: f64,
    pub t: f64,
    pub xi: f64,
    pub norm: f64,
    pub predicted: f64,
    /// `κ(T(t)) κ(T(s)) exp(∫ ‖R_k‖)`: the admissible distortion.
    pub allowance: f64,
    pub pass: bool,
}

pub fn propagator_consistency(
    coef: &Coefficient,
    xi: f64,
    k: usize,
    s: f64,
    t: f64,
    tol: &crate::propagator::Tolerance,
) -> Result<ConsistencySample> {
    let e = crate::propagator::propagate(coef, s, t, xi, tol)?;
    let (plus, _) = phase_integral(coef, xi, k, s, t)?;
    let log_pred = -plus.im;
    let ts = diagonalize(coef, s, xi, k)?.transform.condition_number()?;
    let tt = diagonalize(coef, t, xi, k)?.transform.condition_number()?;
    let mut failure = None;
    let rk = quad::integrate(
        |x| match diagonalize(coef, x, xi, k) {
            Ok(st) => {
                let l = st.level(k);
                l.r12.value().norm().max(l.r21.value().norm())
            }
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        s,
        t,
        1e-300,
        1e-8,
    )
    .value;
    if let Some(e) = failure {
        return Err(e);
    }
    let allowance = ts * tt * rk.exp();
    let log_norm = e.log_norm();
    let gap = (log_norm - log_pred).abs();
    Ok(ConsistencySample {
        s,
        t,
        xi,
        norm: log_norm.exp(),
        predicted: log_pred.exp(),
        allowance,
        pass: gap <= allowance.ln() + 1e-9,
    })
}

/// `Q_2(t) = E_D(t)^{-1} T(t)^{-1} E(t, s) T(s)` for `ω ≡ 1`, where
/// `E_D = diag(exp(i ∫ τ_2^±))` and `T = M (I + N^(1))`. Returns
/// `(t, ‖Q_2(t) - Q_2(t_last)‖, Λ(t) |ξ|)` along `times`.
pub fn normal_form_convergence(
    coef: &Coefficient,
    xi: f64,
    s: f64,
    times: &[f64],
    tol: &crate::propagator::Tolerance,
) -> Result<Vec<(f64, f64, f64)>> {
    let flows = crate::propagator::propagate_to_times(coef, s, times, xi, tol)?;
    let ts = diagonalize(coef, s, xi, 2)?.transform;
    let mut qs = Vec::with_capacity(times.len());
    let (mut acc_p, mut acc_m) = (c(0.0, 0.0), c(0.0, 0.0));
    let mut prev = s;
    for (p, &t) in flows.iter().zip(times) {
        let (dp, dm) = phase_integral(coef, xi, 2, prev, t)?;
        acc_p += dp;
        acc_m += dm;
        prev = t;
        let tt = diagonalize(coef, t, xi, 2)?.transform;
        let ed_inv = Mat2::diag((-I * acc_p).exp(), (-I * acc_m).exp());
        let q = ed_inv * tt.inverse()? * p.matrix() * ts;
        qs.push(q);
    }
    let last = *qs.last().ok_or_else(|| invalid("empty time list"))?;
    Ok(times
        .iter()
        .zip(&qs)
        .map(|(&t, q)| (t, (*q - last).spectral_norm(), coef.primitive(t) * xi))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{make_scale_set, make_shape, ScaleParams, ShapeFamily};

    fn exponential() -> Coefficient {
        let shape = make_shape(ShapeFamily::Exponential).unwrap();
        let scales = make_scale_set(&shape, ScaleParams::Exponential { a: 0.5, b: -0.25 }, 2, 10.0).unwrap();
        Coefficient::unperturbed(shape, scales)
    }

    fn polynomial() -> Coefficient {
        let shape = make_shape(ShapeFamily::Polynomial { p: 2.0 }).unwrap();
        let scales =
            make_scale_set(&shape, ScaleParams::Polynomial { q: 1.0, r: 1.0, theta_exponent: None }, 2, 10.0).unwrap();
        Coefficient::unperturbed(shape, scales)
    }

    #[test]
    fn step0_direct_algebra() {
        let l = step0(&polynomial(), 1.0, 1.0).unwrap();
        assert!((l.tau_plus.value() - c(4.0, -0.5)).norm() < 1e-14);
        assert!((l.tau_minus.value() - c(-4.0, -0.5)).norm() < 1e-14);
        assert!((l.beta() - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn second_level_closed_form_for_exponential_shape() {
        let c0 = exponential();
        for &(t, xi) in &[(0.5, 1.0), (2.0, 0.3), (3.0, 0.05)] {
            let st = diagonalize(&c0, t, xi, 2).unwrap();
            let d1 = 1.0 / (16.0 * (2.0 * t).exp() * xi * xi);
            assert!((st.level(1).d().value().re - d1).abs() < 1e-15);
            let expect = -0.5 + d1 / (1.0 - d1);
            assert!((st.level(2).tau_plus.value().im - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_when_beta_vanishes() {
        let shape = make_shape(ShapeFamily::Constant).unwrap();
        let scales = make_scale_set(&shape, ScaleParams::Constant, 2, 10.0).unwrap();
        let c0 = Coefficient::unperturbed(shape, scales);
        let st = diagonalize(&c0, 1.0, 2.0, 3).unwrap();
        for l in &st.levels {
            assert_eq!(l.tau_plus.value(), c(2.0, 0.0));
            assert_eq!(l.beta(), c(0.0, 0.0));
        }
    }

    #[test]
    fn zone_constant_too_small_is_reported() {
        let err = diagonalize(&exponential(), 0.0, 0.1, 2).unwrap_err();
        assert!(matches!(err, Error::ZoneConstantTooSmall { level: 1, .. }));
    }

    #[test]
    fn budget_runs_out() {
        let err = diagonalize(&exponential().with_jet_len(3), 3.0, 1.0, 4).unwrap_err();
        assert!(matches!(err, Error::DerivativeBudget { .. }));
    }
}
