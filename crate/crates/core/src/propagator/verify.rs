//! Zone-wise checks of the fundamental solution: two-sided ratio bounds,
//! entrywise pd-zone bounds and the intermediate-zone stabilisation factor.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{dopri, propagate_to_times, Propagation, Tolerance, WaveSystem};
use crate::coefficient::{Coefficient, PerturbationKind};
use crate::error::{invalid, Result};
use crate::grid::{geometric, linspace};
use crate::linalg::Mat2;
use crate::quad;
use crate::runner::TaskRunner;
use crate::zones::zone_boundaries;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatioSample {
    pub xi: f64,
    pub s: f64,
    pub t: f64,
    pub ratio: f64,
    pub liouville_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoSidedReport {
    pub samples: Vec<RatioSample>,
    /// Ratios of `E(s, t)` for `s < t`, sampled backward from the horizon.
    pub reversed: Vec<RatioSample>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Largest relative growth of the running max over the last decade.
    pub drift: f64,
    pub max_liouville_error: f64,
    pub constant: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoSidedSpec {
    pub t_max: f64,
    pub per_decade: usize,
    pub constant: f64,
    pub max_drift: f64,
    pub tol: Tolerance,
}

impl TwoSidedSpec {
    pub fn new(t_max: f64) -> Self {
        TwoSidedSpec { t_max, per_decade: 16, constant: 20.0, max_drift: 0.05, tol: Tolerance::new(1e-10) }
    }
}

/// Sample times from `s` to `t_max`: `s` itself, then geometric spacing.
pub fn ladder(s: f64, t_max: f64, per_decade: usize) -> Vec<f64> {
    let lo = if s > 0.0 { s } else { 1e-2f64.min(t_max) };
    let mut out = alloc::vec![s];
    if t_max > lo {
        out.extend(geometric(lo, t_max, per_decade).into_iter().filter(|&t| t > s));
    }
    out
}

/// Growth of the running max over `[t_end/10, t_end]`.
pub fn last_decade_growth(times: &[f64], values: &[f64]) -> f64 {
    let Some(&t_end) = times.last() else { return 0.0 };
    tail_growth(times, values, t_end / 10.0)
}

/// Growth of the running max over the samples with `t > cut`.
pub fn tail_growth(times: &[f64], values: &[f64], cut: f64) -> f64 {
    let mut head = f64::NAN;
    let mut run = f64::NEG_INFINITY;
    for (t, v) in times.iter().zip(values) {
        run = run.max(*v);
        if *t <= cut || head.is_nan() {
            head = run;
        }
    }
    run / head - 1.0
}

/// Decrease of the running min over the samples with `t > cut`, as a positive fraction.
pub fn tail_drop(times: &[f64], values: &[f64], cut: f64) -> f64 {
    let inv: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
    tail_growth(times, &inv, cut)
}

/// Decrease of the running min over the last decade, as a positive fraction.
pub fn last_decade_drop(times: &[f64], values: &[f64]) -> f64 {
    let neg: Vec<f64> = values.iter().map(|v| 1.0 / v).collect();
    last_decade_growth(times, &neg)
}

fn ratio_sample(p: &Propagation) -> RatioSample {
    RatioSample { xi: p.xi, s: p.s, t: p.t, ratio: p.ratio(), liouville_error: p.liouville_error() }
}

fn two_sided<R: TaskRunner>(
    coef: &Coefficient,
    xis: &[f64],
    spec: &TwoSidedSpec,
    runner: &R,
    start: impl Fn(f64) -> Result<f64> + Sync,
) -> Result<TwoSidedReport> {
    let per_xi = runner.map(xis, |&xi| -> Result<(Vec<RatioSample>, Vec<RatioSample>, f64)> {
        let s = start(xi)?;
        let times = ladder(s, spec.t_max, spec.per_decade);
        let fwd: Vec<RatioSample> =
            propagate_to_times(coef, s, &times, xi, &spec.tol)?.iter().map(ratio_sample).collect();
        let ts: Vec<f64> = fwd.iter().map(|r| r.t).collect();
        let rs: Vec<f64> = fwd.iter().map(|r| r.ratio).collect();
        let drift = last_decade_growth(&ts, &rs).max(last_decade_drop(&ts, &rs));
        let mut back_times: Vec<f64> = times.iter().rev().step_by(4).copied().collect();
        back_times.push(s);
        back_times.dedup();
        let back: Vec<RatioSample> = propagate_to_times(coef, spec.t_max, &back_times, xi, &spec.tol)?
            .iter()
            .map(ratio_sample)
            .collect();
        Ok((fwd, back, drift))
    });
    let mut samples = Vec::new();
    let mut reversed = Vec::new();
    let mut drift: f64 = 0.0;
    for r in per_xi {
        let (f, b, d) = r?;
        samples.extend(f);
        reversed.extend(b);
        drift = drift.max(d);
    }
    let all = samples.iter().chain(reversed.iter());
    let (mut lo, mut hi, mut liou) = (f64::INFINITY, 0.0f64, 0.0f64);
    for r in all {
        lo = lo.min(r.ratio);
        hi = hi.max(r.ratio);
        liou = liou.max(r.liouville_error);
    }
    let pass = lo >= 1.0 / spec.constant && hi <= spec.constant && drift < spec.max_drift;
    Ok(TwoSidedReport {
        samples,
        reversed,
        min_ratio: lo,
        max_ratio: hi,
        drift,
        max_liouville_error: liou,
        constant: spec.constant,
        pass,
    })
}

/// Two-sided bound for `ω ≡ 1` on `t, s >= t_ξ^(1)`.
pub fn verify_unperturbed_two_sided<R: TaskRunner>(
    coef: &Coefficient,
    xis: &[f64],
    spec: &TwoSidedSpec,
    runner: &R,
) -> Result<TwoSidedReport> {
    if coef.perturbation.kind != PerturbationKind::Identity {
        return Err(invalid("the unperturbed check needs omega = 1"));
    }
    two_sided(coef, xis, spec, runner, |xi| Ok(zone_boundaries(coef, xi)?.t1_or_zero()))
}

/// Two-sided bound for the full coefficient on the hyperbolic zone.
pub fn verify_hyp_zone<R: TaskRunner>(
    coef: &Coefficient,
    xis: &[f64],
    spec: &TwoSidedSpec,
    runner: &R,
) -> Result<TwoSidedReport> {
    two_sided(coef, xis, spec, runner, |xi| Ok(zone_boundaries(coef, xi)?.t2_effective()))
}

/// Smallest constants `C` in the entrywise pd-zone bounds.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EntryBoundReport {
    /// `E(t, s)` for `t <= s = t_ξ^(1)`, entries `[11, 12, 21, 22]`.
    pub backward: [f64; 4],
    /// `E(t, t0)` for `t0 <= t <= t_ξ^(1)`.
    pub forward: [f64; 4],
    pub samples: usize,
}

fn entry_ratios(e: &Mat2, bounds: [f64; 4], acc: &mut [f64; 4]) {
    let vals = [e.m[0][0].norm(), e.m[0][1].norm(), e.m[1][0].norm(), e.m[1][1].norm()];
    for k in 0..4 {
        if bounds[k] > 0.0 {
            acc[k] = acc[k].max(vals[k] / bounds[k]);
        }
    }
}

pub fn verify_pd_zone(coef: &Coefficient, xis: &[f64], t0: f64, points: usize, tol: &Tolerance) -> Result<EntryBoundReport> {
    let mut backward = [0.0f64; 4];
    let mut forward = [0.0f64; 4];
    let mut samples = 0;
    for &xi in xis {
        let Some(s) = zone_boundaries(coef, xi)?.t1 else { continue };
        if s <= t0 {
            continue;
        }
        let (lam_s, big_s) = (coef.lambda(s), coef.primitive(s));
        let mut back_times = linspace(t0, s, points);
        back_times.reverse();
        for p in propagate_to_times(coef, s, &back_times, xi, tol)? {
            let lt = coef.lambda(p.t);
            let b = [lt / lam_s, lt * (s - p.t) / big_s, lt / lam_s, 1.0];
            entry_ratios(&p.matrix(), b, &mut backward);
            samples += 1;
        }
        let lam0 = coef.lambda(t0);
        for p in propagate_to_times(coef, t0, &linspace(t0, s, points), xi, tol)? {
            let lt = coef.lambda(p.t);
            let b = [lt / lam0, lt * (p.t - t0) / coef.primitive(p.t), 1.0, 1.0];
            entry_ratios(&p.matrix(), b, &mut forward);
            samples += 1;
        }
    }
    Ok(EntryBoundReport { backward, forward, samples })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilisationRow {
    pub xi: f64,
    pub t1: f64,
    pub t2: f64,
    pub sup_q: f64,
    pub sup_q_inv: f64,
    pub max_det_error: f64,
    /// `|ξ| ∫_{t1}^{t2} λ |ω² - 1|`.
    pub stabilisation: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilisationReport {
    pub rows: Vec<StabilisationRow>,
    pub pass: bool,
}

/// `|ξ| ∫_a^b λ |ω² - 1| dt`, integrated packet by packet.
pub fn stabilisation_integral(coef: &Coefficient, xi: f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for p in &coef.perturbation.packets {
        let (lo, hi) = (p.t.max(a), p.end().min(b));
        if hi <= lo {
            continue;
        }
        let f = |t: f64| {
            let w = coef.omega(t);
            coef.lambda(t) * (w * w - 1.0).abs()
        };
        let panels = if coef.perturbation.kind == PerturbationKind::Counterexample { p.nu.min(4096) as usize } else { 1 };
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let (x0, x1) = (lo + k as f64 * h, lo + (k + 1) as f64 * h);
            total += quad::integrate(f, x0, x1, 0.0, 1e-10).value;
        }
    }
    xi.abs() * total
}

/// `Q_int(t) = E_λ(t1, t) E(t, t1)` on the intermediate zone.
pub fn verify_int_zone(coef: &Coefficient, xis: &[f64], points: usize, tol: &Tolerance) -> Result<StabilisationReport> {
    let free = coef.without_perturbation();
    let mut rows = Vec::new();
    for &xi in xis {
        let z = zone_boundaries(coef, xi)?;
        let (t1, t2) = (z.t1_or_zero(), z.t2_effective());
        if t2 <= t1 {
            continue;
        }
        let times = linspace(t1, t2, points.max(2));
        let full = collect_flows(coef, t1, &times, xi, tol)?;
        let base = collect_flows(&free, t1, &times, xi, tol)?;
        let (mut sq, mut sqi, mut de) = (0.0f64, 0.0f64, 0.0f64);
        for (f, b) in full.iter().zip(&base) {
            let q = b.inverse()? * *f;
            sq = sq.max(q.spectral_norm());
            sqi = sqi.max(q.inverse()?.spectral_norm());
            de = de.max((q.det() - crate::linalg::C64::new(1.0, 0.0)).norm());
        }
        rows.push(StabilisationRow {
            xi,
            t1,
            t2,
            sup_q: sq,
            sup_q_inv: sqi,
            max_det_error: de,
            stabilisation: stabilisation_integral(coef, xi, t1, t2),
        });
    }
    let pass = rows.iter().all(|r| r.sup_q.is_finite() && r.sup_q_inv.is_finite() && r.max_det_error < 1e-7);
    Ok(StabilisationReport { rows, pass })
}

/// Scaled flows `F(t_k, s)` including the renormalisation factor.
fn collect_flows(coef: &Coefficient, s: f64, times: &[f64], xi: f64, tol: &Tolerance) -> Result<Vec<Mat2>> {
    let sys = WaveSystem { coef, xi };
    let mut out = Vec::with_capacity(times.len());
    dopri::integrate_stops(&sys, s, dopri::mat_to_state(&Mat2::identity()), times, tol, |_, _, y, ls| {
        out.push(dopri::state_to_mat(y).scale_re(ls.exp()));
    })?;
    Ok(out)
}
