//! Periodic Hill system `∂_s X = i B X`, `B = [[0, λ̃], [λ̃(1+b)², 0]]`, its
//! monodromy over one period, instability intervals, and the counterexample
//! amplification and blow-up experiments built on them.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficient::{counterexample_sequence, BumpProfile, Coefficient, PerturbationKind, ShapeFamily, ScaleParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{Mat2, C64, I};
use crate::propagator::dopri::{flow, LinearGenerator, Tolerance};
use crate::propagator::propagate;

/// A monodromy is unstable when its larger eigenvalue modulus exceeds `1 + MARGIN`.
pub const MARGIN: f64 = 1e-6;

/// The 1-periodic profile `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HillProfile {
    Flat,
    Bump(BumpProfile),
}

impl HillProfile {
    pub fn b(&self, s: f64) -> f64 {
        match self {
            HillProfile::Flat => 0.0,
            HillProfile::Bump(p) => p.eval_periodic(s),
        }
    }

    /// `sup |b'| / (1 + b)`.
    pub fn gronwall_rate(&self) -> f64 {
        match self {
            HillProfile::Flat => 0.0,
            HillProfile::Bump(p) => p.gronwall_rate(),
        }
    }
}

struct HillSystem {
    profile: HillProfile,
    lambda_tilde: f64,
}

impl LinearGenerator for HillSystem {
    fn matrix(&self, s: f64) -> Mat2 {
        let w = 1.0 + self.profile.b(s);
        Mat2::new(C64::new(0.0, 0.0), I * self.lambda_tilde, I * (self.lambda_tilde * w * w), C64::new(0.0, 0.0))
    }

    fn frequency(&self, s: f64) -> f64 {
        self.lambda_tilde * (1.0 + self.profile.b(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MonodromyResult {
    pub lambda_tilde: f64,
    pub x: Mat2,
    /// Larger modulus first.
    pub eigenvalues: [C64; 2],
    pub max_modulus: f64,
    pub unstable: bool,
    pub det_error: f64,
}

impl MonodromyResult {
    pub fn trace(&self) -> C64 {
        self.x.trace()
    }

    /// `|λ_1 λ_2 - 1|`.
    pub fn reciprocity_error(&self) -> f64 {
        (self.eigenvalues[0] * self.eigenvalues[1] - C64::new(1.0, 0.0)).norm()
    }

    /// `|Re μ| / |μ|` for the dominant eigenvalue; zero for a purely imaginary one.
    pub fn real_part_fraction(&self) -> f64 {
        let mu = self.eigenvalues[0];
        mu.re.abs() / mu.norm()
    }
}

fn period_flow(profile: HillProfile, lambda_tilde: f64, periods: f64, tol: &Tolerance) -> Result<Mat2> {
    let sys = HillSystem { profile, lambda_tilde };
    let (m, ls, _) = flow(&sys, 0.0, periods, tol)?;
    Ok(m.scale_re(ls.exp()))
}

pub fn hill_monodromy(profile: HillProfile, lambda_tilde: f64, tol: &Tolerance) -> Result<MonodromyResult> {
    if !(lambda_tilde > 0.0) {
        return Err(invalid("lambda_tilde must be positive"));
    }
    let x = period_flow(profile, lambda_tilde, 1.0, tol)?;
    let eigenvalues = x.eigenvalues();
    let max_modulus = eigenvalues[0].norm();
    Ok(MonodromyResult {
        lambda_tilde,
        x,
        eigenvalues,
        max_modulus,
        unstable: max_modulus > 1.0 + MARGIN,
        det_error: (x.det() - C64::new(1.0, 0.0)).norm(),
    })
}

/// Monodromies at `n` equispaced `λ̃` in `[lo, hi]`.
pub fn sweep(profile: HillProfile, lo: f64, hi: f64, n: usize, tol: &Tolerance) -> Result<Vec<MonodromyResult>> {
    if n < 2 || !(lo > 0.0 && hi > lo) {
        return Err(invalid("sweep needs 0 < lo < hi and at least two points"));
    }
    (0..n).map(|i| hill_monodromy(profile, lo + (hi - lo) * i as f64 / (n - 1) as f64, tol)).collect()
}

/// `‖X^n - Z_n‖ / ‖Z_n‖` and `|ln‖X^n‖ - ln‖Z_n‖|`, where `Z_n` integrates
/// the periodic system over `[0, n]` directly.
pub fn periodic_power_check(profile: HillProfile, lambda_tilde: f64, n: u32, tol: &Tolerance) -> Result<(f64, f64)> {
    let x = hill_monodromy(profile, lambda_tilde, tol)?.x;
    let mut pow = Mat2::identity();
    for _ in 0..n {
        pow = x * pow;
    }
    let z = period_flow(profile, lambda_tilde, n as f64, tol)?;
    let zn = z.spectral_norm();
    Ok(((pow - z).spectral_norm() / zn, (pow.spectral_norm().ln() - zn.ln()).abs()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstabilityInterval {
    /// Shrunk interval.
    pub lo: f64,
    pub hi: f64,
    /// Refined band edges before shrinking.
    pub raw_lo: f64,
    pub raw_hi: f64,
    /// Minimum of the larger eigenvalue modulus over the test points.
    pub mu_min: f64,
    /// Larger eigenvalue modulus at the raw edges.
    pub mu_edges: [f64; 2],
    /// `|Re μ| / |μ|` at the midpoint.
    pub real_part_fraction: f64,
}

pub const TEST_POINTS: usize = 16;
pub const SHRINK: f64 = 0.1;

impl InstabilityInterval {
    pub fn test_points(&self) -> Vec<f64> {
        (0..TEST_POINTS).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (TEST_POINTS - 1) as f64).collect()
    }

    pub fn log_mu(&self) -> f64 {
        self.mu_min.ln()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub refine_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { lo: 1e-2, hi: 4.0 * core::f64::consts::PI, step: 1e-2, refine_tol: 1e-8 }
    }
}

fn excess(profile: HillProfile, lt: f64, tol: &Tolerance) -> Result<f64> {
    Ok(hill_monodromy(profile, lt, tol)?.max_modulus - (1.0 + MARGIN))
}

fn bisect_edge(profile: HillProfile, mut stable: f64, mut unstable: f64, eps: f64, tol: &Tolerance) -> Result<f64> {
    while (unstable - stable).abs() > eps {
        let mid = 0.5 * (stable + unstable);
        if excess(profile, mid, tol)? > 0.0 {
            unstable = mid;
        } else {
            stable = mid;
        }
    }
    Ok(0.5 * (stable + unstable))
}

/// Widest instability interval found by a grid scan plus edge bisection,
/// shrunk by `SHRINK` of its width on each side.
pub fn find_instability_interval(
    profile: HillProfile,
    opts: &SearchOptions,
    tol: &Tolerance,
) -> Result<InstabilityInterval> {
    if !(opts.lo > 0.0 && opts.hi > opts.lo && opts.step > 0.0 && opts.refine_tol > 0.0) {
        return Err(invalid("search range and step must be positive"));
    }
    let n = ((opts.hi - opts.lo) / opts.step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| (opts.lo + i as f64 * opts.step).min(opts.hi)).collect();
    let flags: Vec<bool> = grid.iter().map(|&lt| Ok(excess(profile, lt, tol)? > 0.0)).collect::<Result<_>>()?;

    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < n {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && flags[i + 1] {
            i += 1;
        }
        let lo = if start == 0 { grid[0] } else { bisect_edge(profile, grid[start - 1], grid[start], opts.refine_tol, tol)? };
        let hi = if i + 1 == n { grid[n - 1] } else { bisect_edge(profile, grid[i + 1], grid[i], opts.refine_tol, tol)? };
        if best.map_or(true, |(a, b)| hi - lo > b - a) {
            best = Some((lo, hi));
        }
        i += 1;
    }
    let (raw_lo, raw_hi) = best.ok_or(Error::NoInstability { lo: opts.lo, hi: opts.hi })?;
    let w = raw_hi - raw_lo;
    let mut out = InstabilityInterval {
        lo: raw_lo + SHRINK * w,
        hi: raw_hi - SHRINK * w,
        raw_lo,
        raw_hi,
        mu_min: f64::INFINITY,
        mu_edges: [hill_monodromy(profile, raw_lo, tol)?.max_modulus, hill_monodromy(profile, raw_hi, tol)?.max_modulus],
        real_part_fraction: 0.0,
    };
    for lt in out.test_points() {
        out.mu_min = out.mu_min.min(hill_monodromy(profile, lt, tol)?.max_modulus);
    }
    out.real_part_fraction = hill_monodromy(profile, 0.5 * (out.lo + out.hi), tol)?.real_part_fraction();
    Ok(out)
}

/// `δ_j λ(t_j) / ν_j`, the factor with `λ̃ = factor · |ξ|` on packet `j` (1-based).
pub fn packet_factor(coef: &Coefficient, j: usize) -> Result<f64> {
    let pk = packet(coef, j)?;
    Ok(pk.delta * coef.lambda(pk.t) / pk.nu as f64)
}

fn packet(coef: &Coefficient, j: usize) -> Result<crate::coefficient::Packet> {
    if coef.perturbation.kind != PerturbationKind::Counterexample {
        return Err(invalid("a counterexample perturbation is required"));
    }
    if j == 0 {
        return Err(invalid("packets are numbered from 1"));
    }
    coef.perturbation.packets.get(j - 1).copied().ok_or_else(|| invalid("packet index beyond the profile"))
}

/// `count` equispaced frequencies (cell midpoints) with `λ̃` inside the interval.
pub fn omega_j_frequencies(interval: &InstabilityInterval, coef: &Coefficient, j: usize, count: usize) -> Result<Vec<f64>> {
    let f = packet_factor(coef, j)?;
    let (lo, hi) = (interval.lo / f, interval.hi / f);
    Ok((0..count).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmplificationSample {
    pub xi: f64,
    pub lambda_tilde: f64,
    /// `ln` of the larger eigenvalue modulus of `E(t_j + δ_j, t_j, ξ)`.
    pub log_modulus: f64,
    /// `ν_j ln μ - ln 2`.
    pub log_bound: f64,
    pub pass: bool,
    /// `ln ‖E‖²`.
    pub log_energy_gain: f64,
    /// `ln(‖E‖² λ(t_j)/λ(t_j + δ_j))`, the growth of `E_λ/λ` for the worst data.
    pub log_ratio_gain: f64,
    /// `max_k ‖Y(k+1, k) - X(λ̃)‖` over the bump periods.
    pub period_deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AmplificationRun {
    pub j: usize,
    pub t: f64,
    pub delta: f64,
    pub nu: u64,
    /// `δ_j λ(t_j) / Λ(t_j)`; small once the packet sits deep in the hyperbolic regime.
    pub packet_ratio: f64,
    pub samples: Vec<AmplificationSample>,
}

impl AmplificationRun {
    pub fn all_pass(&self) -> bool {
        self.samples.iter().all(|s| s.pass)
    }

    pub fn min_log_ratio_gain(&self) -> f64 {
        self.samples.iter().map(|s| s.log_ratio_gain).fold(f64::INFINITY, f64::min)
    }
}

/// Smallest `j*` such that every run with `j >= j*` passes.
pub fn threshold_packet(runs: &[AmplificationRun]) -> Option<usize> {
    let mut first = None;
    for r in runs.iter().rev() {
        if !r.all_pass() {
            break;
        }
        first = Some(r.j);
    }
    first
}

fn amplify_one(
    coef: &Coefficient,
    profile: HillProfile,
    pk: crate::coefficient::Packet,
    xi: f64,
    lambda_tilde: f64,
    log_mu: f64,
    tol: &Tolerance,
) -> Result<AmplificationSample> {
    let x = hill_monodromy(profile, lambda_tilde, tol)?.x;
    let period = pk.delta / pk.nu as f64;
    let mut prod = Mat2::identity();
    let mut log_scale = 0.0;
    let mut deviation: f64 = 0.0;
    for k in 0..pk.nu {
        let s = pk.t + k as f64 * period;
        let t = if k + 1 == pk.nu { pk.end() } else { s + period };
        let y = propagate(coef, s, t, xi, tol)?.matrix();
        deviation = deviation.max((y - x).spectral_norm());
        prod = y * prod;
        let m = prod.max_abs();
        prod = prod.scale_re(1.0 / m);
        log_scale += m.ln();
    }
    let log_modulus = prod.eigenvalues()[0].norm().ln() + log_scale;
    let log_norm = prod.spectral_norm().ln() + log_scale;
    let log_bound = pk.nu as f64 * log_mu - 2f64.ln();
    let log_lambda_ratio = coef.lambda(pk.end()).ln() - coef.lambda(pk.t).ln();
    Ok(AmplificationSample {
        xi,
        lambda_tilde,
        log_modulus,
        log_bound,
        pass: log_modulus >= log_bound,
        log_energy_gain: 2.0 * log_norm,
        log_ratio_gain: 2.0 * log_norm - log_lambda_ratio,
        period_deviation: deviation,
    })
}

/// Integrates the full coefficient over each listed packet for `count`
/// frequencies of `Ω_j` and compares against `μ^{ν_j}/2` with `μ = mu_min`.
pub fn amplification_experiment(
    coef: &Coefficient,
    interval: &InstabilityInterval,
    js: &[usize],
    count: usize,
    tol: &Tolerance,
) -> Result<Vec<AmplificationRun>> {
    let bump = coef.perturbation.bump.ok_or_else(|| invalid("the perturbation has no bump profile"))?;
    let profile = HillProfile::Bump(bump);
    let log_mu = interval.log_mu();
    js.iter()
        .map(|&j| {
            let pk = packet(coef, j)?;
            let f = packet_factor(coef, j)?;
            let samples = omega_j_frequencies(interval, coef, j, count)?
                .into_iter()
                .map(|xi| amplify_one(coef, profile, pk, xi, f * xi, log_mu, tol))
                .collect::<Result<Vec<_>>>()?;
            Ok(AmplificationRun {
                j,
                t: pk.t,
                delta: pk.delta,
                nu: pk.nu,
                packet_ratio: pk.delta * coef.lambda(pk.t) / coef.primitive(pk.t),
                samples,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlowupTerm {
    pub j: usize,
    pub t: f64,
    pub nu: f64,
    /// `ln` of `(δ_j/ν_j)² λ(t_j)² S^j exp(2c Σ_{ℓ<j} ν_ℓ - 2ν_j ln μ)`.
    pub log_term: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlowupReport {
    pub epsilon: f64,
    pub sigma: f64,
    pub log_mu: f64,
    pub c: f64,
    /// `ln S`, `S = sup_j λ(t_j + δ_j)/λ(t_j)`.
    pub log_s: f64,
    /// `(c / (ρ - 1), ln μ)` with `ρ` the growth factor of `ν_j`; absent for `exp(t^α)`.
    pub threshold: Option<(f64, f64)>,
    pub terms: Vec<BlowupTerm>,
}

impl BlowupReport {
    pub fn threshold_holds(&self) -> Option<bool> {
        self.threshold.map(|(lhs, rhs)| lhs < rhs)
    }

    pub fn decreasing(&self) -> bool {
        self.terms.windows(2).all(|w| w[1].log_term < w[0].log_term)
    }

    pub fn non_decreasing(&self) -> bool {
        self.terms.windows(2).all(|w| w[1].log_term >= w[0].log_term)
    }

    pub fn last_log_term(&self) -> f64 {
        self.terms.last().map_or(f64::NAN, |t| t.log_term)
    }
}

/// Evaluates the blow-up sequence in log space for `j = 1..=j_max`. The
/// sequences are taken from the counterexample formulas directly so that
/// `ν_j` may exceed any integer type.
pub fn blowup_condition(
    coef: &Coefficient,
    c: f64,
    log_mu: f64,
    epsilon: f64,
    sigma: f64,
    j_max: usize,
) -> Result<BlowupReport> {
    if j_max < 2 {
        return Err(invalid("need at least two terms"));
    }
    let shape = &coef.shape;
    let seq: Vec<(f64, f64, f64)> = (1..=j_max)
        .map(|j| {
            let (t, d, nu) = counterexample_sequence(shape, &coef.scales, epsilon, sigma, j as f64)?;
            Ok((t, d, nu.ceil().max(1.0)))
        })
        .collect::<Result<_>>()?;
    let log_s = seq.iter().map(|&(t, d, _)| shape.log_lambda(t + d) - shape.log_lambda(t)).fold(0.0, f64::max);
    let mut terms = Vec::with_capacity(j_max);
    let mut nu_sum = 0.0;
    for (i, &(t, d, nu)) in seq.iter().enumerate() {
        let j = i + 1;
        let log_term = 2.0 * (d.ln() - nu.ln() + shape.log_lambda(t)) + j as f64 * log_s + 2.0 * c * nu_sum
            - 2.0 * nu * log_mu;
        terms.push(BlowupTerm { j, t, nu, log_term });
        nu_sum += nu;
    }
    let rho = match (shape.family(), coef.scales.params) {
        (ShapeFamily::Polynomial { p }, ScaleParams::Polynomial { q, .. }) => Some(sigma.powf(epsilon * (p - q))),
        (ShapeFamily::Exponential, ScaleParams::Exponential { a, .. }) => Some((sigma * epsilon * (1.0 - a)).exp()),
        _ => None,
    };
    Ok(BlowupReport {
        epsilon,
        sigma,
        log_mu,
        c,
        log_s,
        threshold: rho.map(|r| (c / (r - 1.0), log_mu)),
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::make_bump;
    use core::f64::consts::PI;

    fn tol() -> Tolerance {
        Tolerance::new(1e-12)
    }

    #[test]
    fn flat_profile_quarter_turn() {
        let r = hill_monodromy(HillProfile::Flat, PI / 2.0, &tol()).unwrap();
        let exact = Mat2::new(C64::new(0.0, 0.0), I, I, C64::new(0.0, 0.0));
        assert!((r.x - exact).max_abs() < 1e-10);
        assert!(!r.unstable);
        assert!((r.max_modulus - 1.0).abs() < 1e-10);
    }

    #[test]
    fn flat_profile_half_turn_is_minus_identity() {
        let r = hill_monodromy(HillProfile::Flat, PI, &tol()).unwrap();
        assert!((r.x + Mat2::identity()).max_abs() < 1e-10);
    }

    #[test]
    fn flat_profile_has_no_instability() {
        let opts = SearchOptions { step: 0.05, ..SearchOptions::default() };
        let e = find_instability_interval(HillProfile::Flat, &opts, &tol()).unwrap_err();
        assert!(matches!(e, Error::NoInstability { .. }));
    }

    #[test]
    fn bump_opens_a_gap() {
        let prof = HillProfile::Bump(make_bump(4).unwrap());
        let iv = find_instability_interval(prof, &SearchOptions::default(), &tol()).unwrap();
        assert!(iv.mu_min > 1.0 + MARGIN);
        assert!(iv.mu_min >= iv.mu_edges[0].max(iv.mu_edges[1]));
        assert!(iv.lo > iv.raw_lo && iv.hi < iv.raw_hi);
    }
}
