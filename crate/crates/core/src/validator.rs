//! Sampled checks of the structural assumptions on `λ`, `ω` and the scales.
//!
//! Every check reduces to a supremum (or infimum) of a ratio over a time grid.
//! A bounded ratio cannot be certified from finitely many samples, so a check
//! passes when the ratio is finite and its supremum over the last decade of
//! the grid does not exceed the supremum before it by more than 10%.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::coefficient::{Coefficient, PerturbationKind, ShapeFamily};
use crate::error::{Error, Result};
use crate::grid::{tail_start, GridSpec};
use crate::jet::RJet;
use crate::quad;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Pass,
    Marginal,
    Fail,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Marginal => "marginal",
            Verdict::Fail => "fail",
        }
    }
}

/// Which derivative weight the A4 family uses.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "variant", rename_all = "snake_case"))]
pub enum A4Variant {
    /// `|D^k a| <= C λ Ξ^{-k}`.
    Xi,
    /// `|D^k a| <= C λ (λ/Θ (Θ/Λ)^{1/m})^k`.
    Stabilised,
    /// `|D^k a| <= C λ (λ/Θ (Θ/Λ)^ε)^k`.
    Epsilon { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    /// Supremum (or infimum, for lower bounds) over the whole grid.
    pub value: f64,
    pub head: f64,
    pub tail: f64,
    /// Per-packet suprema `(j, sup)`, the growth witness for derivative checks.
    pub packet_sups: Vec<(usize, f64)>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub grid_points: usize,
    pub t_max: f64,
}

impl Check {
    /// Whether the per-packet suprema show the growth pattern that forces a fail.
    pub fn growth_witness(&self) -> bool {
        packet_growth(&self.packet_sups)
    }
}

impl ValidationReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passes(&self, names: &[&str]) -> bool {
        names.iter().all(|n| self.get(n).map(|c| c.verdict == Verdict::Pass).unwrap_or(false))
    }
}

fn tail_cut(coef: &Coefficient, grid: &[f64]) -> f64 {
    tail_start(coef.shape.family(), grid.last().copied().unwrap_or(0.0))
}

const TAIL_PASS: f64 = 1.1;
const TAIL_MARGINAL: f64 = 1.5;

fn split(grid: &[f64], vals: &[f64], lower: bool, cut: f64) -> (f64, f64, f64) {
    let pick = |a: f64, b: f64| if lower { a.min(b) } else { a.max(b) };
    let init = if lower { f64::INFINITY } else { f64::NEG_INFINITY };
    let (mut head, mut tail) = (init, init);
    for (t, v) in grid.iter().zip(vals) {
        if *t < cut {
            head = pick(head, *v);
        } else {
            tail = pick(tail, *v);
        }
    }
    if !head.is_finite() && head == init {
        head = tail;
    }
    (pick(head, tail), head, tail)
}

fn upper_check(name: &str, cut: f64, grid: &[f64], vals: &[f64], packet_sups: Vec<(usize, f64)>) -> Check {
    let (value, head, tail) = split(grid, vals, false, cut);
    let growth = packet_growth(&packet_sups);
    let verdict = if !value.is_finite() || vals.iter().any(|v| v.is_nan()) {
        Verdict::Fail
    } else if growth {
        Verdict::Fail
    } else if tail <= TAIL_PASS * head {
        Verdict::Pass
    } else if tail <= TAIL_MARGINAL * head {
        Verdict::Marginal
    } else {
        Verdict::Fail
    };
    let note = if growth { String::from("packet suprema grow") } else { String::new() };
    Check { name: name.into(), verdict, value, head, tail, packet_sups, note }
}

fn lower_check(name: &str, cut: f64, grid: &[f64], vals: &[f64]) -> Check {
    let (value, head, tail) = split(grid, vals, true, cut);
    let verdict = if !(value > 0.0) || vals.iter().any(|v| v.is_nan()) {
        Verdict::Fail
    } else if tail * TAIL_PASS >= head {
        Verdict::Pass
    } else if tail * TAIL_MARGINAL >= head {
        Verdict::Marginal
    } else {
        Verdict::Fail
    };
    Check { name: name.into(), verdict, value, head, tail, packet_sups: Vec::new(), note: String::new() }
}

/// Growth witness: the last four sampled packet suprema increase strictly and
/// by at least 50% overall.
fn packet_growth(sups: &[(usize, f64)]) -> bool {
    if sups.len() < 4 {
        return false;
    }
    let tail = &sups[sups.len() - 4..];
    tail.windows(2).all(|w| w[1].1 > w[0].1) && tail[3].1 >= 1.5 * tail[0].1
}

fn packet_sups(coef: &Coefficient, grid: &[f64], vals: &[f64]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for (t, v) in grid.iter().zip(vals) {
        if let Some(j) = coef.perturbation.packet_at(*t) {
            match out.last_mut() {
                Some(last) if last.0 == j + 1 => last.1 = last.1.max(*v),
                _ => out.push((j + 1, *v)),
            }
        }
    }
    out
}

/// Default grid: `t = 0` (except for `exp(t^α)`, singular there), then
/// geometric from `1e-2` to a family-dependent horizon, refined in packets.
pub fn default_grid(coef: &Coefficient) -> Vec<f64> {
    let t_max = match coef.shape.family() {
        ShapeFamily::Exponential => 16.0,
        _ => 1e3,
    };
    let mut grid = grid_for(coef, &GridSpec::new(1e-2, t_max));
    if !matches!(coef.shape.family(), ShapeFamily::Suprapolynomial { .. }) {
        grid.insert(0, 0.0);
    }
    grid
}

/// Grid from a spec; counterexample packets get `packet_points` per bump period.
pub fn grid_for(coef: &Coefficient, spec: &GridSpec) -> Vec<f64> {
    let mut packets = coef.perturbation.packets.clone();
    if coef.perturbation.kind == PerturbationKind::Counterexample {
        let mut out = spec.build(&[]);
        for p in &packets {
            if p.end() < spec.t_min || p.t > spec.t_max {
                continue;
            }
            let n = (spec.packet_points as u64 * p.nu).min(8192) as usize;
            for i in 0..n {
                let t = p.t + p.delta * (i as f64 + 0.5) / n as f64;
                if t >= spec.t_min && t <= spec.t_max {
                    out.push(t);
                }
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        return out;
    }
    packets.retain(|p| p.end() >= spec.t_min);
    spec.build(&packets)
}

/// A1 (`λ'Λ/λ²` bounded above and below), A1'' (`|λ''|Λ²/λ³` bounded),
/// A1+ (`t √λ / Λ` bounded) and A2 (`0 < c1 <= ω <= c2`).
pub fn check_a1_a2(coef: &Coefficient, grid: &[f64]) -> Vec<Check> {
    let cut = tail_cut(coef, grid);
    let mut a1 = Vec::with_capacity(grid.len());
    let mut a1pp = Vec::with_capacity(grid.len());
    let mut a1p = Vec::with_capacity(grid.len());
    let mut om = Vec::with_capacity(grid.len());
    for &t in grid {
        let lam = coef.shape.lambda(RJet::variable(t, 3));
        let big = coef.primitive(t);
        let l0 = lam.value();
        a1.push(lam.deriv(1) * big / (l0 * l0));
        a1pp.push(lam.deriv(2).abs() * big * big / (l0 * l0 * l0));
        a1p.push(t * l0.sqrt() / big);
        om.push(coef.omega(t));
    }
    let lower = lower_check("A1_lower", cut, grid, &a1);
    let upper = upper_check("A1_upper", cut, grid, &a1, Vec::new());
    let merged = merge("A1", &[&lower, &upper]);
    let c1 = om.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let c2 = om.iter().fold(0.0f64, |m, v| m.max(*v));
    let a2 = Check {
        name: "A2".into(),
        verdict: if c1 > 0.0 && c2.is_finite() { Verdict::Pass } else { Verdict::Fail },
        value: c2,
        head: c1,
        tail: c2,
        packet_sups: Vec::new(),
        note: format!("c1 = {c1}, c2 = {c2}"),
    };
    alloc::vec![merged, upper_check("A1''", cut, grid, &a1pp, Vec::new()), upper_check("A1+", cut, grid, &a1p, Vec::new()), a2]
}

fn merge(name: &str, parts: &[&Check]) -> Check {
    let worst = parts.iter().map(|c| c.verdict).max_by_key(|v| *v as u8).unwrap_or(Verdict::Pass);
    let note = parts
        .iter()
        .map(|c| format!("{}: {} (value {:.6e})", c.name, c.verdict.label(), c.value))
        .collect::<Vec<_>>()
        .join("; ");
    Check {
        name: name.into(),
        verdict: worst,
        value: parts[0].value,
        head: parts[0].head,
        tail: parts[0].tail,
        packet_sups: Vec::new(),
        note,
    }
}

/// `S(t) = ∫_0^t λ |ω - 1|` at each grid time, accumulated along the grid.
pub fn stabilisation_sums(coef: &Coefficient, grid: &[f64]) -> Vec<f64> {
    let f = |t: f64| coef.lambda(t) * (coef.omega(t) - 1.0).abs();
    let packets = &coef.perturbation.packets;
    let mut acc = 0.0;
    let mut prev = 0.0f64;
    let mut first = 0;
    grid.iter()
        .map(|&t| {
            while first < packets.len() && packets[first].end() <= prev {
                first += 1;
            }
            for p in packets[first..].iter().take_while(|p| p.t < t) {
                let (lo, hi) = (p.t.max(prev), p.end().min(t));
                if hi <= lo {
                    continue;
                }
                // One panel per bump period keeps the integrand smooth per panel.
                let panels = ((p.nu as f64 * (hi - lo) / p.delta).ceil() as usize).clamp(1, 1 << 16);
                let h = (hi - lo) / panels as f64;
                for k in 0..panels {
                    let a = lo + k as f64 * h;
                    acc += quad::integrate(f, a, a + h, 0.0, 1e-10).value;
                }
            }
            prev = prev.max(t);
            acc
        })
        .collect()
}

/// A3: `S(t) <= C Θ(t)` and `Θ/Λ` eventually decreasing.
pub fn check_a3(coef: &Coefficient, grid: &[f64]) -> Vec<Check> {
    let cut = tail_cut(coef, grid);
    let sums = stabilisation_sums(coef, grid);
    let ratio: Vec<f64> = grid.iter().zip(&sums).map(|(t, s)| s / coef.theta(*t)).collect();
    let mut a3 = upper_check("A3", cut, grid, &ratio, Vec::new());
    let tl: Vec<f64> = grid.iter().map(|t| coef.theta(*t) / coef.primitive(*t)).collect();
    let tail: Vec<f64> = grid.iter().zip(&tl).filter(|(t, _)| **t >= cut).map(|(_, v)| *v).collect();
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let peak = tl.iter().fold(0.0f64, |m, v| m.max(*v));
    let last = tl.last().copied().unwrap_or(f64::NAN);
    let small = last < 1.0 && last < 0.5 * peak.max(1.0);
    let theta = Check {
        name: "A3_theta_over_lambda".into(),
        verdict: if decreasing && small { Verdict::Pass } else { Verdict::Fail },
        value: last,
        head: peak,
        tail: last,
        packet_sups: Vec::new(),
        note: format!("decreasing over last decade: {decreasing}"),
    };
    if theta.verdict == Verdict::Fail {
        a3.verdict = Verdict::Fail;
        a3.note = String::from("Theta/Lambda does not decay");
    }
    alloc::vec![a3, theta]
}

fn weight(coef: &Coefficient, t: f64, k: usize, variant: A4Variant) -> f64 {
    let lam = coef.lambda(t);
    let base = match variant {
        A4Variant::Xi => 1.0 / coef.scales.xi_weight(t),
        A4Variant::Stabilised => {
            let th = coef.theta(t);
            lam / th * (th / coef.primitive(t)).powf(coef.scales.stabilisation_exponent())
        }
        A4Variant::Epsilon { epsilon } => {
            let th = coef.theta(t);
            lam / th * (th / coef.primitive(t)).powf(epsilon)
        }
    };
    lam * base.powi(k as i32)
}

/// A4 family: `sup_t max_{k <= m} |D^k a| / weight_k` with per-packet witness.
pub fn check_a4(coef: &Coefficient, grid: &[f64], variant: A4Variant) -> Result<Check> {
    let cut = tail_cut(coef, grid);
    let m = coef.scales.m as usize;
    if m + 1 > coef.jet_len() {
        return Err(Error::DerivativeBudget { level: m });
    }
    let vals: Vec<f64> = grid
        .iter()
        .map(|&t| {
            let jet = coef.a_jet(t);
            (1..=m).map(|k| jet.deriv(k).abs() / weight(coef, t, k, variant)).fold(0.0, f64::max)
        })
        .collect();
    let name = match variant {
        A4Variant::Xi => "A4",
        A4Variant::Stabilised => "A4'",
        A4Variant::Epsilon { .. } => "A4''",
    };
    let sups = packet_sups(coef, grid, &vals);
    let mut c = upper_check(name, cut, grid, &vals, sups);
    if let A4Variant::Epsilon { epsilon } = variant {
        c.note = format!("epsilon = {epsilon}; {}", c.note);
    }
    Ok(c)
}

/// A5: `∫_t^∞ λ^{1-m} Ξ^{-m} ds <= C Θ^{1-m}(t)`. The integral is cut where
/// the integrand has decayed and closed with a power-law tail estimate.
pub fn check_a5(coef: &Coefficient, grid: &[f64]) -> Check {
    let m = coef.scales.m as f64;
    let cut = tail_cut(coef, grid);
    let f = |s: f64| coef.lambda(s).powf(1.0 - m) * coef.scales.xi_weight(s).powf(-m);
    let t_end = grid.last().copied().unwrap_or(1.0);
    let mut horizon = 10.0 * t_end;
    while f(horizon) > 1e-14 * f(t_end) && horizon < 1e12 * t_end {
        horizon *= 4.0;
    }
    let h = 1e-3 * horizon;
    let slope = -((f(horizon + h)).ln() - (f(horizon - h)).ln()) / ((horizon + h).ln() - (horizon - h).ln());
    let tail = if f(horizon) == 0.0 {
        0.0
    } else if slope > 1.0 {
        f(horizon) * horizon / (slope - 1.0)
    } else {
        f64::INFINITY
    };
    // Accumulate backwards so each grid point reuses the integral beyond it.
    let mut vals = alloc::vec![0.0; grid.len()];
    let mut acc = tail + integrate_log(&f, t_end, horizon);
    for i in (0..grid.len()).rev() {
        if i + 1 < grid.len() {
            acc += integrate_log(&f, grid[i], grid[i + 1]);
        }
        vals[i] = acc / coef.theta(grid[i]).powf(1.0 - m);
    }
    upper_check("A5", cut, grid, &vals, Vec::new())
}

fn integrate_log<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a > 0.0 && b / a > 4.0 {
        // Substitute s = e^u to keep panels proportional to s.
        return quad::integrate(|u| f(u.exp()) * u.exp(), a.ln(), b.ln(), 0.0, 1e-10).value;
    }
    quad::integrate(f, a, b, 0.0, 1e-10).value
}

/// A5': `Λ^ε <= C Θ`.
pub fn check_a5_prime(coef: &Coefficient, grid: &[f64], epsilon: f64) -> Check {
    let cut = tail_cut(coef, grid);
    let vals: Vec<f64> = grid.iter().map(|t| coef.primitive(*t).powf(epsilon) / coef.theta(*t)).collect();
    let mut c = upper_check("A5'", cut, grid, &vals, Vec::new());
    c.note = format!("epsilon = {epsilon}");
    c
}

/// Runs A1, A1'', A1+, A2, A3, A4, A4', A4''(ε) and A5 on one grid.
pub fn validate(coef: &Coefficient, grid: &[f64], epsilon: f64) -> Result<ValidationReport> {
    let mut checks = check_a1_a2(coef, grid);
    checks.extend(check_a3(coef, grid));
    checks.push(check_a4(coef, grid, A4Variant::Xi)?);
    checks.push(check_a4(coef, grid, A4Variant::Stabilised)?);
    checks.push(check_a4(coef, grid, A4Variant::Epsilon { epsilon })?);
    checks.push(check_a5(coef, grid));
    checks.push(check_a5_prime(coef, grid, epsilon));
    Ok(ValidationReport { checks, grid_points: grid.len(), t_max: grid.last().copied().unwrap_or(0.0) })
}

/// Assumptions the admissible theory needs.
pub const CORE_ASSUMPTIONS: [&str; 6] = ["A1", "A1+", "A2", "A3", "A4", "A5"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{make_scale_set, make_shape, ScaleParams};

    fn poly(p: f64, r: f64) -> Coefficient {
        let shape = make_shape(ShapeFamily::Polynomial { p }).unwrap();
        let scales =
            make_scale_set(&shape, ScaleParams::Polynomial { q: 0.5 * p, r, theta_exponent: None }, 2, 10.0).unwrap();
        Coefficient::unperturbed(shape, scales)
    }

    #[test]
    fn a1_bounds_for_polynomial_shape() {
        for p in [0.5, 2.0, 3.0] {
            let c = poly(p, 1.0);
            let grid = default_grid(&c);
            let checks = check_a1_a2(&c, &grid);
            let a1 = &checks[0];
            assert_eq!(a1.verdict, Verdict::Pass);
            // λ'Λ/λ² = p Λ / (1+t)^{p+1}, evaluated directly.
            let exact: Vec<f64> = grid.iter().map(|t| p * c.primitive(*t) / (1.0 + t).powf(p + 1.0)).collect();
            let hi = exact.iter().cloned().fold(0.0, f64::max);
            let lo = exact.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((a1.value - lo).abs() < 1e-12 * lo);
            assert!(hi <= p.max(p / (p + 1.0)) * 1.01);
            assert_eq!(checks[3].note, "c1 = 1, c2 = 1");
        }
    }

    #[test]
    fn unperturbed_a3_is_zero_and_a4_is_exact() {
        let c = poly(2.0, 1.0);
        let grid = default_grid(&c);
        let a3 = &check_a3(&c, &grid)[0];
        assert_eq!(a3.value, 0.0);
        assert_eq!(a3.verdict, Verdict::Pass);
        // |a'| Ξ / λ = 2 and |a''| Ξ² / λ = 2 for λ = (1+t)², Ξ = 1+t.
        let a4 = check_a4(&c, &grid, A4Variant::Xi).unwrap();
        assert!((a4.value - 2.0).abs() < 1e-12, "{}", a4.value);
        assert_eq!(a4.verdict, Verdict::Pass);
    }

    #[test]
    fn derivative_budget_is_enforced() {
        let c = poly(2.0, 1.0).with_jet_len(2);
        let grid = default_grid(&c);
        assert!(matches!(check_a4(&c, &grid, A4Variant::Xi), Err(Error::DerivativeBudget { .. })));
    }

    #[test]
    fn growth_witness_needs_strict_increase() {
        assert!(packet_growth(&[(1, 1.0), (2, 1.2), (3, 1.4), (4, 1.6)]));
        assert!(!packet_growth(&[(1, 1.0), (2, 1.2), (3, 1.1), (4, 1.6)]));
        assert!(!packet_growth(&[(1, 1.0), (2, 1.1), (3, 1.2), (4, 1.3)]));
    }
}
