//! The named experiments. Each writes its CSV artifacts into the output
//! directory and returns a summary entry.

use std::path::Path;

use anyhow::{anyhow, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wavespeed_core::coefficient::{make_bump, Coefficient, PerturbationKind, ShapeFamily};
use wavespeed_core::diagonalizer::{check_imaginary_parts, sample_levels};
use wavespeed_core::energy::{energy_trace, verify_lower_bound, verify_upper_bound, CauchyData, QuadSpec};
use wavespeed_core::floquet::{
    amplification_experiment, blowup_condition, find_instability_interval, sweep, threshold_packet, HillProfile,
    InstabilityInterval, SearchOptions,
};
use wavespeed_core::grid::{geometric, GridSpec};
use wavespeed_core::propagator::verify::{verify_hyp_zone, TwoSidedSpec};
use wavespeed_core::propagator::{propagate, Tolerance};
use wavespeed_core::validator::{self, Verdict, CORE_ASSUMPTIONS};
use wavespeed_core::zones::{zone_boundaries, Zone};

use crate::config::{ExperimentConfig, ExperimentName};
use crate::output::{num, write_csv, ExperimentSummary, Status};
use crate::runner::PoolRunner;

/// State shared between experiments of one run.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub coef: Coefficient,
    pub out: &'a Path,
    pub runner: PoolRunner,
    pub validation_failed: Option<bool>,
    pub interval: Option<InstabilityInterval>,
}

fn summary(name: ExperimentName, pass: bool, artifacts: &[&str], witness: serde_json::Value) -> ExperimentSummary {
    ExperimentSummary {
        name: name.as_str().into(),
        status: Status::Ok,
        pass: Some(pass),
        artifacts: artifacts.iter().map(|s| s.to_string()).collect(),
        witness,
        message: None,
    }
}

pub fn skipped(name: ExperimentName, why: &str) -> ExperimentSummary {
    ExperimentSummary {
        name: name.as_str().into(),
        status: Status::Skipped,
        pass: None,
        artifacts: Vec::new(),
        witness: serde_json::Value::Null,
        message: Some(why.into()),
    }
}

pub fn failed(name: ExperimentName, err: &anyhow::Error) -> ExperimentSummary {
    ExperimentSummary {
        name: name.as_str().into(),
        status: Status::Error,
        pass: None,
        artifacts: Vec::new(),
        witness: serde_json::Value::Null,
        message: Some(format!("{err:#}")),
    }
}

fn rng(seed: u64, name: ExperimentName) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (name as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Experiments that assume a validated coefficient.
pub fn needs_validation(name: ExperimentName) -> bool {
    matches!(name, ExperimentName::Propagate | ExperimentName::Diag | ExperimentName::Energy)
}

pub fn run_one(ctx: &mut Context, name: ExperimentName) -> ExperimentSummary {
    if needs_validation(name) && ctx.validation_failed == Some(true) {
        return skipped(name, "core assumptions failed validation");
    }
    if name == ExperimentName::Counterexample && ctx.coef.perturbation.kind != PerturbationKind::Counterexample {
        return skipped(name, "needs a counterexample perturbation");
    }
    let res = match name {
        ExperimentName::Validate => run_validate(ctx),
        ExperimentName::Zones => run_zones(ctx),
        ExperimentName::Propagate => run_propagate(ctx),
        ExperimentName::Diag => run_diag(ctx),
        ExperimentName::Floquet => run_floquet(ctx),
        ExperimentName::Counterexample => run_counterexample(ctx),
        ExperimentName::Energy => run_energy(ctx),
        ExperimentName::All => unreachable!("expanded before running"),
    };
    res.unwrap_or_else(|e| failed(name, &e))
}

fn run_validate(ctx: &mut Context) -> Result<ExperimentSummary> {
    let cfg = &ctx.config.validate;
    let coef = &ctx.coef;
    let grid = match cfg.t_max {
        Some(t_max) => validator::grid_for(coef, &GridSpec::new(1e-2, t_max)),
        None => validator::default_grid(coef),
    };
    let rep = validator::validate(coef, &grid, cfg.epsilon)?;
    let rows: Vec<Vec<String>> = rep
        .checks
        .iter()
        .map(|c| {
            let sups: Vec<String> = c.packet_sups.iter().map(|(j, s)| format!("{j}:{}", num(*s))).collect();
            vec![c.name.clone(), c.verdict.label().into(), num(c.value), num(c.head), num(c.tail), sups.join(";"), c.note.clone()]
        })
        .collect();
    write_csv(&ctx.out.join("validate.csv"), &["check", "verdict", "value", "head", "tail", "packet_sups", "note"], &rows)?;
    let pass = rep.passes(&CORE_ASSUMPTIONS);
    ctx.validation_failed = Some(!pass);
    let verdicts: serde_json::Map<String, serde_json::Value> =
        rep.checks.iter().map(|c| (c.name.clone(), json!(c.verdict.label()))).collect();
    let growth: Vec<&str> = rep
        .checks
        .iter()
        .filter(|c| c.verdict == Verdict::Fail && c.growth_witness())
        .map(|c| c.name.as_str())
        .collect();
    Ok(summary(
        ExperimentName::Validate,
        pass,
        &["validate.csv"],
        json!({ "verdicts": verdicts, "growth_witness": growth, "grid_points": rep.grid_points, "t_max": rep.t_max }),
    ))
}

fn run_zones(ctx: &mut Context) -> Result<ExperimentSummary> {
    let cfg = &ctx.config.zones;
    let xis = geometric(cfg.xi_min, cfg.xi_max, per_decade_for(cfg.xi_min, cfg.xi_max, cfg.count));
    let mut rows = Vec::with_capacity(xis.len());
    let mut ordered = true;
    let mut prev_t1 = f64::INFINITY;
    for &xi in &xis {
        let z = zone_boundaries(&ctx.coef, xi)?;
        let t1 = z.t1_or_zero();
        ordered &= t1 <= z.t2_effective() && t1 <= prev_t1;
        prev_t1 = t1;
        rows.push(vec![num(xi), num(t1), num(z.t2.unwrap_or(0.0)), num(z.t2_effective())]);
    }
    write_csv(&ctx.out.join("zones.csv"), &["xi", "t1", "t2", "t2_eff"], &rows)?;
    Ok(summary(ExperimentName::Zones, ordered, &["zones.csv"], json!({ "frequencies": xis.len() })))
}

fn per_decade_for(lo: f64, hi: f64, count: usize) -> usize {
    let decades = (hi / lo).log10().max(1e-9);
    ((count.max(2) - 1) as f64 / decades).ceil().max(1.0) as usize
}

/// One random interval for the Liouville check.
#[derive(Clone, Copy, Debug)]
pub struct LiouvilleSample {
    pub xi: f64,
    pub s: f64,
    pub t: f64,
    pub zone: Zone,
    pub error: f64,
}

/// Integrates `count` random intervals, cycling through the three zones. The
/// interval length is drawn from a phase budget of at most `max_phase`
/// radians so that the integration error stays small, and nothing is sampled
/// past `t_cap`.
pub fn liouville_samples(
    coef: &Coefficient,
    count: usize,
    max_phase: f64,
    t_cap: f64,
    tol: &Tolerance,
    rng: &mut impl Rng,
) -> Result<Vec<LiouvilleSample>> {
    let t_floor = if matches!(coef.shape.family(), ShapeFamily::Suprapolynomial { .. }) { 1e-2 } else { 0.0 };
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 100 * count {
            return Err(anyhow!("could not place {count} Liouville samples"));
        }
        let zone = [Zone::PseudoDifferential, Zone::Intermediate, Zone::Hyperbolic][out.len() % 3];
        let xi = 10f64.powf(rng.gen_range(-3.0..0.0));
        let z = zone_boundaries(coef, xi)?;
        let (lo, hi) = match zone {
            Zone::PseudoDifferential => (t_floor, z.t1_or_zero()),
            Zone::Intermediate => (z.t1_or_zero().max(t_floor), z.t2_effective()),
            Zone::Hyperbolic => {
                let t2 = z.t2_effective().max(t_floor);
                (t2, 2.0 * t2 + 1.0)
            }
        };
        let hi = hi.min(t_cap);
        if !(hi > lo) {
            continue;
        }
        let s = rng.gen_range(lo..hi);
        let phase = rng.gen_range(1.0..max_phase);
        let upper = if zone == Zone::Hyperbolic { t_cap } else { hi };
        let t = coef.shape.primitive_inverse(coef.shape.primitive(s) + phase / xi).min(upper);
        if !(t > s) {
            continue;
        }
        let err = propagate(coef, s, t, xi, tol)?.liouville_error();
        out.push(LiouvilleSample { xi, s, t, zone: z.classify(s), error: err });
    }
    Ok(out)
}

fn run_propagate(ctx: &mut Context) -> Result<ExperimentSummary> {
    let cfg = &ctx.config.propagate;
    let spec = TwoSidedSpec {
        t_max: cfg.t_max,
        per_decade: cfg.per_decade,
        constant: cfg.constant,
        max_drift: cfg.max_drift,
        tol: Tolerance::new(cfg.tol),
    };
    let rep = verify_hyp_zone(&ctx.coef, &cfg.xi, &spec, &ctx.runner)?;
    let mut rng = rng(ctx.config.seed, ExperimentName::Propagate);
    let liou = liouville_samples(&ctx.coef, cfg.liouville_samples, 500.0, cfg.t_max, &Tolerance::new(cfg.liouville_tol), &mut rng)?;
    let mut rows = Vec::new();
    for (kind, set) in [("forward", &rep.samples), ("backward", &rep.reversed)] {
        for r in set.iter() {
            rows.push(vec![kind.into(), num(r.xi), num(r.s), num(r.t), num(r.ratio), num(r.liouville_error)]);
        }
    }
    for l in &liou {
        rows.push(vec![format!("liouville_{}", l.zone.label()), num(l.xi), num(l.s), num(l.t), String::new(), num(l.error)]);
    }
    write_csv(&ctx.out.join("propagate.csv"), &["kind", "xi", "s", "t", "ratio", "liouville_error"], &rows)?;
    let max_liou = liou.iter().map(|l| l.error).fold(0.0, f64::max);
    Ok(summary(
        ExperimentName::Propagate,
        rep.pass && max_liou < 1e-8,
        &["propagate.csv"],
        json!({
            "min_ratio": rep.min_ratio,
            "max_ratio": rep.max_ratio,
            "drift": rep.drift,
            "constant": rep.constant,
            "max_liouville_error": max_liou,
        }),
    ))
}

fn run_diag(ctx: &mut Context) -> Result<ExperimentSummary> {
    let cfg = &ctx.config.diag;
    let mut rng = rng(ctx.config.seed, ExperimentName::Diag);
    let mut points = Vec::with_capacity(cfg.points);
    for _ in 0..cfg.points {
        let xi = cfg.xi_min * (cfg.xi_max / cfg.xi_min).powf(rng.gen::<f64>());
        let t2 = zone_boundaries(&ctx.coef, xi)?.t2_effective().max(1e-2);
        let t = rng.gen_range(t2..cfg.t_max.max(2.0 * t2));
        points.push((t, xi));
    }
    let rep = check_imaginary_parts(&ctx.coef, cfg.k_max, &points)?;
    let mut rows = Vec::new();
    for &(t, xi) in &points {
        for l in sample_levels(&ctx.coef, t, xi, cfg.k_max)? {
            rows.push(vec![
                num(l.t),
                num(l.xi),
                l.k.to_string(),
                num(l.tau_plus.re),
                num(l.tau_plus.im),
                num(l.tau_minus.re),
                num(l.tau_minus.im),
                num(l.beta_abs),
                num(l.d),
                num(l.delta_imag_rel),
            ]);
        }
    }
    write_csv(
        &ctx.out.join("diag.csv"),
        &["t", "xi", "k", "tau_plus_re", "tau_plus_im", "tau_minus_re", "tau_minus_im", "beta_abs", "d", "delta_imag_rel"],
        &rows,
    )?;
    let pm = rep.pm_mismatch.iter().take(3).copied().fold(0.0, f64::max);
    let sum = rep.sum_formula_error.iter().copied().fold(0.0, f64::max);
    let pass = rep.level_one_error < 1e-10 && pm < 1e-9 && sum < 1e-8;
    Ok(summary(
        ExperimentName::Diag,
        pass,
        &["diag.csv"],
        json!({
            "level_one_error": rep.level_one_error,
            "pm_mismatch": rep.pm_mismatch,
            "sum_formula_error": rep.sum_formula_error,
            "max_d": rep.max_d,
        }),
    ))
}

fn hill_profile(coef: &Coefficient) -> Result<HillProfile> {
    Ok(HillProfile::Bump(match coef.perturbation.bump {
        Some(b) => b,
        None => make_bump(4)?,
    }))
}

fn instability_interval(ctx: &mut Context) -> Result<InstabilityInterval> {
    if let Some(iv) = ctx.interval {
        return Ok(iv);
    }
    let cfg = &ctx.config.floquet;
    let opts = SearchOptions { lo: cfg.lambda_min, hi: cfg.lambda_max, step: cfg.step, refine_tol: cfg.refine_tol };
    let iv = find_instability_interval(hill_profile(&ctx.coef)?, &opts, &Tolerance::new(cfg.tol))?;
    ctx.interval = Some(iv);
    Ok(iv)
}

fn run_floquet(ctx: &mut Context) -> Result<ExperimentSummary> {
    let cfg = ctx.config.floquet.clone();
    let profile = hill_profile(&ctx.coef)?;
    let tol = Tolerance::new(cfg.tol);
    let rows_data = sweep(profile, cfg.lambda_min, cfg.lambda_max, cfg.sweep_points, &tol)?;
    let rows: Vec<Vec<String>> = rows_data
        .iter()
        .map(|r| {
            let tr = r.trace();
            vec![num(r.lambda_tilde), num(tr.re), num(tr.im), num(r.max_modulus), r.unstable.to_string(), num(r.det_error)]
        })
        .collect();
    write_csv(&ctx.out.join("floquet.csv"), &["lambda_tilde", "trace_re", "trace_im", "max_modulus", "unstable", "det_error"], &rows)?;
    let max_det = rows_data.iter().map(|r| r.det_error).fold(0.0, f64::max);
    let iv = instability_interval(ctx)?;
    Ok(summary(
        ExperimentName::Floquet,
        max_det < 1e-10 && iv.mu_min > 1.0,
        &["floquet.csv"],
        json!({
            "max_det_error": max_det,
            "interval": [iv.lo, iv.hi],
            "raw_interval": [iv.raw_lo, iv.raw_hi],
            "mu_min": iv.mu_min,
            "real_part_fraction": iv.real_part_fraction,
            "gronwall_rate": profile.gronwall_rate(),
        }),
    ))
}

fn run_counterexample(ctx: &mut Context) -> Result<ExperimentSummary> {
    let cfg = ctx.config.counterexample.clone();
    let iv = instability_interval(ctx)?;
    let runs = amplification_experiment(&ctx.coef, &iv, &cfg.packets, cfg.frequencies, &Tolerance::new(cfg.tol))?;
    let mut rows = Vec::new();
    for r in &runs {
        for s in &r.samples {
            rows.push(vec![
                r.j.to_string(),
                r.nu.to_string(),
                num(s.xi),
                num(s.lambda_tilde),
                num(s.log_modulus),
                num(s.log_bound),
                s.pass.to_string(),
                num(s.log_ratio_gain),
                num(s.period_deviation),
                num(r.packet_ratio),
            ]);
        }
    }
    write_csv(
        &ctx.out.join("counterexample.csv"),
        &["j", "nu", "xi", "lambda_tilde", "log_modulus", "log_bound", "pass", "log_ratio_gain", "period_deviation", "packet_ratio"],
        &rows,
    )?;
    let threshold = threshold_packet(&runs);
    let log_ceiling = (2.0 * cfg.ceiling).ln();
    let beats_ceiling = threshold.is_some_and(|js| runs.iter().filter(|r| r.j >= js).all(|r| r.min_log_ratio_gain() >= log_ceiling));

    let p = &ctx.config.perturbation;
    let sigma = cfg.blowup_sigma.or(p.sigma).unwrap_or(1.0);
    let profile = hill_profile(&ctx.coef)?;
    let blow = blowup_condition(&ctx.coef, profile.gronwall_rate(), iv.log_mu(), p.epsilon.unwrap_or(0.5), sigma, cfg.blowup_terms)?;
    let brows: Vec<Vec<String>> =
        blow.terms.iter().map(|t| vec![t.j.to_string(), num(t.t), num(t.nu), num(t.log_term)]).collect();
    write_csv(&ctx.out.join("counterexample_blowup.csv"), &["j", "t", "nu", "log_term"], &brows)?;
    Ok(summary(
        ExperimentName::Counterexample,
        beats_ceiling,
        &["counterexample.csv", "counterexample_blowup.csv"],
        json!({
            "threshold_packet": threshold,
            "mu_min": iv.mu_min,
            "ceiling": cfg.ceiling,
            "beats_ceiling": beats_ceiling,
            "blowup_sigma": sigma,
            "blowup_threshold": blow.threshold,
            "blowup_decreasing": blow.decreasing(),
            "blowup_non_decreasing": blow.non_decreasing(),
        }),
    ))
}

pub fn energy_times(coef: &Coefficient, t0: f64, t_max: f64, per_decade: usize, packet_points: usize) -> Vec<f64> {
    let g = GridSpec { t_min: t0.max(0.1), t_max, per_decade, packet_points };
    let mut times = g.build(&coef.perturbation.packets);
    if t0 < times[0] {
        times.insert(0, t0);
    }
    times
}

fn run_energy(ctx: &mut Context) -> Result<ExperimentSummary> {
    let cfg = &ctx.config.energy;
    let data = CauchyData {
        rho_lo: cfg.rho_lo,
        rho_hi: cfg.rho_hi,
        edge: cfg.edge,
        dimension: cfg.dimension,
        t0: cfg.t0,
        ..CauchyData::annulus(cfg.rho_lo, cfg.rho_hi)
    };
    let times = energy_times(&ctx.coef, cfg.t0, cfg.t_max, cfg.per_decade, cfg.packet_points);
    let q = QuadSpec { order: cfg.order, edge_panels: cfg.edge_panels, plateau_panels: cfg.plateau_panels };
    let trace = energy_trace(&ctx.coef, &data, &times, &q, &Tolerance::new(cfg.tol), &ctx.runner)?;
    let rows: Vec<Vec<String>> =
        trace.times.iter().zip(&trace.values).zip(&trace.ratios).map(|((t, e), r)| vec![num(*t), num(*e), num(*r)]).collect();
    write_csv(&ctx.out.join("energy.csv"), &["t", "E_lambda", "ratio"], &rows)?;
    let upper = verify_upper_bound(&ctx.coef, &data, &trace, cfg.max_drift);
    let lower = if data.has_gap() { Some(verify_lower_bound(&ctx.coef, &data, &trace, cfg.max_drift)?) } else { None };
    let pass = upper.pass && lower.as_ref().map_or(true, |l| l.pass);
    Ok(summary(
        ExperimentName::Energy,
        pass,
        &["energy.csv"],
        json!({
            "min_ratio": trace.min_ratio,
            "max_ratio": trace.max_ratio,
            "spread": trace.spread(),
            "drift": trace.drift,
            "upper_constant": upper.constant,
            "lower_constant": lower.map(|l| l.constant),
        }),
    ))
}
