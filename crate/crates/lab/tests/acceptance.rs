//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always show.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavespeed::config::ExperimentConfig;
use wavespeed::experiments::{energy_times, liouville_samples};
use wavespeed::runner::PoolRunner;
use wavespeed_core::coefficient::{make_bump, Coefficient};
use wavespeed_core::diagonalizer::{check_imaginary_parts, sample_levels};
use wavespeed_core::energy::{energy_trace, scattering_check, CauchyData, QuadSpec};
use wavespeed_core::floquet::{
    amplification_experiment, blowup_condition, find_instability_interval, sweep, threshold_packet, HillProfile,
    InstabilityInterval, SearchOptions,
};
use wavespeed_core::propagator::verify::{ladder, verify_unperturbed_two_sided, TwoSidedSpec};
use wavespeed_core::propagator::{peano_baker, propagate, OriginalSystem, Tolerance};
use wavespeed_core::validator::{default_grid, validate, Verdict, CORE_ASSUMPTIONS};
use wavespeed_core::zones::zone_boundaries;
use wavespeed_core::Error;

const POLY: &str = r#"
[coefficient]
family = "polynomial"
p = 2.0
q = 1.0
r = 0.5
[perturbation]
kind = "admissible"
packets = 10
"#;

const SUPRA: &str = r#"
[coefficient]
family = "suprapolynomial"
alpha = 0.5
beta = 0.5
gamma = 0.0
[perturbation]
kind = "admissible"
packets = 12
"#;

const EXP: &str = r#"
[coefficient]
family = "exponential"
a = 0.5
b = -0.25
[perturbation]
kind = "admissible"
packets = 16
"#;

const POLY_CE: &str = r#"
[coefficient]
family = "polynomial"
p = 2.0
q = 1.0
r = 0.5
[perturbation]
kind = "counterexample"
packets = 8
epsilon = 0.5
sigma = 2.0
"#;

const SUPRA_CE: &str = r#"
[coefficient]
family = "suprapolynomial"
alpha = 0.5
beta = 0.5
gamma = 0.0
[perturbation]
kind = "counterexample"
packets = 8
epsilon = 0.5
"#;

const EXP_CE: &str = r#"
[coefficient]
family = "exponential"
a = 0.5
b = -0.25
[perturbation]
kind = "counterexample"
packets = 8
epsilon = 0.5
sigma = 1.0
"#;

const FREE: &str = r#"
[coefficient]
family = "constant"
"#;

const POLY_FREE: &str = r#"
[coefficient]
family = "polynomial"
p = 2.0
q = 1.0
r = 0.5
zone_constant = 10.0
"#;

/// Energy ceiling recorded for the worked examples.
const RECORDED_CONSTANT: f64 = 2.0;

/// Largest measured `max/min` of `E_λ/λ` over the worked examples.
static MEASURED_SPREAD: OnceLock<f64> = OnceLock::new();
static INTERVAL: OnceLock<InstabilityInterval> = OnceLock::new();

fn coef(toml: &str) -> Result<Coefficient> {
    ExperimentConfig::from_toml(toml)?.build_coefficient()
}

fn runner() -> PoolRunner {
    PoolRunner::new(0).expect("thread pool")
}

fn interval() -> Result<InstabilityInterval> {
    if let Some(iv) = INTERVAL.get() {
        return Ok(*iv);
    }
    let iv = find_instability_interval(HillProfile::Bump(make_bump(4)?), &SearchOptions::default(), &Tolerance::new(1e-12))?;
    Ok(*INTERVAL.get_or_init(|| iv))
}

fn liouville() -> Result<(bool, String)> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tol = Tolerance::new(1e-12);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (toml, t_cap) in [(POLY, 100.0), (SUPRA, 100.0), (EXP, 14.0)] {
        let samples = liouville_samples(&coef(toml)?, 170, 500.0, t_cap, &tol, &mut rng)?;
        count += samples.len();
        worst = samples.iter().map(|s| s.error).fold(worst, f64::max);
    }
    let el = start.elapsed();
    Ok((count >= 500 && worst < 1e-8 && el < Duration::from_secs(60), format!("{count} runs, max err {worst:.2e}, {el:.1?}")))
}

fn free_wave() -> Result<(bool, String)> {
    let c = coef(FREE)?;
    let data = CauchyData::annulus(1.0, 2.0);
    let times: Vec<f64> = (0..=100).map(f64::from).collect();
    let trace = energy_trace(&c, &data, &times, &QuadSpec::default(), &Tolerance::new(1e-12), &runner())?;
    let e0 = trace.values[0];
    let dev = trace.values.iter().map(|e| (e / e0 - 1.0).abs()).fold(0.0, f64::max);
    Ok((dev < 1e-7, format!("max relative change {dev:.2e}")))
}

fn dopri_vs_series() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = Tolerance::new(1e-12);
    let coefs = [coef(POLY)?, coef(SUPRA)?, coef(EXP)?];
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let c = &coefs[i % 3];
        let xi = 10f64.powf(rng.gen_range(-2.0..0.0));
        let s = rng.gen_range(0.01..8.0);
        let t = s + rng.gen_range(0.05..1.0);
        let a = propagate(c, s, t, xi, &tol)?.matrix();
        let b = peano_baker(&OriginalSystem { coef: c, xi }, s, t, 40)?;
        worst = worst.max((a - b).frobenius() / b.frobenius());
    }
    Ok((worst < 1e-8, format!("50 intervals, max rel diff {worst:.2e}")))
}

fn unperturbed_two_sided() -> Result<(bool, String)> {
    let start = Instant::now();
    let c = coef(POLY_FREE)?;
    let xis: Vec<f64> = (0..16).map(|i| 1e-4 * 30f64.powf(i as f64 / 15.0)).collect();
    let spec = TwoSidedSpec { tol: Tolerance::new(1e-8), ..TwoSidedSpec::new(1e3) };
    let rep = verify_unperturbed_two_sided(&c, &xis, &spec, &runner())?;
    let el = start.elapsed();
    let pass = xis.len() == 16 && rep.pass && el < Duration::from_secs(300);
    Ok((
        pass,
        format!(
            "{} freqs, ratio in [{:.3}, {:.3}], C = {}, drift {:.2e}, {el:.1?}",
            xis.len(),
            rep.min_ratio,
            rep.max_ratio,
            rep.constant,
            rep.drift
        ),
    ))
}

fn worked_energy() -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = Vec::new();
    let mut spread: f64 = 0.0;
    for (name, toml, t0, t_max) in [("poly", POLY, 0.0, 50.0), ("supra", SUPRA, 1.0, 49.0), ("exp", EXP, 0.0, 10.0)] {
        let c = coef(toml)?;
        let data = CauchyData { t0, ..CauchyData::annulus(1.0, 2.0) };
        let times = energy_times(&c, t0, t_max, 16, 4);
        let trace = energy_trace(&c, &data, &times, &QuadSpec::default(), &Tolerance::new(1e-8), &runner())?;
        pass &= trace.spread() <= RECORDED_CONSTANT && trace.drift < 0.05;
        spread = spread.max(trace.spread());
        detail.push(format!("{name} {:.3}/{:.1e}", trace.spread(), trace.drift));
    }
    MEASURED_SPREAD.get_or_init(|| spread);
    Ok((pass, format!("spread/drift {} (ceiling {RECORDED_CONSTANT})", detail.join(", "))))
}

/// `Im τ_2` for `a = (1+t)^p` in closed form.
fn poly_tau2_im(p: f64, t: f64, xi: f64) -> f64 {
    let d1 = p * p / (16.0 * (1.0 + t).powf(2.0 + 2.0 * p) * xi * xi);
    -p / (2.0 * (1.0 + t)) + (1.0 + p) * d1 / ((1.0 + t) * (1.0 - d1))
}

fn imaginary_parts() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut level_one: f64 = 0.0;
    let mut pm: f64 = 0.0;
    for (toml, t_max) in [(POLY, 100.0), (SUPRA, 100.0), (EXP, 14.0)] {
        let c = coef(toml)?;
        let mut pts = Vec::new();
        while pts.len() < 100 {
            let xi = 10f64.powf(rng.gen_range(-2.0..0.0));
            let t2 = zone_boundaries(&c, xi)?.t2_effective().max(1e-2);
            if t2 >= t_max {
                continue;
            }
            pts.push((rng.gen_range(t2..t_max), xi));
        }
        let rep = check_imaginary_parts(&c, 3, &pts)?;
        level_one = level_one.max(rep.level_one_error);
        pm = rep.pm_mismatch.iter().take(3).copied().fold(pm, f64::max);
    }
    // Closed forms for the unperturbed polynomial case.
    let c = coef(POLY_FREE)?;
    let (mut tau1, mut tau2): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let xi = 10f64.powf(rng.gen_range(-2.0..0.0));
        let t2 = zone_boundaries(&c, xi)?.t2_effective().max(1e-2);
        let t = rng.gen_range(t2..100.0f64.max(2.0 * t2));
        let levels = sample_levels(&c, t, xi, 2)?;
        let l1 = levels.iter().find(|l| l.k == 1).ok_or_else(|| anyhow!("no level 1"))?;
        let l2 = levels.iter().find(|l| l.k == 2).ok_or_else(|| anyhow!("no level 2"))?;
        tau1 = tau1.max((l1.tau_plus.im + 1.0 / (1.0 + t)).abs());
        tau2 = tau2.max((l2.tau_plus.im - poly_tau2_im(2.0, t, xi)).abs());
    }
    let pass = level_one < 1e-10 && tau1 < 1e-10 && tau2 < 1e-8 && pm < 1e-9;
    Ok((pass, format!("tau1 {:.1e}/{tau1:.1e}, tau2 {tau2:.1e}, +/- {pm:.1e}", level_one)))
}

fn validator_dichotomy() -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, toml) in [("poly", POLY), ("supra", SUPRA), ("exp", EXP)] {
        let c = coef(toml)?;
        let ok = validate(&c, &default_grid(&c), 0.5)?.passes(&CORE_ASSUMPTIONS);
        pass &= ok;
        detail.push(format!("{name} {}", if ok { "ok" } else { "rejected" }));
    }
    for (name, toml) in [("poly-ce", POLY_CE), ("supra-ce", SUPRA_CE), ("exp-ce", EXP_CE)] {
        let c = coef(toml)?;
        let rep = validate(&c, &default_grid(&c), 0.5)?;
        let a4 = rep.get("A4''").ok_or_else(|| anyhow!("missing A4''"))?;
        let ok = a4.verdict == Verdict::Fail && a4.growth_witness();
        pass &= ok;
        detail.push(format!("{name} {}", if ok { "fails with witness" } else { "not flagged" }));
    }
    Ok((pass, detail.join(", ")))
}

fn floquet() -> Result<(bool, String)> {
    let tol = Tolerance::new(1e-12);
    let rows = sweep(HillProfile::Bump(make_bump(4)?), 1e-2, 4.0 * std::f64::consts::PI, 400, &tol)?;
    let det = rows.iter().map(|r| r.det_error).fold(0.0, f64::max);
    let flat = match find_instability_interval(HillProfile::Flat, &SearchOptions::default(), &tol) {
        Err(Error::NoInstability { .. }) => true,
        _ => false,
    };
    let iv = interval()?;
    Ok((
        rows.len() == 400 && det < 1e-10 && flat && iv.mu_min > 1.01,
        format!("det err {det:.1e}, flat stable {flat}, mu_min {:.4} on [{:.4}, {:.4}]", iv.mu_min, iv.lo, iv.hi),
    ))
}

fn amplification() -> Result<(bool, String)> {
    let start = Instant::now();
    let ceiling = *MEASURED_SPREAD.get().ok_or_else(|| anyhow!("energy ceiling not measured"))?;
    let c = coef(POLY_CE)?;
    let js: Vec<usize> = (1..=8).collect();
    let runs = amplification_experiment(&c, &interval()?, &js, 8, &Tolerance::new(1e-10))?;
    let threshold = threshold_packet(&runs);
    let log_target = (2.0 * ceiling).ln();
    let gain = threshold.map(|js| runs.iter().filter(|r| r.j >= js).map(|r| r.min_log_ratio_gain()).fold(f64::INFINITY, f64::min));
    let el = start.elapsed();
    let pass = threshold.is_some_and(|j| j <= 8) && gain.is_some_and(|g| g >= log_target) && el < Duration::from_secs(600);
    Ok((
        pass,
        format!("j* = {threshold:?}, min log gain {:.2} vs ln(2*{ceiling:.3}) = {log_target:.2}, {el:.1?}", gain.unwrap_or(f64::NAN)),
    ))
}

fn blowup() -> Result<(bool, String)> {
    let iv = interval()?;
    let c_rate = HillProfile::Bump(make_bump(4)?).gronwall_rate();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, toml, sigma, expect_decay) in
        [("poly", POLY_CE, 5000.0, true), ("exp", EXP_CE, 20.0, true), ("poly", POLY_CE, 2.0, false), ("exp", EXP_CE, 1.0, false)]
    {
        let rep = blowup_condition(&coef(toml)?, c_rate, iv.log_mu(), 0.5, sigma, 12)?;
        let ok = if expect_decay {
            rep.decreasing() && rep.last_log_term() < rep.terms[0].log_term - 10.0 && rep.threshold_holds() == Some(true)
        } else {
            rep.non_decreasing()
        };
        pass &= ok;
        detail.push(format!("{name} sigma={sigma} last {:.1e}", rep.last_log_term()));
    }
    Ok((pass, detail.join(", ")))
}

fn scattering() -> Result<(bool, String)> {
    let c = coef(POLY)?;
    let data = CauchyData::annulus(0.02, 0.2);
    let tol = Tolerance::new(1e-12);
    let (mut def, mut lo, mut hi): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    let mut t1s = Vec::new();
    for xi in [0.04, 0.08, 0.12, 0.16] {
        let t1 = zone_boundaries(&c, xi)?.t1_or_zero();
        let times = ladder(t1.max(0.1), 100.0, 16);
        let sc = scattering_check(&c, &data, xi, &times, &tol)?;
        t1s.push(format!("{:.2}", sc.t1));
        for s in &sc.samples {
            def = def.max(s.deficiency);
            lo = lo.min(s.norm_ratio);
            hi = hi.max(s.norm_ratio);
        }
    }
    Ok((
        def <= 1e-7 && lo >= 0.5 && hi <= 2.0,
        format!("t1 = [{}], deficiency {def:.1e}, norm ratio in [{lo:.3}, {hi:.3}]", t1s.join(", ")),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<(bool, String)>); 11] = [
        ("liouville identity", liouville),
        ("free wave energy", free_wave),
        ("dopri vs peano-baker", dopri_vs_series),
        ("unperturbed two-sided bound", unperturbed_two_sided),
        ("worked example energy", worked_energy),
        ("imaginary parts", imaginary_parts),
        ("validator dichotomy", validator_dichotomy),
        ("floquet monodromy", floquet),
        ("counterexample amplification", amplification),
        ("blow-up sequence", blowup),
        ("scattering", scattering),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = f().unwrap_or_else(|e| (false, format!("error: {e:#}")));
        failed += usize::from(!pass);
        println!("{:>2} {} {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
