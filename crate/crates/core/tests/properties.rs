use proptest::prelude::*;
use wavespeed_core::coefficient::{
    make_admissible_perturbation, make_bump, make_scale_set, make_shape, Coefficient, ScaleParams, ShapeFamily,
};
use wavespeed_core::energy::{energy, CauchyData, QuadSpec};
use wavespeed_core::floquet::{hill_monodromy, HillProfile};
use wavespeed_core::propagator::{propagate, Tolerance};
use wavespeed_core::runner::Sequential;
use wavespeed_core::zones::zone_boundaries;

fn family(k: usize) -> (ShapeFamily, ScaleParams, usize) {
    match k {
        0 => (ShapeFamily::Polynomial { p: 2.0 }, ScaleParams::Polynomial { q: 1.0, r: 0.5, theta_exponent: None }, 10),
        1 => (ShapeFamily::Suprapolynomial { alpha: 0.5 }, ScaleParams::Suprapolynomial { beta: 0.5, gamma: 0.0 }, 12),
        _ => (ShapeFamily::Exponential, ScaleParams::Exponential { a: 0.5, b: -0.25 }, 16),
    }
}

fn admissible(k: usize) -> Coefficient {
    let (fam, params, packets) = family(k);
    let shape = make_shape(fam).unwrap();
    let scales = make_scale_set(&shape, params, 2, 10.0).unwrap();
    let pert = make_admissible_perturbation(&shape, &scales, make_bump(4).unwrap(), packets).unwrap();
    Coefficient::new(shape, pert, scales)
}

fn free() -> Coefficient {
    let shape = make_shape(ShapeFamily::Constant).unwrap();
    let scales = make_scale_set(&shape, ScaleParams::Constant, 2, 10.0).unwrap();
    Coefficient::unperturbed(shape, scales)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn determinant_tracks_lambda_ratio(k in 0usize..3, lxi in -2.5f64..0.0, s in 0.01f64..6.0, len in 0.1f64..4.0) {
        let c = admissible(k);
        let p = propagate(&c, s, s + len, 10f64.powf(lxi), &Tolerance::new(1e-12)).unwrap();
        prop_assert!(p.liouville_error() < 1e-9, "error {}", p.liouville_error());
    }

    #[test]
    fn flows_compose(k in 0usize..3, lxi in -2.0f64..0.0, s in 0.01f64..5.0, a in 0.1f64..2.0, b in 0.1f64..2.0) {
        let c = admissible(k);
        let xi = 10f64.powf(lxi);
        let tol = Tolerance::new(1e-12);
        let direct = propagate(&c, s, s + a + b, xi, &tol).unwrap().matrix();
        let first = propagate(&c, s, s + a, xi, &tol).unwrap().matrix();
        let second = propagate(&c, s + a, s + a + b, xi, &tol).unwrap().matrix();
        let rel = ((second * first) - direct).frobenius() / direct.frobenius();
        prop_assert!(rel < 1e-9, "rel {rel}");
    }

    #[test]
    fn zones_are_ordered(k in 0usize..3, lxi in -4.0f64..1.0, factor in 1.01f64..10.0) {
        let c = admissible(k);
        let xi = 10f64.powf(lxi);
        let z = zone_boundaries(&c, xi).unwrap();
        prop_assert!(z.t1_or_zero() <= z.t2_effective());
        let higher = zone_boundaries(&c, xi * factor).unwrap();
        prop_assert!(higher.t1_or_zero() <= z.t1_or_zero());
    }

    #[test]
    fn monodromy_is_unimodular(lt in 0.05f64..12.5) {
        let m = hill_monodromy(HillProfile::Bump(make_bump(4).unwrap()), lt, &Tolerance::new(1e-12)).unwrap();
        prop_assert!(m.det_error < 1e-10, "det {}", m.det_error);
        prop_assert!(m.reciprocity_error() < 1e-9, "reciprocity {}", m.reciprocity_error());
        prop_assert!(m.max_modulus >= 1.0 - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quadrature_matches_initial_energy(lo in 0.0f64..1.0, width in 0.2f64..3.0, n in 1u32..4) {
        let c = free();
        let data = CauchyData { dimension: n, ..CauchyData::annulus(lo, lo + width) };
        let want = data.initial_energy(&c);
        let tol = Tolerance::new(1e-12);
        let q = QuadSpec::default();
        let got = energy(&c, &data, 0.0, &q, &tol, &Sequential).unwrap();
        let finer = energy(&c, &data, 0.0, &q.doubled(), &tol, &Sequential).unwrap();
        prop_assert!((got / want - 1.0).abs() < 1e-7, "got {got} want {want}");
        prop_assert!((finer / want - 1.0).abs() < 1e-7, "finer {finer} want {want}");
    }

    #[test]
    fn free_wave_energy_is_conserved(lo in 0.0f64..1.0, width in 0.2f64..2.0, t in 0.5f64..60.0) {
        let c = free();
        let data = CauchyData::annulus(lo, lo + width);
        let tol = Tolerance::new(1e-12);
        let e0 = energy(&c, &data, 0.0, &QuadSpec::default(), &tol, &Sequential).unwrap();
        let et = energy(&c, &data, t, &QuadSpec::default(), &tol, &Sequential).unwrap();
        prop_assert!((et / e0 - 1.0).abs() < 1e-8, "ratio {}", et / e0);
    }
}
