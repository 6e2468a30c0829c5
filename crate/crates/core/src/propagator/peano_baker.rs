//! Peano–Baker series `Φ = I + ∫K + ∫K∫K + ...` evaluated by Gauss–Legendre
//! collocation on short substeps. Independent of the Runge–Kutta path; used
//! as a test oracle.

use alloc::vec;
use alloc::vec::Vec;


use super::dopri::LinearGenerator;
use crate::error::{invalid, Error, Result};
use crate::linalg::Mat2;
use crate::quad::{gauss_legendre, integration_matrix, lagrange};

const NODES: usize = 16;
/// Target bound on `∫‖K‖` per substep.
const SUBSTEP_MASS: f64 = 0.1;
const TERM_RATIO: f64 = 1e-10;
/// Bound on `(b - a)·|K - interpolant|` at the probe points.
const INTERP_MASS: f64 = 1e-14;
/// Off-node points where the interpolant of `K` is checked.
const PROBES: [f64; 4] = [-0.83, -0.29, 0.37, 0.91];

pub fn peano_baker<G: LinearGenerator + ?Sized>(g: &G, s: f64, t: f64, terms: usize) -> Result<Mat2> {
    peano_baker_with(g, s, t, terms, 1)
}

/// As [`peano_baker`], starting from `substeps` equal pieces. Each piece is
/// bisected until `∫‖K‖` over it is at most 0.1 and `K` is resolved by the
/// collocation polynomial.
pub fn peano_baker_with<G: LinearGenerator + ?Sized>(
    g: &G,
    s: f64,
    t: f64,
    terms: usize,
    substeps: usize,
) -> Result<Mat2> {
    if terms < 2 || substeps == 0 {
        return Err(invalid("need at least two terms and one substep"));
    }
    let (x, w) = gauss_legendre(NODES);
    let smat = integration_matrix(&x);
    let mut pieces: Vec<(f64, f64)> = (0..substeps)
        .map(|i| {
            let a = s + (t - s) * i as f64 / substeps as f64;
            let b = s + (t - s) * (i + 1) as f64 / substeps as f64;
            (a, b)
        })
        .collect();
    pieces.reverse();
    let mut total = Mat2::identity();
    while let Some((a, b)) = pieces.pop() {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let ks: Vec<Mat2> = x.iter().map(|xi| g.matrix(mid + half * xi)).collect();
        let mass = ks.iter().fold(0.0f64, |m, k| m.max(k.frobenius())) * (b - a).abs();
        let narrow = (b - a).abs() < 1e-9 * (t - s).abs();
        if mass > SUBSTEP_MASS || (!narrow && interpolation_error(g, &ks, &x, mid, half) * (b - a).abs() > INTERP_MASS) {
            pieces.push((mid, b));
            pieces.push((a, mid));
            continue;
        }
        total = piece(&ks, &smat, &w, half, terms)? * total;
    }
    Ok(total)
}

fn interpolation_error<G: LinearGenerator + ?Sized>(g: &G, ks: &[Mat2], x: &[f64], mid: f64, half: f64) -> f64 {
    PROBES
        .iter()
        .map(|&p| {
            let mut approx = Mat2::zero();
            for (j, k) in ks.iter().enumerate() {
                approx = approx + k.scale_re(lagrange(x, j, p));
            }
            (g.matrix(mid + half * p) - approx).max_abs()
        })
        .fold(0.0, f64::max)
}

fn piece(ks: &[Mat2], smat: &[Vec<f64>], w: &[f64], half: f64, terms: usize) -> Result<Mat2> {
    let n = ks.len();
    let mut prev = vec![Mat2::identity(); n];
    let mut sum = Mat2::identity();
    let mut last = 1.0;
    for _ in 1..terms {
        let integrand: Vec<Mat2> = ks.iter().zip(&prev).map(|(k, p)| *k * *p).collect();
        let mut end = Mat2::zero();
        for j in 0..n {
            end = end + integrand[j].scale_re(w[j] * half);
        }
        let mut next = vec![Mat2::zero(); n];
        for i in 0..n {
            for j in 0..n {
                next[i] = next[i] + integrand[j].scale_re(smat[i][j] * half);
            }
        }
        sum = sum + end;
        last = end.max_abs();
        prev = next;
    }
    let ratio = last / sum.max_abs();
    if ratio > TERM_RATIO {
        return Err(Error::InsufficientTerms { ratio });
    }
    Ok(sum)
}
