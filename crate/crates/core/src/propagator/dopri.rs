//! Dormand–Prince 5(4) for linear systems `∂_t Y = K(t) Y` with a 2x2 `K`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64};

/// A time-dependent 2x2 generator.
pub trait LinearGenerator {
    fn matrix(&self, t: f64) -> Mat2;
    /// Local oscillation rate; the step is capped at an eighth of its period.
    fn frequency(&self, t: f64) -> f64;
}

/// States the integrator can carry: a 2-vector or a 2x2 matrix.
pub trait FlowState: Copy {
    const LEN: usize;
    fn apply(k: &Mat2, y: &Self) -> Self;
    fn comps(&self) -> &[C64];
    fn comps_mut(&mut self) -> &mut [C64];
}

impl FlowState for [C64; 2] {
    const LEN: usize = 2;
    fn apply(k: &Mat2, y: &Self) -> Self {
        k.apply(*y)
    }
    fn comps(&self) -> &[C64] {
        self
    }
    fn comps_mut(&mut self) -> &mut [C64] {
        self
    }
}

impl FlowState for [C64; 4] {
    const LEN: usize = 4;
    fn apply(k: &Mat2, y: &Self) -> Self {
        let m = &k.m;
        [
            m[0][0] * y[0] + m[0][1] * y[2],
            m[0][0] * y[1] + m[0][1] * y[3],
            m[1][0] * y[0] + m[1][1] * y[2],
            m[1][0] * y[1] + m[1][1] * y[3],
        ]
    }
    fn comps(&self) -> &[C64] {
        self
    }
    fn comps_mut(&mut self) -> &mut [C64] {
        self
    }
}

pub fn mat_to_state(m: &Mat2) -> [C64; 4] {
    [m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]]
}

pub fn state_to_mat(y: &[C64; 4]) -> Mat2 {
    Mat2::new(y[0], y[1], y[2], y[3])
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
}

impl Tolerance {
    pub fn new(tol: f64) -> Self {
        Tolerance { rtol: tol, atol: tol, max_steps: 200_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepStats {
    pub accepted: u64,
    pub rejected: u64,
}

/// Entries above this are rescaled into `log_scale`.
const RENORM_AT: f64 = 1e100;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<S: FlowState>(y: &S, h: f64, terms: &[(f64, &S)]) -> S {
    let mut out = *y;
    for (i, o) in out.comps_mut().iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            if *c != 0.0 {
                acc += k.comps()[i] * *c;
            }
        }
        *o += acc * h;
    }
    out
}

/// Integrates from `s` through each of `stops` (monotone in the direction of
/// travel), calling `visit(index, t, state, log_scale)` at every stop. The
/// true state is `state * exp(log_scale)`.
pub fn integrate_stops<G, S, V>(
    g: &G,
    s: f64,
    y0: S,
    stops: &[f64],
    tol: &Tolerance,
    mut visit: V,
) -> Result<StepStats>
where
    G: LinearGenerator + ?Sized,
    S: FlowState,
    V: FnMut(usize, f64, &S, f64),
{
    let mut stats = StepStats::default();
    let Some(&last) = stops.last() else { return Ok(stats) };
    let dir = if last >= s { 1.0 } else { -1.0 };
    let mut t = s;
    let mut y = y0;
    let mut log_scale = 0.0;
    let cap = |t: f64| 0.25 * core::f64::consts::PI / (g.frequency(t).abs() + 1.0);
    let mut k1 = S::apply(&g.matrix(t), &y);
    let knorm = g.matrix(t).max_abs();
    let mut h = cap(t).min(0.05 * tol.rtol.max(1e-14).powf(0.2) / (knorm + 1e-300)).min((last - s).abs());
    let mut err_old: f64 = 1e-4;
    let mut next_stop = 0;
    while next_stop < stops.len() && (stops[next_stop] - s) * dir <= 0.0 {
        visit(next_stop, stops[next_stop], &y, log_scale);
        next_stop += 1;
    }
    let mut rejected_last = false;
    while next_stop < stops.len() {
        let target = stops[next_stop];
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Error::StepLimit { t });
        }
        h = h.min(cap(t));
        let remaining = (target - t) * dir;
        let hits_stop = h >= remaining;
        let hs = if hits_stop { remaining } else { h };
        if hs <= 1e-14 * t.abs().max(1.0) && !hits_stop {
            return Err(Error::StepUnderflow { t });
        }
        let hd = hs * dir;
        let k2 = S::apply(&g.matrix(t + C2 * hd), &combo(&y, hd, &[(A21, &k1)]));
        let k3 = S::apply(&g.matrix(t + C3 * hd), &combo(&y, hd, &[(A31, &k1), (A32, &k2)]));
        let k4 = S::apply(&g.matrix(t + C4 * hd), &combo(&y, hd, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = S::apply(
            &g.matrix(t + C5 * hd),
            &combo(&y, hd, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let t_new = if hits_stop { target } else { t + hd };
        let k6 = S::apply(
            &g.matrix(t_new),
            &combo(&y, hd, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = combo(&y, hd, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = S::apply(&g.matrix(t_new), &y_new);
        let mut err2 = 0.0;
        for i in 0..S::LEN {
            let e = (k1.comps()[i] * E1
                + k3.comps()[i] * E3
                + k4.comps()[i] * E4
                + k5.comps()[i] * E5
                + k6.comps()[i] * E6
                + k7.comps()[i] * E7)
                * hd;
            let sc = tol.atol + tol.rtol * y.comps()[i].norm().max(y_new.comps()[i].norm());
            err2 += (e.norm() / sc).powi(2);
        }
        let err = (err2 / S::LEN as f64).sqrt();
        if !err.is_finite() {
            if hs <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::NonFinite { t });
            }
            stats.rejected += 1;
            h = hs * FAC_MIN;
            rejected_last = true;
            continue;
        }
        if err <= 1.0 {
            stats.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k7;
            let m = y.comps().iter().fold(0.0f64, |a, z| a.max(z.norm()));
            if !m.is_finite() {
                return Err(Error::NonFinite { t });
            }
            if m > RENORM_AT {
                let inv = 1.0 / m;
                for z in y.comps_mut() {
                    *z *= inv;
                }
                for z in k1.comps_mut() {
                    *z *= inv;
                }
                log_scale += m.ln();
            }
            let mut fac = SAFETY * err.max(1e-10).powf(-ALPHA) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_old = err.max(1e-4);
            rejected_last = false;
            // A step shortened to land on a stop says nothing about the natural size.
            h = if hits_stop { h.max(hs * fac) } else { hs * fac };
            while next_stop < stops.len() && (stops[next_stop] - t) * dir <= 0.0 {
                visit(next_stop, stops[next_stop], &y, log_scale);
                next_stop += 1;
            }
        } else {
            stats.rejected += 1;
            h = hs * (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            rejected_last = true;
        }
    }
    Ok(stats)
}

/// Flow matrix `Y(t, s)` with `Y(s, s) = I`, returned as `(Y e^{-log_scale}, log_scale)`.
pub fn flow<G: LinearGenerator + ?Sized>(g: &G, s: f64, t: f64, tol: &Tolerance) -> Result<(Mat2, f64, StepStats)> {
    let mut out = (Mat2::identity(), 0.0);
    let stats = integrate_stops(g, s, mat_to_state(&Mat2::identity()), &[t], tol, |_, _, y, ls| {
        out = (state_to_mat(y), ls);
    })?;
    Ok((out.0, out.1, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation(f64);
    impl LinearGenerator for Rotation {
        fn matrix(&self, _t: f64) -> Mat2 {
            Mat2::new(C64::new(0.0, 0.0), C64::new(0.0, self.0), C64::new(0.0, self.0), C64::new(0.0, 0.0))
        }
        fn frequency(&self, _t: f64) -> f64 {
            self.0
        }
    }

    #[test]
    fn free_rotation_is_exact_to_tolerance() {
        let g = Rotation(3.0);
        let (y, ls, _) = flow(&g, 0.0, 10.0, &Tolerance::new(1e-12)).unwrap();
        assert_eq!(ls, 0.0);
        let (c, s) = (30f64.cos(), 30f64.sin());
        let exact = Mat2::new(C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0));
        assert!((y - exact).max_abs() < 1e-9);
    }

    #[test]
    fn backward_then_forward_is_identity() {
        let g = Rotation(2.0);
        let tol = Tolerance::new(1e-12);
        let (a, _, _) = flow(&g, 5.0, 1.0, &tol).unwrap();
        let (b, _, _) = flow(&g, 1.0, 5.0, &tol).unwrap();
        assert!(((a * b) - Mat2::identity()).max_abs() < 1e-9);
    }

    struct Growth;
    impl LinearGenerator for Growth {
        fn matrix(&self, _t: f64) -> Mat2 {
            Mat2::real(300.0, 0.0, 0.0, -300.0)
        }
        fn frequency(&self, _t: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn renormalisation_tracks_the_log() {
        let (y, ls, _) = flow(&Growth, 0.0, 2.0, &Tolerance::new(1e-10)).unwrap();
        let log_norm = y.spectral_norm().ln() + ls;
        assert!((log_norm - 600.0).abs() < 1e-6);
    }
}
