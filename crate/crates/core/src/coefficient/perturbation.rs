use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::bump::BumpProfile;
use super::scales::{ScaleParams, ScaleSet};
use super::shape::{ShapeFamily, ShapeFunction};
use crate::error::{invalid, Error, Result};
use crate::jet::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PerturbationKind {
    Identity,
    /// `ω = 1 + η_j ψ((t - t_j)/δ_j)` on each packet.
    Admissible,
    /// `ω = 1 + b(ν_j (t - t_j)/δ_j)` with `b` the periodised bump.
    Counterexample,
}

/// One packet `[t, t + delta]`. `eta` is used by admissible profiles, `nu`
/// (number of bump periods) by counterexamples.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Packet {
    pub t: f64,
    pub delta: f64,
    pub eta: f64,
    pub nu: u64,
}

impl Packet {
    pub fn end(&self) -> f64 {
        self.t + self.delta
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t && t < self.end()
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PerturbationProfile {
    pub kind: PerturbationKind,
    pub packets: Vec<Packet>,
    pub bump: Option<BumpProfile>,
}

impl PerturbationProfile {
    pub fn identity() -> Self {
        PerturbationProfile { kind: PerturbationKind::Identity, packets: Vec::new(), bump: None }
    }

    /// Build from explicit sequences after checking ordering and disjointness.
    pub fn from_packets(kind: PerturbationKind, packets: Vec<Packet>, bump: BumpProfile) -> Result<Self> {
        for (j, p) in packets.iter().enumerate() {
            let idx = j + 1;
            if !(p.delta > 0.0 && p.delta.is_finite() && p.t.is_finite() && p.t >= 0.0) {
                return Err(Error::InconsistentSequence { j: idx, reason: format!("bad packet t = {}, delta = {}", p.t, p.delta) });
            }
            match kind {
                PerturbationKind::Admissible if !(p.eta >= 0.0 && p.eta <= 1.0 + 1e-12) => {
                    return Err(Error::InconsistentSequence { j: idx, reason: format!("eta = {} exceeds 1", p.eta) });
                }
                PerturbationKind::Counterexample if p.nu == 0 => {
                    return Err(Error::InconsistentSequence { j: idx, reason: "nu must be at least 1".into() });
                }
                _ => {}
            }
            if let Some(next) = packets.get(j + 1) {
                if p.end() >= next.t {
                    return Err(Error::InconsistentSequence {
                        j: idx,
                        reason: format!("packet [{}, {}] overlaps the next one at {}", p.t, p.end(), next.t),
                    });
                }
            }
        }
        Ok(PerturbationProfile { kind, packets, bump: Some(bump) })
    }

    /// Index of the packet containing `t`.
    pub fn packet_at(&self, t: f64) -> Option<usize> {
        let idx = self.packets.partition_point(|p| p.t <= t);
        if idx == 0 {
            return None;
        }
        self.packets[idx - 1].contains(t).then_some(idx - 1)
    }

    pub fn eval<R: Real>(&self, t: R) -> R {
        let Some(i) = self.packet_at(t.val()) else {
            return t.lift(1.0);
        };
        let p = self.packets[i];
        let bump = self.bump.as_ref().expect("packets without a bump");
        let x = (t - p.t) / p.delta;
        match self.kind {
            PerturbationKind::Identity => t.lift(1.0),
            PerturbationKind::Admissible => bump.eval(x) * p.eta + 1.0,
            PerturbationKind::Counterexample => bump.eval_periodic(x * p.nu as f64) + 1.0,
        }
    }

    /// `(inf ω, sup ω)` from the bump range.
    pub fn range(&self) -> (f64, f64) {
        let Some(b) = self.bump else { return (1.0, 1.0) };
        match self.kind {
            PerturbationKind::Identity => (1.0, 1.0),
            PerturbationKind::Admissible => {
                let eta = self.packets.iter().fold(0.0f64, |m, p| m.max(p.eta));
                (1.0, 1.0 + eta * b.scale)
            }
            PerturbationKind::Counterexample => (1.0, 1.0 + b.scale),
        }
    }
}

fn check_spacing(j: usize, delta: f64, gap: f64) -> Result<()> {
    if delta > gap {
        return Err(Error::InconsistentSequence { j, reason: format!("delta_j = {delta} exceeds t_(j+1) - t_j = {gap}") });
    }
    Ok(())
}

/// Packets `t_j`, `δ_j`, `η_j` matched to the scale set, `j = 1..=j_max`.
pub fn make_admissible_perturbation(
    shape: &ShapeFunction,
    scales: &ScaleSet,
    bump: BumpProfile,
    j_max: usize,
) -> Result<PerturbationProfile> {
    let seq = |j: f64| -> Result<(f64, f64, f64)> {
        match (shape.family(), scales.params) {
            (ShapeFamily::Polynomial { p }, ScaleParams::Polynomial { q, r, theta_exponent }) => {
                let th = theta_exponent.unwrap_or(1.0 + q);
                Ok((2f64.powf(j), 2f64.powf(j * r - 1.0), 2f64.powf(j * (th - p - r))))
            }
            (ShapeFamily::Suprapolynomial { alpha }, ScaleParams::Suprapolynomial { beta, gamma }) => {
                Ok((j.powf(1.0 / alpha), j.powf(gamma / alpha), j.powf(-(beta + gamma) / alpha)))
            }
            (ShapeFamily::Exponential, ScaleParams::Exponential { a, b }) => {
                Ok((j, (b * j).exp(), (j * (a - b - 1.0)).exp()))
            }
            _ => Err(invalid("no admissible sequence for this shape/scale combination")),
        }
    };
    let mut packets = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let (t, delta, eta) = seq(j as f64)?;
        let (t_next, _, _) = seq(j as f64 + 1.0)?;
        check_spacing(j, delta, t_next - t)?;
        if eta > 1.0 + 1e-12 {
            return Err(Error::InconsistentSequence { j, reason: format!("eta_j = {eta} exceeds 1") });
        }
        packets.push(Packet { t, delta, eta: eta.min(1.0), nu: 1 });
    }
    PerturbationProfile::from_packets(PerturbationKind::Admissible, packets, bump)
}

/// `(t_j, δ_j, ν_j)` of the counterexample before rounding `ν_j` up, for real `j`.
pub fn counterexample_sequence(
    shape: &ShapeFunction,
    scales: &ScaleSet,
    epsilon: f64,
    sigma: f64,
    j: f64,
) -> Result<(f64, f64, f64)> {
    match (shape.family(), scales.params) {
        (ShapeFamily::Polynomial { p }, ScaleParams::Polynomial { q, .. }) => {
            if !(sigma > 1.0) {
                return Err(invalid(format!("sigma = {sigma} must exceed 1")));
            }
            Ok((sigma.powf(j), sigma.powf(j * (q - p + 1.0) - 1.0), sigma.powf(j * epsilon * (p - q))))
        }
        (ShapeFamily::Suprapolynomial { alpha }, ScaleParams::Suprapolynomial { beta, .. }) => Ok((
            j.powf(1.0 / alpha),
            j.powf(-beta / alpha),
            j.powf(epsilon * (beta - alpha + 1.0) / alpha),
        )),
        (ShapeFamily::Exponential, ScaleParams::Exponential { a, .. }) => {
            if !(sigma > 0.0) {
                return Err(invalid(format!("sigma = {sigma} must be positive")));
            }
            Ok((sigma * j, (sigma * j * (a - 1.0)).exp(), (sigma * j * epsilon * (1.0 - a)).exp()))
        }
        _ => Err(invalid("no counterexample sequence for this shape/scale combination")),
    }
}

/// Counterexample packets with `ν_j` bump periods, `j = 1..=j_max`.
/// `sigma` is the base of the geometric (polynomial) or linear (exponential)
/// spacing and is ignored for `exp(t^α)`.
pub fn make_counterexample_perturbation(
    shape: &ShapeFunction,
    scales: &ScaleSet,
    bump: BumpProfile,
    epsilon: f64,
    sigma: f64,
    j_max: usize,
) -> Result<PerturbationProfile> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon = {epsilon} must be positive")));
    }
    let seq = |j: f64| counterexample_sequence(shape, scales, epsilon, sigma, j);
    let mut packets = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let (t, delta, nu) = seq(j as f64)?;
        let (t_next, _, _) = seq(j as f64 + 1.0)?;
        check_spacing(j, delta, t_next - t)?;
        let nu = nu.ceil();
        if !(nu < 1.8e19) {
            return Err(Error::InconsistentSequence { j, reason: format!("nu_j = {nu} is not representable") });
        }
        packets.push(Packet { t, delta, eta: 1.0, nu: nu.max(1.0) as u64 });
    }
    PerturbationProfile::from_packets(PerturbationKind::Counterexample, packets, bump)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficient::{make_bump, make_scale_set, make_shape};

    #[test]
    fn polynomial_counterexample_frequencies() {
        let shape = make_shape(ShapeFamily::Polynomial { p: 2.0 }).unwrap();
        let scales =
            make_scale_set(&shape, ScaleParams::Polynomial { q: 1.0, r: 0.5, theta_exponent: None }, 2, 10.0)
                .unwrap();
        let prof = make_counterexample_perturbation(&shape, &scales, make_bump(4).unwrap(), 0.5, 2.0, 8).unwrap();
        let nus: Vec<u64> = prof.packets.iter().map(|p| p.nu).collect();
        assert_eq!(nus, [2, 2, 3, 4, 6, 8, 12, 16]);
        assert!(prof.packets.iter().all(|p| (p.delta - 0.5).abs() < 1e-15));
    }

    #[test]
    fn overlapping_packets_are_rejected() {
        let b = make_bump(2).unwrap();
        let pk = |t, delta| Packet { t, delta, eta: 0.5, nu: 1 };
        let err = PerturbationProfile::from_packets(PerturbationKind::Admissible, alloc::vec![pk(1.0, 2.0), pk(2.5, 1.0)], b);
        assert!(matches!(err, Err(Error::InconsistentSequence { j: 1, .. })));
    }

    #[test]
    fn identity_outside_packets() {
        let shape = make_shape(ShapeFamily::Exponential).unwrap();
        let scales = make_scale_set(&shape, ScaleParams::Exponential { a: 0.5, b: -0.25 }, 2, 10.0).unwrap();
        let prof = make_admissible_perturbation(&shape, &scales, make_bump(4).unwrap(), 12).unwrap();
        assert_eq!(prof.eval(0.5), 1.0);
        let p = prof.packets[0];
        assert!((prof.eval(p.t + 0.5 * p.delta) - (1.0 + p.eta * 5.0 / 9.0)).abs() < 1e-12);
    }
}
