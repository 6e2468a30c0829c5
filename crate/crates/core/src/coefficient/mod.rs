//! Shape functions, scale sets, bump profiles and the perturbed speed
//! `a(t) = λ(t) ω(t)`.

mod bump;
mod perturbation;
mod scales;
mod shape;

pub use bump::{make_bump, make_bump_with_edge, smooth_step, BumpProfile};
pub use perturbation::{
    counterexample_sequence, make_admissible_perturbation, make_counterexample_perturbation, Packet, PerturbationKind,
    PerturbationProfile,
};
pub use scales::{make_scale_set, ScaleParams, ScaleSet};
pub use shape::{make_shape, ShapeFamily, ShapeFunction};

use crate::jet::{RJet, Real, JET_CAP};

/// Default number of Taylor coefficients carried for derivative work.
pub const DEFAULT_JET_LEN: usize = JET_CAP;

#[derive(Clone, Debug)]
pub struct Coefficient {
    pub shape: ShapeFunction,
    pub perturbation: PerturbationProfile,
    pub scales: ScaleSet,
    jet_len: usize,
}

impl Coefficient {
    pub fn new(shape: ShapeFunction, perturbation: PerturbationProfile, scales: ScaleSet) -> Self {
        Coefficient { shape, perturbation, scales, jet_len: DEFAULT_JET_LEN }
    }

    /// `ω ≡ 1`, so `a = λ`.
    pub fn unperturbed(shape: ShapeFunction, scales: ScaleSet) -> Self {
        Self::new(shape, PerturbationProfile::identity(), scales)
    }

    /// Same shape and scales with the perturbation removed.
    pub fn without_perturbation(&self) -> Self {
        Self::unperturbed(self.shape.clone(), self.scales.clone())
    }

    /// Limit the number of Taylor coefficients (derivative budget + 1).
    pub fn with_jet_len(mut self, len: usize) -> Self {
        self.jet_len = len.clamp(2, JET_CAP);
        self
    }

    pub fn jet_len(&self) -> usize {
        self.jet_len
    }

    pub fn lambda(&self, t: f64) -> f64 {
        self.shape.lambda(t)
    }

    pub fn omega(&self, t: f64) -> f64 {
        self.perturbation.eval(t)
    }

    pub fn a(&self, t: f64) -> f64 {
        self.shape.lambda(t) * self.perturbation.eval(t)
    }

    /// `λ'(t) / λ(t)`.
    pub fn lambda_log_derivative(&self, t: f64) -> f64 {
        self.shape.log_derivative(t)
    }

    /// `Λ(t) = 1 + ∫_0^t λ`.
    pub fn primitive(&self, t: f64) -> f64 {
        self.shape.primitive(t)
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.scales.theta(t)
    }

    pub fn lambda_jet(&self, t: f64) -> RJet {
        self.shape.lambda(RJet::variable(t, self.jet_len))
    }

    pub fn omega_jet(&self, t: f64) -> RJet {
        self.perturbation.eval(RJet::variable(t, self.jet_len))
    }

    /// Taylor jet of `a` at `t`; the product rule does the Leibniz sum.
    pub fn a_jet(&self, t: f64) -> RJet {
        let x = RJet::variable(t, self.jet_len);
        self.shape.lambda(x) * self.perturbation.eval(x)
    }

    /// `d^k a / dt^k` at `t`, for `k` below the jet length.
    pub fn deriv(&self, t: f64, k: usize) -> f64 {
        assert!(k < self.jet_len, "derivative order {k} exceeds the jet budget");
        self.a_jet(t).deriv(k)
    }

    /// Generic evaluation of `a`; used by callers that carry their own scalars.
    pub fn a_generic<R: Real>(&self, t: R) -> R {
        self.shape.lambda(t) * self.perturbation.eval(t)
    }
}
