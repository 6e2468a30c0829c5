//! TOML experiment configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wavespeed_core::coefficient::{
    make_admissible_perturbation, make_bump_with_edge, make_counterexample_perturbation, make_scale_set,
    make_shape, Coefficient, PerturbationProfile, ScaleParams, ShapeFamily,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub experiments: Vec<ExperimentName>,
    pub coefficient: CoefficientConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub zones: ZonesConfig,
    #[serde(default)]
    pub propagate: PropagateConfig,
    #[serde(default)]
    pub diag: DiagConfig,
    #[serde(default)]
    pub floquet: FloquetConfig,
    #[serde(default)]
    pub counterexample: CounterexampleConfig,
    #[serde(default)]
    pub energy: EnergyConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Validate,
    Zones,
    Propagate,
    Diag,
    Floquet,
    Counterexample,
    Energy,
    All,
}

impl ExperimentName {
    pub const ORDERED: [ExperimentName; 7] = [
        ExperimentName::Validate,
        ExperimentName::Zones,
        ExperimentName::Propagate,
        ExperimentName::Diag,
        ExperimentName::Floquet,
        ExperimentName::Counterexample,
        ExperimentName::Energy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::Validate => "validate",
            ExperimentName::Zones => "zones",
            ExperimentName::Propagate => "propagate",
            ExperimentName::Diag => "diag",
            ExperimentName::Floquet => "floquet",
            ExperimentName::Counterexample => "counterexample",
            ExperimentName::Energy => "energy",
            ExperimentName::All => "all",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "validate" => ExperimentName::Validate,
            "zones" => ExperimentName::Zones,
            "propagate" => ExperimentName::Propagate,
            "diag" => ExperimentName::Diag,
            "floquet" => ExperimentName::Floquet,
            "counterexample" => ExperimentName::Counterexample,
            "energy" => ExperimentName::Energy,
            "all" => ExperimentName::All,
            _ => bail!("unknown experiment `{s}`"),
        })
    }
}

/// Expands `all`, removes duplicates and sorts into execution order.
pub fn execution_order(list: &[ExperimentName]) -> Vec<ExperimentName> {
    if list.contains(&ExperimentName::All) {
        return ExperimentName::ORDERED.to_vec();
    }
    ExperimentName::ORDERED.iter().copied().filter(|e| list.contains(e)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Constant,
    Polynomial,
    Suprapolynomial,
    Exponential,
}

/// Shape and scale parameters. Only the keys of the chosen family are allowed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_zone_constant")]
    pub zone_constant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jet_len: Option<usize>,
}

fn default_m() -> u32 {
    2
}

fn default_zone_constant() -> f64 {
    10.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKindConfig {
    None,
    Admissible,
    Counterexample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    pub kind: PerturbationKindConfig,
    pub packets: usize,
    pub bump_order: u32,
    pub bump_edge: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig {
            kind: PerturbationKindConfig::None,
            packets: 10,
            bump_order: 4,
            bump_edge: 0.1,
            epsilon: None,
            sigma: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    /// `ε` for the A5' check.
    pub epsilon: f64,
    /// Grid horizon; the family default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig { epsilon: 0.5, t_max: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZonesConfig {
    pub xi_min: f64,
    pub xi_max: f64,
    pub count: usize,
}

impl Default for ZonesConfig {
    fn default() -> Self {
        ZonesConfig { xi_min: 1e-4, xi_max: 1e2, count: 25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagateConfig {
    /// Frequencies for the two-sided hyperbolic-zone check.
    pub xi: Vec<f64>,
    pub t_max: f64,
    pub per_decade: usize,
    pub constant: f64,
    pub max_drift: f64,
    pub tol: f64,
    /// Random intervals for the Liouville determinant check.
    pub liouville_samples: usize,
    pub liouville_tol: f64,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        PropagateConfig {
            xi: vec![0.01, 0.03, 0.1],
            t_max: 100.0,
            per_decade: 16,
            constant: 20.0,
            max_drift: 0.05,
            tol: 1e-9,
            liouville_samples: 50,
            liouville_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagConfig {
    pub k_max: usize,
    /// Random `(t, ξ)` points inside the hyperbolic zone.
    pub points: usize,
    pub xi_min: f64,
    pub xi_max: f64,
    pub t_max: f64,
}

impl Default for DiagConfig {
    fn default() -> Self {
        DiagConfig { k_max: 3, points: 100, xi_min: 0.05, xi_max: 1.0, t_max: 100.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloquetConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub step: f64,
    pub refine_tol: f64,
    pub sweep_points: usize,
    pub tol: f64,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        FloquetConfig {
            lambda_min: 1e-2,
            lambda_max: 4.0 * std::f64::consts::PI,
            step: 1e-2,
            refine_tol: 1e-8,
            sweep_points: 400,
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CounterexampleConfig {
    pub packets: Vec<usize>,
    pub frequencies: usize,
    pub tol: f64,
    /// Two-sided energy ceiling of admissible data the amplification is compared with.
    pub ceiling: f64,
    /// Parameters of the blow-up sequence; `sigma` defaults to the perturbation's.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_sigma: Option<f64>,
    pub blowup_terms: usize,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            packets: (1..=8).collect(),
            frequencies: 8,
            tol: 1e-10,
            ceiling: 2.0,
            blowup_sigma: None,
            blowup_terms: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub edge: f64,
    pub dimension: u32,
    pub t0: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub packet_points: usize,
    pub tol: f64,
    pub max_drift: f64,
    pub order: usize,
    pub edge_panels: usize,
    pub plateau_panels: usize,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            rho_lo: 1.0,
            rho_hi: 2.0,
            edge: 0.2,
            dimension: 1,
            t0: 0.0,
            t_max: 50.0,
            per_decade: 16,
            packet_points: 4,
            tol: 1e-8,
            max_drift: 0.05,
            order: 8,
            edge_panels: 4,
            plateau_panels: 2,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn shape_family(&self) -> Result<ShapeFamily> {
        let c = &self.coefficient;
        Ok(match c.family {
            Family::Constant => ShapeFamily::Constant,
            Family::Polynomial => ShapeFamily::Polynomial { p: need(c.p, "p")? },
            Family::Suprapolynomial => ShapeFamily::Suprapolynomial { alpha: need(c.alpha, "alpha")? },
            Family::Exponential => ShapeFamily::Exponential,
        })
    }

    pub fn scale_params(&self) -> Result<ScaleParams> {
        let c = &self.coefficient;
        let allowed: &[&str] = match c.family {
            Family::Constant => &[],
            Family::Polynomial => &["p", "q", "r", "theta_exponent"],
            Family::Suprapolynomial => &["alpha", "beta", "gamma"],
            Family::Exponential => &["a", "b"],
        };
        let given = [
            ("p", c.p),
            ("q", c.q),
            ("r", c.r),
            ("theta_exponent", c.theta_exponent),
            ("alpha", c.alpha),
            ("beta", c.beta),
            ("gamma", c.gamma),
            ("a", c.a),
            ("b", c.b),
        ];
        for (name, v) in given {
            if v.is_some() && !allowed.contains(&name) {
                bail!("parameter `{name}` does not belong to the {:?} family", c.family);
            }
        }
        Ok(match c.family {
            Family::Constant => ScaleParams::Constant,
            Family::Polynomial => {
                ScaleParams::Polynomial { q: need(c.q, "q")?, r: need(c.r, "r")?, theta_exponent: c.theta_exponent }
            }
            Family::Suprapolynomial => ScaleParams::Suprapolynomial { beta: need(c.beta, "beta")?, gamma: need(c.gamma, "gamma")? },
            Family::Exponential => ScaleParams::Exponential { a: need(c.a, "a")?, b: need(c.b, "b")? },
        })
    }

    pub fn build_coefficient(&self) -> Result<Coefficient> {
        let shape = make_shape(self.shape_family()?)?;
        let scales = make_scale_set(&shape, self.scale_params()?, self.coefficient.m, self.coefficient.zone_constant)?;
        let p = &self.perturbation;
        let profile = match p.kind {
            PerturbationKindConfig::None => PerturbationProfile::identity(),
            PerturbationKindConfig::Admissible => {
                let bump = make_bump_with_edge(p.bump_order, p.bump_edge)?;
                make_admissible_perturbation(&shape, &scales, bump, p.packets)?
            }
            PerturbationKindConfig::Counterexample => {
                let bump = make_bump_with_edge(p.bump_order, p.bump_edge)?;
                let eps = need(p.epsilon, "perturbation.epsilon")?;
                let sigma = match self.coefficient.family {
                    Family::Suprapolynomial => p.sigma.unwrap_or(1.0),
                    _ => need(p.sigma, "perturbation.sigma")?,
                };
                make_counterexample_perturbation(&shape, &scales, bump, eps, sigma, p.packets)?
            }
        };
        let coef = Coefficient::new(shape, profile, scales);
        Ok(match self.coefficient.jet_len {
            Some(n) => coef.with_jet_len(n),
            None => coef,
        })
    }
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.with_context(|| format!("missing parameter `{name}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const POLY: &str = r#"
experiments = ["validate"]
[coefficient]
family = "polynomial"
p = 2.0
q = 1.0
r = 0.5
[perturbation]
kind = "admissible"
packets = 10
bump_order = 4
bump_edge = 0.1
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = ExperimentConfig::from_toml(POLY).unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
        c.build_coefficient().unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = POLY.replace("r = 0.5", "r = 0.5\nrho = 1.0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn rejects_foreign_family_parameters() {
        let bad = POLY.replace("r = 0.5", "r = 0.5\nalpha = 0.5");
        let c = ExperimentConfig::from_toml(&bad).unwrap();
        assert!(c.build_coefficient().is_err());
    }

    #[test]
    fn all_expands_in_order() {
        let order = execution_order(&[ExperimentName::Energy, ExperimentName::All]);
        assert_eq!(order, ExperimentName::ORDERED.to_vec());
        let order = execution_order(&[ExperimentName::Energy, ExperimentName::Validate, ExperimentName::Energy]);
        assert_eq!(order, vec![ExperimentName::Validate, ExperimentName::Energy]);
    }
}
