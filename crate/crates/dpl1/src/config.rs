//! JSON run configuration.
//!
//! A config has one required `seed`-able root, the population `model`, the
//! constraint `set`, the `estimator` settings, and one optional section per
//! subcommand (`synth`, `experiment`, `audit`, `net`). Unknown keys are
//! rejected so typos surface as errors with their field path.

use std::path::Path;

use dpl1_core::geometry::{SetKind, DEFAULT_NET_CAP};
use dpl1_core::{certified_tau, Assumption, ConstraintSet, EstimatorParams, PopulationModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: Option<u64>,
    pub model: PopulationModel,
    pub set: SetConfig,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub audit: Option<AuditConfigSection>,
    #[serde(default)]
    pub net: Option<NetConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Ball { center: Vec<f64>, radius: f64 },
    /// `half_widths` may hold a single value that applies to every axis.
    Box { center: Vec<f64>, half_widths: Vec<f64> },
}

impl SetConfig {
    pub fn build(&self) -> CliResult<ConstraintSet> {
        let set = match self {
            SetConfig::Ball { center, radius } => {
                ConstraintSet::new(SetKind::Ball, center.clone(), &[*radius])
            }
            SetConfig::Box { center, half_widths } => {
                ConstraintSet::new(SetKind::Box, center.clone(), half_widths)
            }
        };
        set.map_err(|e| CliError::core("set", e))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    pub assumption: Assumption,
    #[serde(default)]
    pub theta: Option<f64>,
    /// Moment bound; certified from the model when absent.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub iota: Option<f64>,
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub net_cap: Option<u64>,
    #[serde(default = "one")]
    pub iota_scale: f64,
    #[serde(default = "one")]
    pub zeta_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    /// Refuse to generate unless the design has a finite moment of this order.
    #[serde(default)]
    pub certify_theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    /// Analytic for Gaussian models, quadrature for d = 1 with Gaussian
    /// noise, Monte Carlo otherwise.
    #[default]
    Auto,
    Analytic,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_values: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub oracle: OracleChoice,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfigSection {
    /// Records in each base dataset.
    #[serde(default = "default_audit_n")]
    pub n: usize,
    /// Record-swap pairs, in addition to the adversarial pair.
    #[serde(default = "default_audit_pairs")]
    pub pairs: usize,
    /// Net resolution; defaults to the finest ζ whose net has at most 200 points.
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub iota: Option<f64>,
    /// Multiplies the sensitivity used by the mechanism. Values below 1
    /// deliberately under-calibrate it.
    #[serde(default = "one")]
    pub sensitivity_scale: f64,
    #[serde(default = "yes")]
    pub adversarial: bool,
}

impl Default for AuditConfigSection {
    fn default() -> Self {
        Self {
            n: default_audit_n(),
            pairs: default_audit_pairs(),
            zeta: None,
            iota: None,
            sensitivity_scale: 1.0,
            adversarial: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub zeta: f64,
    #[serde(default)]
    pub cap: Option<u64>,
    /// Random probes for a covering check; 0 skips the check.
    #[serde(default)]
    pub probes: usize,
}

fn default_eta() -> f64 {
    0.05
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_mc_samples() -> usize {
    100_000
}

fn default_audit_n() -> usize {
    10
}

fn default_audit_pairs() -> usize {
    200
}

fn positive(path: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid(format!("{path}: must be positive and finite, got {v}")))
    }
}

impl Config {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::invalid(format!("config {path}: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks every section that is present.
    pub fn validate(&self) -> CliResult<()> {
        self.model.validate().map_err(|e| CliError::core("model", e))?;
        let set = self.set.build()?;
        if self.model.dim() != set.dim() {
            return Err(CliError::invalid(format!(
                "model.w_star: dimension {} does not match set dimension {}",
                self.model.dim(),
                set.dim()
            )));
        }

        let est = &self.estimator;
        positive("estimator.epsilon", est.epsilon)?;
        if !(est.eta > 0.0 && est.eta < 1.0) {
            return Err(CliError::invalid(format!(
                "estimator.eta: must lie in (0, 1), got {}",
                est.eta
            )));
        }
        for (name, v) in [
            ("estimator.theta", est.theta),
            ("estimator.tau", est.tau),
            ("estimator.iota", est.iota),
            ("estimator.zeta", est.zeta),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        positive("estimator.iota_scale", est.iota_scale)?;
        positive("estimator.zeta_scale", est.zeta_scale)?;
        if est.net_cap == Some(0) {
            return Err(CliError::invalid("estimator.net_cap: must be at least 1"));
        }
        if est.assumption.uses_theta() {
            match est.theta {
                Some(t) if t > 1.0 && t < 2.0 => {}
                Some(t) => {
                    return Err(CliError::invalid(format!(
                        "estimator.theta: must lie in (1, 2) for {}, got {t}",
                        est.assumption.name()
                    )))
                }
                None => {
                    return Err(CliError::invalid(format!(
                        "estimator.theta: required by assumption {}",
                        est.assumption.name()
                    )))
                }
            }
        }

        if let Some(s) = &self.synth {
            if s.n == 0 {
                return Err(CliError::invalid("synth.n: must be at least 1"));
            }
            if let Some(t) = s.certify_theta {
                positive("synth.certify_theta", t)?;
            }
        }
        if let Some(x) = &self.experiment {
            if x.n_values.is_empty() {
                return Err(CliError::invalid("experiment.n_values: must not be empty"));
            }
            if x.n_values.windows(2).any(|w| w[0] >= w[1]) || x.n_values[0] == 0 {
                return Err(CliError::invalid(
                    "experiment.n_values: must be positive and strictly increasing",
                ));
            }
            if x.epsilons.is_empty() {
                return Err(CliError::invalid("experiment.epsilons: must not be empty"));
            }
            for (i, &e) in x.epsilons.iter().enumerate() {
                positive(&format!("experiment.epsilons[{i}]"), e)?;
            }
            if x.epsilons.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::invalid("experiment.epsilons: must be strictly increasing"));
            }
            if x.trials == 0 {
                return Err(CliError::invalid("experiment.trials: must be at least 1"));
            }
            if x.mc_samples < dpl1_core::evaluation::MIN_MC_SAMPLES {
                return Err(CliError::invalid(format!(
                    "experiment.mc_samples: must be at least {}",
                    dpl1_core::evaluation::MIN_MC_SAMPLES
                )));
            }
        }
        if let Some(a) = &self.audit {
            if a.n == 0 {
                return Err(CliError::invalid("audit.n: must be at least 1"));
            }
            for (name, v) in [("audit.zeta", a.zeta), ("audit.iota", a.iota)] {
                if let Some(v) = v {
                    positive(name, v)?;
                }
            }
            positive("audit.sensitivity_scale", a.sensitivity_scale)?;
        }
        if let Some(n) = &self.net {
            positive("net.zeta", n.zeta)?;
            if n.cap == Some(0) {
                return Err(CliError::invalid("net.cap: must be at least 1"));
            }
        }
        Ok(())
    }

    /// Root seed: the command-line override wins, then the config value.
    pub fn root_seed(&self, cli: Option<u64>) -> CliResult<u64> {
        cli.or(self.seed).ok_or_else(|| {
            CliError::invalid("seed: no root seed given; set `seed` in the config or pass --seed")
        })
    }

    /// Estimator parameters with τ certified from the model when not given.
    pub fn estimator_params(&self) -> CliResult<EstimatorParams> {
        let est = &self.estimator;
        let mut params = EstimatorParams::new(est.epsilon, est.eta, est.assumption, 1.0);
        params.theta = est.theta;
        params.tau = match est.tau {
            Some(t) => t,
            None => certified_tau(
                &self.model,
                params.moment_order(),
                est.assumption.moment_mode(),
            )
            .map_err(|e| {
                CliError::core("estimator.tau (certified from model; set it explicitly)", e)
            })?,
        };
        params.iota = est.iota;
        params.zeta = est.zeta;
        params.net_cap = est.net_cap.unwrap_or(DEFAULT_NET_CAP);
        params.iota_scale = est.iota_scale;
        params.zeta_scale = est.zeta_scale;
        params.validate().map_err(|e| CliError::core("estimator", e))?;
        Ok(params)
    }
}
