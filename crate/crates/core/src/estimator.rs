//! Parameter selection and the end-to-end private fit.
//!
//! [`dp_l1_fit`] builds a ζ-net of the constraint set (which depends on the
//! set only, never on the data), scores every net point by its negated
//! truncated risk and draws one point with the exponential mechanism.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{param, Result};
use crate::geometry::{build_net_capped, projected_net_size, ConstraintSet, Net, DEFAULT_NET_CAP};
use crate::mechanism::{net_scores, sample, score_sensitivity, MechanismResult, MechanismSpec};
use crate::synth::MomentMode;
use crate::truncation::{truncated_empirical_risk, TruncationSpec};

/// Which moment condition the design is assumed to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Assumption {
    /// `E‖x‖₂² ≤ τ²`.
    L2Second,
    /// `E x_j² ≤ τ²` for every coordinate.
    CoordSecond,
    /// `E‖x‖₂^θ ≤ τ^θ`, θ ∈ (1, 2).
    L2Theta,
    /// `E|x_j|^θ ≤ τ^θ` for every coordinate, θ ∈ (1, 2).
    CoordTheta,
}

impl Assumption {
    pub const ALL: [Assumption; 4] = [
        Assumption::L2Second,
        Assumption::CoordSecond,
        Assumption::L2Theta,
        Assumption::CoordTheta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Assumption::L2Second => "l2_second",
            Assumption::CoordSecond => "coord_second",
            Assumption::L2Theta => "l2_theta",
            Assumption::CoordTheta => "coord_theta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn uses_theta(self) -> bool {
        matches!(self, Assumption::L2Theta | Assumption::CoordTheta)
    }

    pub fn moment_mode(self) -> MomentMode {
        match self {
            Assumption::L2Second | Assumption::L2Theta => MomentMode::L2,
            Assumption::CoordSecond | Assumption::CoordTheta => MomentMode::Coordinate,
        }
    }
}

/// User-facing estimator settings. `iota` and `zeta` are chosen
/// automatically when `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimatorParams {
    pub epsilon: f64,
    /// Failure probability η ∈ (0, 1).
    pub eta: f64,
    pub assumption: Assumption,
    /// Moment order; required by the θ assumptions, ignored otherwise.
    pub theta: Option<f64>,
    pub tau: f64,
    pub iota: Option<f64>,
    pub zeta: Option<f64>,
    pub net_cap: u64,
    /// Multiplies the automatic ι.
    pub iota_scale: f64,
    /// Multiplies the automatic ζ.
    pub zeta_scale: f64,
}

impl EstimatorParams {
    pub fn new(epsilon: f64, eta: f64, assumption: Assumption, tau: f64) -> Self {
        Self {
            epsilon,
            eta,
            assumption,
            theta: None,
            tau,
            iota: None,
            zeta: None,
            net_cap: DEFAULT_NET_CAP,
            iota_scale: 1.0,
            zeta_scale: 1.0,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("epsilon", self.epsilon)?;
        positive("tau", self.tau)?;
        positive("iota_scale", self.iota_scale)?;
        positive("zeta_scale", self.zeta_scale)?;
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(param(alloc::format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if let Some(iota) = self.iota {
            positive("iota", iota)?;
        }
        if let Some(zeta) = self.zeta {
            positive("zeta", zeta)?;
        }
        if self.net_cap == 0 {
            return Err(param("net_cap must be at least 1"));
        }
        if self.assumption.uses_theta() {
            match self.theta {
                Some(t) if t > 1.0 && t < 2.0 => {}
                Some(t) => return Err(param(alloc::format!("theta must lie in (1, 2), got {t}"))),
                None => {
                    return Err(param(alloc::format!(
                        "assumption {} needs theta",
                        self.assumption.name()
                    )))
                }
            }
        }
        Ok(())
    }

    /// Moment order in effect: θ, or 2 for the second-moment assumptions.
    pub fn moment_order(&self) -> f64 {
        if self.assumption.uses_theta() {
            self.theta.unwrap_or(2.0)
        } else {
            2.0
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(param(alloc::format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

/// Which rule produced ζ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ZetaRule {
    Override,
    /// `min(Δ/2, 1/n)`.
    InverseN,
    /// `min(Δ/2, rate/τ)`, used when the `1/n` net exceeds the cap.
    RateMatched,
}

impl ZetaRule {
    pub fn name(self) -> &'static str {
        match self {
            ZetaRule::Override => "override",
            ZetaRule::InverseN => "inverse_n",
            ZetaRule::RateMatched => "rate_matched",
        }
    }
}

/// Parameters after automatic selection.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResolvedParams {
    pub epsilon: f64,
    pub eta: f64,
    pub assumption: Assumption,
    /// 2 for the second-moment assumptions.
    pub theta: f64,
    pub tau: f64,
    pub iota: f64,
    pub zeta: f64,
    pub zeta_rule: ZetaRule,
    pub net_cap: u64,
}

impl ResolvedParams {
    pub fn truncation(&self) -> Result<TruncationSpec> {
        if self.assumption.uses_theta() {
            TruncationSpec::theta_moment(self.theta, self.iota)
        } else {
            TruncationSpec::second_moment(self.iota)
        }
    }
}

/// Automatic ι with all rate constants equal to 1.
pub fn auto_iota(n: usize, d: usize, params: &EstimatorParams) -> Result<f64> {
    if n < 2 {
        return Err(param("automatic parameters need n >= 2"));
    }
    let (nf, df) = (n as f64, d as f64);
    let log_term = libm::log(nf) * libm::log(1.0 / params.eta);
    let eps = params.epsilon;
    let tau = params.tau;
    let theta = params.moment_order();
    Ok(match params.assumption {
        Assumption::L2Second => libm::sqrt(df * log_term / (nf * eps * tau * tau)),
        Assumption::CoordSecond => libm::sqrt(log_term / (tau * tau * nf * eps)),
        Assumption::L2Theta => libm::pow(df * log_term / (nf * eps), 1.0 / theta) / tau,
        Assumption::CoordTheta => {
            libm::pow(log_term / (nf * eps), (theta - 1.0) / theta) / tau
        }
    })
}

/// Target excess-risk rate with all constants equal to 1.
pub fn target_rate(n: usize, d: usize, params: &EstimatorParams) -> Result<f64> {
    if n < 2 {
        return Err(param("automatic parameters need n >= 2"));
    }
    let (nf, df) = (n as f64, d as f64);
    let base = libm::log(nf) * libm::log(1.0 / params.eta) / (nf * params.epsilon);
    let tau = params.tau;
    let theta = params.moment_order();
    let p = (theta - 1.0) / theta;
    Ok(match params.assumption {
        Assumption::L2Second => tau * libm::sqrt(df * base),
        Assumption::CoordSecond => tau * df * libm::sqrt(base),
        Assumption::L2Theta => tau * libm::pow(df * base, p),
        Assumption::CoordTheta => tau * df * libm::pow(base, p),
    })
}

/// Resolves ι and ζ for `n` records over `set`.
pub fn choose_parameters(n: usize, set: &ConstraintSet, params: &EstimatorParams) -> Result<ResolvedParams> {
    params.validate()?;
    let d = set.dim();
    let iota = match params.iota {
        Some(i) => i,
        None => auto_iota(n, d, params)? * params.iota_scale,
    };
    positive("iota", iota)?;
    let half = 0.5 * set.diameter();
    let (zeta, zeta_rule) = match params.zeta {
        Some(z) => (z, ZetaRule::Override),
        None => {
            if n < 2 {
                return Err(param("automatic parameters need n >= 2"));
            }
            let inverse = libm::fmin(half, 1.0 / n as f64) * params.zeta_scale;
            if projected_net_size(set, inverse)? <= params.net_cap {
                (inverse, ZetaRule::InverseN)
            } else {
                let rate = target_rate(n, d, params)?;
                (
                    libm::fmin(half, rate / params.tau) * params.zeta_scale,
                    ZetaRule::RateMatched,
                )
            }
        }
    };
    positive("zeta", zeta)?;
    Ok(ResolvedParams {
        epsilon: params.epsilon,
        eta: params.eta,
        assumption: params.assumption,
        theta: params.moment_order(),
        tau: params.tau,
        iota,
        zeta,
        zeta_rule,
        net_cap: params.net_cap,
    })
}

/// Output of [`dp_l1_fit`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimateResult {
    pub w_tilde: Vec<f64>,
    /// Truncated empirical risk at `w_tilde`.
    pub truncated_risk: f64,
    pub params: ResolvedParams,
    pub net_cardinality: usize,
    pub mechanism: MechanismResult,
}

/// The private estimator. Deterministic given `seed`.
///
/// Datasets with a single record use the `n = 2` rule for automatic
/// parameters.
pub fn dp_l1_fit(data: &Dataset, set: &ConstraintSet, params: &EstimatorParams, seed: u64) -> Result<EstimateResult> {
    data.check_dim(set.dim())?;
    let resolved = choose_parameters(data.len().max(2), set, params)?;
    let net = build_net_capped(set, resolved.zeta, resolved.net_cap)?;
    fit_on_net(data, &net, &resolved, seed)
}

/// As [`dp_l1_fit`] with parameters already resolved and the net already
/// built, so callers can share one net across many datasets.
pub fn fit_on_net(data: &Dataset, net: &Net, resolved: &ResolvedParams, seed: u64) -> Result<EstimateResult> {
    data.check_dim(net.dim())?;
    let spec = resolved.truncation()?;
    let scores = net_scores(data, net, &spec)?;
    let sensitivity = score_sensitivity(data.len(), &spec)?;
    let mechanism = sample(MechanismSpec::new(resolved.epsilon, sensitivity, scores)?, seed)?;
    Ok(EstimateResult {
        w_tilde: net.point(mechanism.chosen_index).to_vec(),
        truncated_risk: -mechanism.chosen_score,
        params: *resolved,
        net_cardinality: net.len(),
        mechanism,
    })
}

/// Exhaustive minimizer of the truncated risk over the net; ties go to the
/// lowest index.
pub fn nonprivate_net_minimizer(data: &Dataset, net: &Net, spec: &TruncationSpec) -> Result<(Vec<f64>, f64)> {
    data.check_dim(net.dim())?;
    let mut best = (0, f64::INFINITY);
    for (i, w) in net.points().enumerate() {
        let r = truncated_empirical_risk(w, data, spec)?;
        if r < best.1 {
            best = (i, r);
        }
    }
    Ok((net.point(best.0).to_vec(), best.1))
}
