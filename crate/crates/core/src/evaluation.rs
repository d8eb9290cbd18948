//! Population ℓ1 risk, excess risk, and empirical checks of the uniform
//! concentration inequalities that relate the truncated risk to the
//! population risk over a net.

use alloc::vec::Vec;

use crate::dataset::dot;
use crate::error::{param, Error, Result};
use crate::geometry::{build_net, distance, ConstraintSet, Net};
use crate::rng::StreamRng;
use crate::special::{chi_abs_moment, gaussian_abs_shift, normal_abs_moment, SQRT_2_OVER_PI};
use crate::stats::Moments;
use crate::synth::{synth, DesignSampler, Noise, NoiseSampler, PopulationModel};
use crate::truncation::{psi, truncated_empirical_risk, TruncationSpec};

/// Smallest Monte Carlo sample size accepted.
pub const MIN_MC_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RiskEstimate {
    pub estimate: f64,
    /// Zero for deterministic oracles.
    pub std_error: f64,
}

/// How a population quantity is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    /// Closed form; Gaussian design and noise only.
    Analytic,
    /// One-dimensional quadrature over the design density; `d = 1` with
    /// Gaussian noise only.
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

fn check_w(model: &PopulationModel, w: &[f64]) -> Result<()> {
    if w.len() != model.dim() {
        return Err(Error::Shape {
            expected: model.dim(),
            found: w.len(),
        });
    }
    Ok(())
}

fn gaussian_sigma(model: &PopulationModel) -> Option<f64> {
    match model.noise {
        Noise::Gaussian { sigma } => Some(sigma),
        Noise::StudentT { .. } => None,
    }
}

/// `E|⟨x, w⟩ − y|` as the mean over `m` fresh draws.
pub fn population_risk_mc(model: &PopulationModel, w: &[f64], m: usize, seed: u64) -> Result<RiskEstimate> {
    Ok(mc_pair(model, w, m, seed)?.0)
}

/// Risk at `w` and excess over `w*` from one shared sample.
fn mc_pair(
    model: &PopulationModel,
    w: &[f64],
    m: usize,
    seed: u64,
) -> Result<(RiskEstimate, RiskEstimate)> {
    model.validate()?;
    check_w(model, w)?;
    if m < MIN_MC_SAMPLES {
        return Err(param(alloc::format!(
            "Monte Carlo needs at least {MIN_MC_SAMPLES} samples, got {m}"
        )));
    }
    let design = DesignSampler::new(&model.design)?;
    let noise = NoiseSampler::new(&model.noise)?;
    let delta: Vec<f64> = w.iter().zip(&model.w_star).map(|(a, b)| a - b).collect();
    let mut rng = StreamRng::new(seed);
    let mut x = alloc::vec![0.0; model.dim()];
    let mut risk = Moments::default();
    let mut excess = Moments::default();
    for _ in 0..m {
        design.fill(&mut rng, &mut x);
        let e = noise.draw(&mut rng);
        // ⟨x, w⟩ − y = ⟨x, w − w*⟩ − e
        let r = libm::fabs(dot(&x, &delta) - e);
        risk.push(r);
        excess.push(r - libm::fabs(e));
    }
    let est = |m: Moments| RiskEstimate {
        estimate: m.mean(),
        std_error: m.std_error(),
    };
    Ok((est(risk), est(excess)))
}

/// `√(2/π)·√(‖w − w*‖² + σ²)` for Gaussian design and noise.
pub fn population_risk_gaussian(model: &PopulationModel, w: &[f64]) -> Result<f64> {
    model.validate()?;
    check_w(model, w)?;
    if !model.is_gaussian() {
        return Err(Error::Unsupported(
            "the analytic risk needs Gaussian design and noise".into(),
        ));
    }
    let sigma = gaussian_sigma(model).unwrap_or(0.0);
    let gap = distance(w, &model.w_star);
    Ok(SQRT_2_OVER_PI * libm::hypot(gap, sigma))
}

fn quadrature_excess(model: &PopulationModel, w: &[f64]) -> Result<f64> {
    let sigma = match gaussian_sigma(model) {
        Some(s) if model.dim() == 1 => s,
        _ => {
            return Err(Error::Unsupported(
                "the quadrature oracle needs d = 1 and Gaussian noise".into(),
            ))
        }
    };
    let delta = libm::fabs(w[0] - model.w_star[0]);
    if delta == 0.0 {
        return Ok(0.0);
    }
    if sigma == 0.0 {
        return Ok(delta * model.design.abs_moment(1.0)?);
    }
    // E_e|a − e| − E|e| = σ·g(a/σ) for e ~ N(0, σ²), with a = x·δ.
    model
        .design
        .abs_expectation(|x| sigma * gaussian_abs_shift(x * delta / sigma), 1.0)
}

/// `L(w) − L(w*)`. Monte Carlo uses one draw for both terms.
pub fn excess_risk(model: &PopulationModel, w: &[f64], oracle: Oracle) -> Result<RiskEstimate> {
    model.validate()?;
    check_w(model, w)?;
    match oracle {
        Oracle::Analytic => {
            let at_star = population_risk_gaussian(model, &model.w_star)?;
            Ok(RiskEstimate {
                estimate: population_risk_gaussian(model, w)? - at_star,
                std_error: 0.0,
            })
        }
        Oracle::Quadrature => Ok(RiskEstimate {
            estimate: quadrature_excess(model, w)?,
            std_error: 0.0,
        }),
        Oracle::MonteCarlo { samples, seed } => Ok(mc_pair(model, w, samples, seed)?.1),
    }
}

/// The five uniform inequalities checked by [`concentration_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ProbeId {
    /// `L̂ ≥ L − (ι/2)·S₂ − ln(N/η)/(nι)`.
    Lower2,
    /// `L̂ ≤ L + (ι/2)·S₂ + ln(N/η)/(nι)`.
    Upper2,
    /// `L̂ ≥ L − (ι^{θ−1}/θ)·S_θ − ln(N/η)/(nι)`.
    LowerTheta,
    /// `L̂ ≤ L + (ι^{θ−1}/θ)·S_θ + ln(N/η)/(nι)`.
    UpperTheta,
    /// The ζ-shifted lower bound:
    /// `−(1/(nι)) Σ ψ(ι|rᵢ| − ιζ‖xᵢ‖) ≤ −L + ζτ + ((2ι)^{θ−1}/θ)(S_θ + ζ^θ τ^θ) + ln(N/η)/(nι)`.
    StabilityTheta,
}

impl ProbeId {
    pub const ALL: [ProbeId; 5] = [
        ProbeId::Lower2,
        ProbeId::Upper2,
        ProbeId::LowerTheta,
        ProbeId::UpperTheta,
        ProbeId::StabilityTheta,
    ];

    fn uses_theta(self) -> bool {
        !matches!(self, ProbeId::Lower2 | ProbeId::Upper2)
    }
}

/// Inputs of a concentration probe. `S₂` and `S_θ` above are the suprema
/// over `W` of `E(y − ⟨x, w⟩)²` and `E|y − ⟨x, w⟩|^θ`; τ satisfies
/// `E‖x‖₂^θ = τ^θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSetup {
    pub model: PopulationModel,
    pub set: ConstraintSet,
    pub n: usize,
    pub iota: f64,
    pub zeta: f64,
    pub eta: f64,
    /// Ignored by the second-moment probes.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProbeReport {
    pub probe: ProbeId,
    pub trials: usize,
    pub violations: usize,
    pub frequency: f64,
    pub net_size: usize,
}

/// Largest net accepted by [`concentration_probe`].
pub const PROBE_NET_LIMIT: usize = 10_000;

/// Draws `trials` datasets and counts those on which the chosen inequality
/// fails at some net point. Gaussian models only, where every population
/// quantity is exact.
pub fn concentration_probe(probe: ProbeId, setup: &ProbeSetup, trials: usize, seed: u64) -> Result<ProbeReport> {
    if trials == 0 {
        return Err(param("trials must be at least 1"));
    }
    if setup.n == 0 {
        return Err(param("n must be at least 1"));
    }
    if !(setup.eta > 0.0 && setup.eta < 1.0) {
        return Err(param("eta must lie in (0, 1)"));
    }
    let model = &setup.model;
    model.validate()?;
    model.check_in(&setup.set)?;
    if !model.is_gaussian() {
        return Err(Error::Unsupported(
            "concentration probes need Gaussian design and noise".into(),
        ));
    }
    let spec = if probe.uses_theta() {
        TruncationSpec::theta_moment(setup.theta, setup.iota)?
    } else {
        TruncationSpec::second_moment(setup.iota)?
    };
    let theta = spec.theta();
    let iota = setup.iota;
    let net = build_net(&setup.set, setup.zeta)?;
    if net.len() > PROBE_NET_LIMIT {
        return Err(Error::Unsupported(alloc::format!(
            "probe nets are limited to {PROBE_NET_LIMIT} points, got {}",
            net.len()
        )));
    }
    let sigma = gaussian_sigma(model).unwrap_or(0.0);
    let n = setup.n as f64;
    let d = model.dim();

    // Residual y − ⟨x, w⟩ ~ N(0, ‖w − w*‖² + σ²).
    let worst_sq = {
        let r = setup.set.max_distance_from(&model.w_star);
        r * r + sigma * sigma
    };
    let sup_second = worst_sq;
    let sup_theta = libm::pow(worst_sq, 0.5 * theta) * normal_abs_moment(theta);
    let tau_pow = chi_abs_moment(d, theta);
    let tau = libm::pow(tau_pow, 1.0 / theta);
    let union = libm::log(net.len() as f64 / setup.eta) / (n * iota);
    let slack = match probe {
        ProbeId::Lower2 | ProbeId::Upper2 => 0.5 * iota * sup_second + union,
        ProbeId::LowerTheta | ProbeId::UpperTheta => {
            libm::pow(iota, theta - 1.0) / theta * sup_theta + union
        }
        ProbeId::StabilityTheta => {
            let c = libm::pow(2.0 * iota, theta - 1.0) / theta;
            setup.zeta * tau + c * sup_theta + c * libm::pow(setup.zeta, theta) * tau_pow + union
        }
    };
    let population: Vec<f64> = net
        .points()
        .map(|w| population_risk_gaussian(model, w))
        .collect::<Result<_>>()?;

    let mut violations = 0;
    for t in 0..trials {
        let data = synth(model, setup.n, crate::rng::derive_seed(seed, &[t as u64]))?;
        let failed = match probe {
            ProbeId::Lower2 | ProbeId::LowerTheta => any_point(&net, &population, |w, l| {
                Ok(truncated_empirical_risk(w, &data, &spec)? < l - slack)
            })?,
            ProbeId::Upper2 | ProbeId::UpperTheta => any_point(&net, &population, |w, l| {
                Ok(truncated_empirical_risk(w, &data, &spec)? > l + slack)
            })?,
            ProbeId::StabilityTheta => any_point(&net, &population, |w, l| {
                let shifted: f64 = data
                    .records()
                    .map(|(x, y)| {
                        let r = libm::fabs(y - dot(x, w));
                        let norm = libm::sqrt(dot(x, x));
                        psi(&spec, iota * r - iota * setup.zeta * norm)
                    })
                    .sum::<f64>()
                    / (n * iota);
                Ok(-shifted > -l + slack)
            })?,
        };
        violations += failed as usize;
    }
    Ok(ProbeReport {
        probe,
        trials,
        violations,
        frequency: violations as f64 / trials as f64,
        net_size: net.len(),
    })
}

fn any_point<F>(net: &Net, population: &[f64], mut fails: F) -> Result<bool>
where
    F: FnMut(&[f64], f64) -> Result<bool>,
{
    for (w, &l) in net.points().zip(population) {
        if fails(w, l)? {
            return Ok(true);
        }
    }
    Ok(false)
}
