//! The exponential mechanism over a finite candidate set.
//!
//! Candidate `r` is selected with probability proportional to
//! `exp(ε·u_r/(2Δu))`. All probabilities are formed in log space with the
//! maximum exponent shifted out, so scores of any magnitude are safe.

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{param, Error, Result};
use crate::geometry::Net;
use crate::rng::StreamRng;
use crate::stats::compensated_sum;
use crate::truncation::{truncated_empirical_risk, TruncationSpec};

/// Largest candidate count for which the exact distribution is materialized.
pub const EXACT_DISTRIBUTION_LIMIT: usize = 1_000_000;

/// Absolute tolerance of the ε comparison in [`dp_audit`].
pub const AUDIT_TOL: f64 = 1e-9;

/// Privacy budget, score sensitivity and the scores of every candidate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MechanismSpec {
    pub epsilon: f64,
    pub sensitivity: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub scores: Vec<f64>,
}

impl MechanismSpec {
    pub fn new(epsilon: f64, sensitivity: f64, scores: Vec<f64>) -> Result<Self> {
        let spec = Self {
            epsilon,
            sensitivity,
            scores,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(param(alloc::format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if !(self.sensitivity > 0.0 && self.sensitivity.is_finite()) {
            return Err(param(alloc::format!(
                "sensitivity must be positive and finite, got {}",
                self.sensitivity
            )));
        }
        if self.scores.is_empty() {
            return Err(param("the mechanism needs at least one candidate"));
        }
        if let Some(i) = self.scores.iter().position(|s| !s.is_finite()) {
            return Err(param(alloc::format!("score {i} is not finite")));
        }
        Ok(())
    }

    /// `ε/(2Δu)`.
    pub fn exponent_scale(&self) -> f64 {
        self.epsilon / (2.0 * self.sensitivity)
    }

    fn exponents(&self) -> impl Iterator<Item = f64> + '_ {
        let s = self.exponent_scale();
        self.scores.iter().map(move |u| s * u)
    }
}

/// Output of [`sample`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MechanismResult {
    pub chosen_index: usize,
    pub chosen_score: f64,
    /// Present when there are at most [`EXACT_DISTRIBUTION_LIMIT`] candidates.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub exact_distribution: Option<Vec<f64>>,
    pub seed: u64,
    pub spec: MechanismSpec,
}

/// `2·saturation/(nι)`: how far one record can move the truncated risk, taken
/// as the score sensitivity.
pub fn score_sensitivity(n: usize, spec: &TruncationSpec) -> Result<f64> {
    if n == 0 {
        return Err(param("n must be at least 1"));
    }
    Ok(2.0 * spec.saturation() / (n as f64 * spec.iota()))
}

/// `ln p_r` for every candidate.
pub fn log_probabilities(spec: &MechanismSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let top = spec.exponents().fold(f64::NEG_INFINITY, f64::max);
    let log_z = libm::log(compensated_sum(spec.exponents().map(|a| libm::exp(a - top))));
    Ok(spec.exponents().map(|a| (a - top) - log_z).collect())
}

/// Exact selection probabilities.
pub fn exact_output_distribution(spec: &MechanismSpec) -> Result<Vec<f64>> {
    Ok(log_probabilities(spec)?
        .into_iter()
        .map(libm::exp)
        .collect())
}

/// Inverse-CDF sampler over a fixed probability vector.
#[derive(Debug, Clone)]
pub struct ExponentialSampler {
    cumulative: Vec<f64>,
}

impl ExponentialSampler {
    pub fn new(probabilities: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn draw(&self, rng: &mut StreamRng) -> usize {
        let total = *self.cumulative.last().expect("nonempty");
        let u = rng.uniform() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        // Guard against u landing on the rounded total; skip zero-mass tails.
        i.min(self.cumulative.len() - 1)
    }
}

/// Draws one candidate. Deterministic given `seed`.
pub fn sample(spec: MechanismSpec, seed: u64) -> Result<MechanismResult> {
    let mut rng = StreamRng::new(seed);
    sample_with(spec, &mut rng)
}

/// As [`sample`], drawing from an existing stream.
pub fn sample_with(spec: MechanismSpec, rng: &mut StreamRng) -> Result<MechanismResult> {
    spec.validate()?;
    let (chosen_index, exact_distribution) = if spec.scores.len() <= EXACT_DISTRIBUTION_LIMIT {
        let probs = exact_output_distribution(&spec)?;
        let i = ExponentialSampler::new(&probs).draw(rng);
        (i, Some(probs))
    } else {
        (gumbel_max(&spec, rng), None)
    };
    Ok(MechanismResult {
        chosen_index,
        chosen_score: spec.scores[chosen_index],
        exact_distribution,
        seed: rng.seed(),
        spec,
    })
}

/// `argmax_r ε·u_r/(2Δu) + G_r` with independent standard Gumbel `G_r`.
fn gumbel_max(spec: &MechanismSpec, rng: &mut StreamRng) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, a) in spec.exponents().enumerate() {
        let g = -libm::log(-libm::log(rng.uniform_open()));
        if a + g > best {
            best = a + g;
            arg = i;
        }
    }
    arg
}

/// Settings for [`dp_audit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditConfig {
    pub epsilon: f64,
    pub truncation: TruncationSpec,
    /// Multiplies the sensitivity from [`score_sensitivity`]. Values below 1
    /// under-calibrate the mechanism and let the audit detect the leak.
    pub sensitivity_scale: f64,
    /// Accept pairs with no differing record.
    pub allow_identical: bool,
}

impl AuditConfig {
    pub fn new(epsilon: f64, truncation: TruncationSpec) -> Self {
        Self {
            epsilon,
            truncation,
            sensitivity_scale: 1.0,
            allow_identical: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AuditReport {
    /// Max over candidates of `|ln p_D(r) − ln p_D′(r)|`, per pair.
    pub per_pair: Vec<f64>,
    pub max_log_ratio: f64,
    pub epsilon: f64,
    pub passed: bool,
}

/// Negated truncated risk at every net point.
pub fn net_scores(data: &Dataset, net: &Net, spec: &TruncationSpec) -> Result<Vec<f64>> {
    data.check_dim(net.dim())?;
    net.points()
        .map(|w| truncated_empirical_risk(w, data, spec).map(|r| -r))
        .collect()
}

/// Exact privacy audit: the largest log-probability ratio between the
/// mechanism's output distributions on each neighboring pair.
pub fn dp_audit(pairs: &[(Dataset, Dataset)], net: &Net, config: &AuditConfig) -> Result<AuditReport> {
    if pairs.is_empty() {
        return Err(param("the audit needs at least one pair"));
    }
    if net.len() > EXACT_DISTRIBUTION_LIMIT {
        return Err(Error::Unsupported(alloc::format!(
            "exact audit needs at most {EXACT_DISTRIBUTION_LIMIT} net points, got {}",
            net.len()
        )));
    }
    if !(config.sensitivity_scale > 0.0 && config.sensitivity_scale.is_finite()) {
        return Err(param("sensitivity_scale must be positive and finite"));
    }
    let mut per_pair = Vec::with_capacity(pairs.len());
    for (k, (d, e)) in pairs.iter().enumerate() {
        match d.differing_records(e) {
            None => {
                return Err(Error::NotNeighbors {
                    pair: k,
                    reason: "datasets differ in size or dimension".into(),
                })
            }
            Some(diff) if diff.len() > 1 => {
                return Err(Error::NotNeighbors {
                    pair: k,
                    reason: alloc::format!("{} records differ", diff.len()),
                })
            }
            Some(diff) if diff.is_empty() && !config.allow_identical => {
                return Err(Error::NotNeighbors {
                    pair: k,
                    reason: "datasets are identical".into(),
                })
            }
            Some(_) => {}
        }
        let sensitivity =
            score_sensitivity(d.len(), &config.truncation)? * config.sensitivity_scale;
        let lp = log_probabilities(&MechanismSpec::new(
            config.epsilon,
            sensitivity,
            net_scores(d, net, &config.truncation)?,
        )?)?;
        let lq = log_probabilities(&MechanismSpec::new(
            config.epsilon,
            sensitivity,
            net_scores(e, net, &config.truncation)?,
        )?)?;
        let worst = lp
            .iter()
            .zip(&lq)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max);
        per_pair.push(worst);
    }
    let max_log_ratio = per_pair.iter().copied().fold(0.0, f64::max);
    Ok(AuditReport {
        per_pair,
        max_log_ratio,
        epsilon: config.epsilon,
        passed: max_log_ratio <= config.epsilon + AUDIT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_net, ConstraintSet};
    use alloc::vec;

    fn spec(scores: Vec<f64>) -> MechanismSpec {
        // ε/(2Δu) = 1
        MechanismSpec::new(2.0, 1.0, scores).unwrap()
    }

    #[test]
    fn sensitivities() {
        let s = TruncationSpec::second_moment(0.1).unwrap();
        assert!((score_sensitivity(100, &s).unwrap() - 0.138_629_436_111_989_062).abs() < 1e-16);
        let s = TruncationSpec::second_moment(1.0).unwrap();
        assert!((score_sensitivity(1, &s).unwrap() - 1.386_294_361_119_890_619).abs() < 1e-15);
        let s = TruncationSpec::theta_moment(1.5, 0.1).unwrap();
        assert!((score_sensitivity(100, &s).unwrap() - 0.081_093_021_621_632_876).abs() < 1e-16);
        assert!(score_sensitivity(0, &s).is_err());
    }

    #[test]
    fn distribution_examples() {
        assert_eq!(exact_output_distribution(&spec(vec![7.0, 7.0])).unwrap(), vec![0.5, 0.5]);
        let p = exact_output_distribution(&spec(vec![0.0, libm::log(3.0)])).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-15 && (p[1] - 0.75).abs() < 1e-15);
        let p = exact_output_distribution(&spec(vec![0.0, 1e6])).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_eq!(p[1], 1.0);
        assert!(p[0] < 1e-300);
        assert!(exact_output_distribution(&spec_unchecked(vec![])).is_err());
    }

    fn spec_unchecked(scores: Vec<f64>) -> MechanismSpec {
        MechanismSpec {
            epsilon: 1.0,
            sensitivity: 1.0,
            scores,
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(MechanismSpec::new(0.0, 1.0, vec![0.0]).is_err());
        assert!(MechanismSpec::new(1.0, -1.0, vec![0.0]).is_err());
        assert!(MechanismSpec::new(1.0, 1.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn single_candidate() {
        for seed in 0..20 {
            assert_eq!(sample(spec(vec![-3.0]), seed).unwrap().chosen_index, 0);
        }
    }

    #[test]
    fn gumbel_matches_softmax() {
        let s = spec(vec![0.0, libm::log(3.0)]);
        let mut rng = StreamRng::new(42);
        let n = 200_000;
        let ones = (0..n).filter(|_| gumbel_max(&s, &mut rng) == 1).count();
        let f = ones as f64 / n as f64;
        // 3.5σ band
        assert!((f - 0.75).abs() < 3.5 * libm::sqrt(0.75 * 0.25 / n as f64), "{f}");
    }

    #[test]
    fn audit_identical_and_single_point() {
        let set = ConstraintSet::interval(-1.0, 1.0).unwrap();
        let d = Dataset::from_rows(&[(vec![1.0], 0.3), (vec![-0.5], 2.0)]).unwrap();
        let e = d.with_record(0, &[4.0], -9.0).unwrap();
        let t = TruncationSpec::second_moment(0.5).unwrap();
        let mut cfg = AuditConfig::new(1.0, t);
        let net = build_net(&set, 0.1).unwrap();
        assert!(dp_audit(&[(d.clone(), d.clone())], &net, &cfg).is_err());
        cfg.allow_identical = true;
        assert_eq!(dp_audit(&[(d.clone(), d.clone())], &net, &cfg).unwrap().max_log_ratio, 0.0);
        let single = build_net(&set, set.diameter()).unwrap();
        assert_eq!(dp_audit(&[(d.clone(), e.clone())], &single, &cfg).unwrap().max_log_ratio, 0.0);
        let far = e.with_record(1, &[0.0], 0.0).unwrap();
        assert!(matches!(
            dp_audit(&[(d, far)], &net, &cfg),
            Err(Error::NotNeighbors { pair: 0, .. })
        ));
    }
}
