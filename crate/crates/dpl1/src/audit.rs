//! Neighbor-pair universes for exact privacy audits.

use dpl1_core::estimator::auto_iota;
use dpl1_core::geometry::{build_net_capped, zeta_for_cap};
use dpl1_core::mechanism::AuditConfig;
use dpl1_core::rng::{derive_seed, StreamRng};
use dpl1_core::{dp_audit, synth, Dataset, Net, PopulationModel, TruncationSpec};
use serde::Serialize;

use crate::config::{AuditConfigSection, Config};
use crate::error::{CliError, CliResult};

/// Largest net the default audit resolution aims for.
pub const DEFAULT_AUDIT_NET: u64 = 200;

/// `count` record-swap pairs over one synthetic base dataset of `n` records.
/// Every third replacement has its response inflated and every third its
/// covariates, so the universe includes gross outliers.
pub fn swap_pairs(model: &PopulationModel, n: usize, count: usize, seed: u64) -> CliResult<Vec<(Dataset, Dataset)>> {
    let base = synth(model, n, derive_seed(seed, &[0])).map_err(|e| CliError::core("model", e))?;
    let mut rng = StreamRng::derive(seed, &[1]);
    (0..count)
        .map(|k| {
            let fresh = synth(model, 1, derive_seed(seed, &[2, k as u64]))
                .map_err(|e| CliError::core("model", e))?;
            let mut x = fresh.x(0).to_vec();
            let mut y = fresh.y(0);
            match k % 3 {
                1 => y *= 1e3 * (1.0 + rng.uniform()),
                2 => x.iter_mut().for_each(|v| *v *= 1e2 * (1.0 + rng.uniform())),
                _ => {}
            }
            let i = (rng.uniform() * n as f64) as usize % n;
            let other = base.with_record(i, &x, y).map_err(|e| CliError::core("audit", e))?;
            Ok((base.clone(), other))
        })
        .collect()
}

/// A pair that moves the score of two far-apart net points by the full
/// per-record bound in opposite directions: every record sits exactly on
/// one point, and the swapped record sits exactly on the other, with enough
/// leverage that each misses the other point by at least `1/ι`.
///
/// Returns `None` for single-point nets.
pub fn adversarial_pair(net: &Net, n: usize, iota: f64) -> CliResult<Option<(Dataset, Dataset)>> {
    if net.len() < 2 {
        return Ok(None);
    }
    let (lo, hi) = net.points().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p[0]), hi.max(p[0]))
    });
    if hi <= lo {
        return Ok(None);
    }
    let c = (1.0 / (iota * (hi - lo))).max(1.0);
    let mut x = vec![0.0; net.dim()];
    x[0] = c;
    let rows: Vec<(Vec<f64>, f64)> = (0..n).map(|_| (x.clone(), c * lo)).collect();
    let d = Dataset::from_rows(&rows).map_err(|e| CliError::core("audit", e))?;
    let e = d.with_record(0, &x, c * hi).map_err(|e| CliError::core("audit", e))?;
    Ok(Some((d, e)))
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditOutput {
    pub passed: bool,
    pub epsilon: f64,
    pub max_log_ratio: f64,
    pub sensitivity_scale: f64,
    pub iota: f64,
    pub zeta: f64,
    pub net_size: usize,
    pub n: usize,
    pub swap_pairs: usize,
    pub adversarial_pairs: usize,
    pub per_pair: Vec<f64>,
}

/// Builds the configured pair universe and audits it exactly.
pub fn run_audit(cfg: &Config, seed: u64) -> CliResult<AuditOutput> {
    let section = cfg.audit.clone().unwrap_or_default();
    let AuditConfigSection {
        n,
        pairs,
        zeta,
        iota,
        sensitivity_scale,
        adversarial,
    } = section;
    let set = cfg.set.build()?;
    let params = cfg.estimator_params()?;
    let iota = match iota {
        Some(i) => i,
        None => auto_iota(n.max(2), set.dim(), &params).map_err(|e| CliError::core("audit", e))?
            * params.iota_scale,
    };
    let truncation = if params.assumption.uses_theta() {
        TruncationSpec::theta_moment(params.moment_order(), iota)
    } else {
        TruncationSpec::second_moment(iota)
    }
    .map_err(|e| CliError::core("audit.iota", e))?;
    let zeta = zeta.unwrap_or_else(|| zeta_for_cap(&set, DEFAULT_AUDIT_NET));
    let net = build_net_capped(&set, zeta, params.net_cap).map_err(|e| CliError::core("audit.zeta", e))?;

    let mut universe = swap_pairs(&cfg.model, n, pairs, seed)?;
    let mut adversarial_pairs = 0;
    if adversarial {
        if let Some(p) = adversarial_pair(&net, n, iota)? {
            universe.push(p);
            adversarial_pairs = 1;
        }
    }
    if universe.is_empty() {
        return Err(CliError::invalid("audit.pairs: the pair universe is empty"));
    }
    let mut ac = AuditConfig::new(params.epsilon, truncation);
    ac.sensitivity_scale = sensitivity_scale;
    let report = dp_audit(&universe, &net, &ac).map_err(|e| CliError::core("audit", e))?;
    Ok(AuditOutput {
        passed: report.passed,
        epsilon: report.epsilon,
        max_log_ratio: report.max_log_ratio,
        sensitivity_scale,
        iota,
        zeta,
        net_size: net.len(),
        n,
        swap_pairs: pairs,
        adversarial_pairs,
        per_pair: report.per_pair,
    })
}
