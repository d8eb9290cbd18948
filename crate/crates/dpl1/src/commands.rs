//! One function per subcommand. Each returns a short human-readable line
//! for stdout; errors carry the exit code.

use std::path::{Path, PathBuf};

use dpl1_core::geometry::{build_net_capped, DEFAULT_NET_CAP};
use dpl1_core::rng::derive_seed;
use dpl1_core::synth::synth_certified;
use dpl1_core::{covering_check, dp_l1_fit, synth, ResolvedParams};
use serde::Serialize;

use crate::audit::run_audit;
use crate::config::Config;
use crate::csvio::{load_dataset, save_dataset, save_net};
use crate::error::{CliError, CliResult};
use crate::experiment::{run_scaling, save_rows, ScalingSetup};
use crate::manifest::{write_json, RunManifest};

/// Seeds for the separate random streams of a command.
const DATA_STREAM: u64 = 0;
const MECHANISM_STREAM: u64 = 1;
const AUDIT_STREAM: u64 = 2;
const PROBE_STREAM: u64 = 3;

pub fn cmd_synth(cfg: &Config, seed: u64, out: &Path) -> CliResult<String> {
    let section = cfg
        .synth
        .as_ref()
        .ok_or_else(|| CliError::invalid("synth: section required by the synth command"))?;
    let data_seed = derive_seed(seed, &[DATA_STREAM]);
    let data = match section.certify_theta {
        Some(theta) => synth_certified(&cfg.model, section.n, theta, data_seed)
            .map_err(|e| CliError::core("synth.certify_theta", e))?,
        None => synth(&cfg.model, section.n, data_seed).map_err(|e| CliError::core("model", e))?,
    };
    save_dataset(out, &data)?;
    Ok(format!("wrote {} records of dimension {} to {}", data.len(), data.dim(), out.display()))
}

/// What `fit` writes: the private estimate and how it was produced.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub w_tilde: Vec<f64>,
    pub truncated_risk: f64,
    pub chosen_index: usize,
    pub net_cardinality: usize,
    pub n: usize,
    pub params: ResolvedParams,
    pub seed: u64,
}

pub fn fit_report(cfg: &Config, data: &dpl1_core::Dataset, seed: u64) -> CliResult<FitReport> {
    let set = cfg.set.build()?;
    let params = cfg.estimator_params()?;
    let mech_seed = derive_seed(seed, &[MECHANISM_STREAM]);
    let fit = dp_l1_fit(data, &set, &params, mech_seed).map_err(|e| CliError::core("fit", e))?;
    Ok(FitReport {
        w_tilde: fit.w_tilde,
        truncated_risk: fit.truncated_risk,
        chosen_index: fit.mechanism.chosen_index,
        net_cardinality: fit.net_cardinality,
        n: data.len(),
        params: fit.params,
        seed: mech_seed,
    })
}

pub fn cmd_fit(cfg: &Config, seed: u64, data_path: &Path, out: &Path) -> CliResult<String> {
    let data = load_dataset(data_path)?;
    let report = fit_report(cfg, &data, seed)?;
    write_json(out, &report)?;
    Ok(format!(
        "w_tilde = {:?} from a net of {} points (zeta {}, iota {})",
        report.w_tilde, report.net_cardinality, report.params.zeta, report.params.iota
    ))
}

pub fn cmd_audit(cfg: &Config, seed: u64, out: &Path) -> CliResult<String> {
    let report = run_audit(cfg, derive_seed(seed, &[AUDIT_STREAM]))?;
    write_json(out, &report)?;
    let line = format!(
        "max log ratio {} against epsilon {} over {} pairs on a net of {} points",
        report.max_log_ratio,
        report.epsilon,
        report.per_pair.len(),
        report.net_size
    );
    if report.passed {
        Ok(format!("audit passed: {line}"))
    } else {
        Err(CliError::AuditFailed(format!("audit failed: {line}")))
    }
}

pub fn cmd_net(cfg: &Config, seed: u64, out: &Path) -> CliResult<String> {
    let section = cfg
        .net
        .as_ref()
        .ok_or_else(|| CliError::invalid("net: section required by the net command"))?;
    let set = cfg.set.build()?;
    let net = build_net_capped(&set, section.zeta, section.cap.unwrap_or(DEFAULT_NET_CAP))
        .map_err(|e| CliError::core("net.zeta", e))?;
    save_net(out, &net)?;
    let mut line = format!("wrote {} net points to {}", net.len(), out.display());
    if section.probes > 0 {
        let cover = covering_check(&net, section.probes, derive_seed(seed, &[PROBE_STREAM]))
            .map_err(|e| CliError::core("net", e))?;
        if !cover.passed() {
            return Err(CliError::AuditFailed(format!("{line}; covering check failed: {cover:?}")));
        }
        line.push_str(&format!("; covering check passed with {} probes", section.probes));
    }
    Ok(line)
}

/// Output files of a sweep inside `out_dir`.
pub fn sweep_paths(out_dir: &Path) -> [PathBuf; 3] {
    [
        out_dir.join("scaling.csv"),
        out_dir.join("summary.json"),
        out_dir.join("manifest.json"),
    ]
}

pub fn cmd_sweep(cfg: &Config, config_path: &Path, seed: u64, threads: usize, out_dir: &Path) -> CliResult<String> {
    let mut manifest = RunManifest::start("sweep", config_path, cfg, seed, threads);
    let setup = ScalingSetup::from_config(cfg, seed)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let output = run_scaling(&setup, threads)?;
    let [csv, summary, manifest_path] = sweep_paths(out_dir);
    save_rows(&csv, &output.rows)?;
    write_json(&summary, &output.summary)?;
    manifest.outputs = vec![csv.clone(), summary, manifest_path.clone()];
    manifest.finish();
    manifest.save(&manifest_path)?;
    let skipped = output.summary.cells.iter().filter(|c| c.skipped.is_some()).count();
    let slopes: Vec<String> = output
        .summary
        .slopes
        .iter()
        .map(|s| match s.slope {
            Some(v) => format!("epsilon {}: slope {v:.3}", s.epsilon),
            None => format!("epsilon {}: no slope", s.epsilon),
        })
        .collect();
    Ok(format!(
        "wrote {} rows to {} ({} cells skipped); {}",
        output.rows.len(),
        csv.display(),
        skipped,
        slopes.join(", ")
    ))
}
