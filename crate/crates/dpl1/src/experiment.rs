//! Excess-risk scaling sweeps.
//!
//! Every (n, ε) cell runs `trials` independent fits. Trial `t` of a cell
//! draws all of its randomness from `derive_seed(root, [n, ε bits, t])`, so
//! rows do not depend on thread count or execution order.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use dpl1_core::evaluation::{excess_risk, Oracle};
use dpl1_core::geometry::build_net_capped;
use dpl1_core::rng::derive_seed;
use dpl1_core::stats::{count_inversions, loglog_slope, median};
use dpl1_core::{
    choose_parameters, synth, ConstraintSet, EstimatorParams, Noise, PopulationModel,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, OracleChoice};
use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str =
    "n,d,epsilon,theta,assumption,trial,seed,excess_risk,net_size,iota,zeta,wall_time_ms";

#[derive(Debug, Clone)]
pub struct ScalingSetup {
    pub model: PopulationModel,
    pub set: ConstraintSet,
    pub params: EstimatorParams,
    pub n_values: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub oracle: OracleChoice,
    pub mc_samples: usize,
    pub root_seed: u64,
}

impl ScalingSetup {
    pub fn from_config(cfg: &Config, root_seed: u64) -> CliResult<Self> {
        let x = cfg
            .experiment
            .as_ref()
            .ok_or_else(|| CliError::invalid("experiment: section required by sweep"))?;
        let set = cfg.set.build()?;
        cfg.model.check_in(&set).map_err(|e| CliError::core("model.w_star", e))?;
        Ok(Self {
            model: cfg.model.clone(),
            set,
            params: cfg.estimator_params()?,
            n_values: x.n_values.clone(),
            epsilons: x.epsilons.clone(),
            trials: x.trials,
            oracle: x.oracle,
            mc_samples: x.mc_samples,
            root_seed,
        })
    }

    fn oracle_for(&self, seed: u64) -> CliResult<Oracle> {
        let gaussian_noise = matches!(self.model.noise, Noise::Gaussian { .. });
        let mc = Oracle::MonteCarlo {
            samples: self.mc_samples,
            seed,
        };
        Ok(match self.oracle {
            OracleChoice::Auto if self.model.is_gaussian() => Oracle::Analytic,
            OracleChoice::Auto if self.model.dim() == 1 && gaussian_noise => Oracle::Quadrature,
            OracleChoice::Auto | OracleChoice::MonteCarlo => mc,
            OracleChoice::Analytic if self.model.is_gaussian() => Oracle::Analytic,
            OracleChoice::Quadrature if self.model.dim() == 1 && gaussian_noise => {
                Oracle::Quadrature
            }
            other => {
                return Err(CliError::invalid(format!(
                    "experiment.oracle: {other:?} does not apply to this model"
                )))
            }
        })
    }

    fn oracle_name(&self) -> &'static str {
        match self.oracle_for(0) {
            Ok(Oracle::Analytic) => "analytic",
            Ok(Oracle::Quadrature) => "quadrature",
            _ => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub assumption: &'static str,
    pub trial: u64,
    pub seed: u64,
    pub w_tilde: Vec<f64>,
    pub excess_risk: f64,
    pub net_size: usize,
    pub iota: f64,
    pub zeta: f64,
    pub wall_time_ms: f64,
}

impl ScalingRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.n,
            self.d,
            self.epsilon,
            self.theta,
            self.assumption,
            self.trial,
            self.seed,
            self.excess_risk,
            self.net_size,
            self.iota,
            self.zeta,
            self.wall_time_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub median_excess_risk: Option<f64>,
    pub net_size: Option<usize>,
    pub iota: Option<f64>,
    pub zeta: Option<f64>,
    /// Why the cell produced no rows.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeSummary {
    pub epsilon: f64,
    /// Least-squares slope of ln(median excess risk) on ln n; absent with
    /// fewer than three usable n values.
    pub slope: Option<f64>,
    pub inversions: usize,
    pub n_values: Vec<usize>,
    pub medians: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSummary {
    pub d: usize,
    pub assumption: &'static str,
    pub theta: f64,
    pub tau: f64,
    pub trials: usize,
    pub oracle: &'static str,
    pub root_seed: u64,
    pub cells: Vec<CellSummary>,
    pub slopes: Vec<SlopeSummary>,
}

#[derive(Debug, Clone)]
pub struct ScalingOutput {
    pub rows: Vec<ScalingRow>,
    pub summary: ScalingSummary,
}

fn run_cell(setup: &ScalingSetup, n: usize, epsilon: f64) -> CliResult<(Vec<ScalingRow>, CellSummary)> {
    let mut params = setup.params;
    params.epsilon = epsilon;
    let resolved = choose_parameters(n.max(2), &setup.set, &params)
        .map_err(|e| CliError::core("estimator", e))?;
    let net = build_net_capped(&setup.set, resolved.zeta, resolved.net_cap)
        .map_err(|e| CliError::core(&format!("cell n={n} epsilon={epsilon}"), e))?;
    let d = setup.set.dim();
    let rows = (0..setup.trials as u64)
        .into_par_iter()
        .map(|t| -> CliResult<ScalingRow> {
            let start = Instant::now();
            let seed = derive_seed(setup.root_seed, &[n as u64, epsilon.to_bits(), t]);
            let data = synth(&setup.model, n, derive_seed(seed, &[0]))
                .map_err(|e| CliError::core("model", e))?;
            let fit = dpl1_core::estimator::fit_on_net(&data, &net, &resolved, derive_seed(seed, &[1]))
                .map_err(|e| CliError::core("estimator", e))?;
            let oracle = setup.oracle_for(derive_seed(seed, &[2]))?;
            let excess = excess_risk(&setup.model, &fit.w_tilde, oracle)
                .map_err(|e| CliError::core("experiment.oracle", e))?;
            Ok(ScalingRow {
                n,
                d,
                epsilon,
                theta: resolved.theta,
                assumption: resolved.assumption.name(),
                trial: t,
                seed,
                w_tilde: fit.w_tilde,
                excess_risk: excess.estimate,
                net_size: net.len(),
                iota: resolved.iota,
                zeta: resolved.zeta,
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let excess: Vec<f64> = rows.iter().map(|r| r.excess_risk).collect();
    let cell = CellSummary {
        n,
        epsilon,
        trials: rows.len(),
        median_excess_risk: median(&excess),
        net_size: Some(net.len()),
        iota: Some(resolved.iota),
        zeta: Some(resolved.zeta),
        skipped: None,
    };
    Ok((rows, cell))
}

/// Runs every cell on a pool of `threads` workers. Cells whose net exceeds
/// the cap are recorded as skipped; any other error aborts the sweep.
pub fn run_scaling(setup: &ScalingSetup, threads: usize) -> CliResult<ScalingOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::invalid(format!("--threads: {e}")))?;
    setup.oracle_for(0)?;

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &n in &setup.n_values {
        for &epsilon in &setup.epsilons {
            match pool.install(|| run_cell(setup, n, epsilon)) {
                Ok((r, c)) => {
                    rows.extend(r);
                    cells.push(c);
                }
                Err(CliError::Capacity(msg)) => cells.push(CellSummary {
                    n,
                    epsilon,
                    trials: 0,
                    median_excess_risk: None,
                    net_size: None,
                    iota: None,
                    zeta: None,
                    skipped: Some(msg),
                }),
                Err(e) => return Err(e),
            }
        }
    }

    let slopes = setup
        .epsilons
        .iter()
        .map(|&epsilon| {
            let (ns, meds): (Vec<usize>, Vec<f64>) = cells
                .iter()
                .filter(|c| c.epsilon == epsilon)
                .filter_map(|c| c.median_excess_risk.map(|m| (c.n, m)))
                .unzip();
            let slope = if ns.len() >= 3 {
                let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
                loglog_slope(&xs, &meds)
            } else {
                None
            };
            SlopeSummary {
                epsilon,
                slope,
                inversions: count_inversions(&meds),
                n_values: ns,
                medians: meds,
            }
        })
        .collect();

    let summary = ScalingSummary {
        d: setup.set.dim(),
        assumption: setup.params.assumption.name(),
        theta: setup.params.moment_order(),
        tau: setup.params.tau,
        trials: setup.trials,
        oracle: setup.oracle_name(),
        root_seed: setup.root_seed,
        cells,
        slopes,
    };
    Ok(ScalingOutput { rows, summary })
}

pub fn write_rows<W: Write>(mut out: W, rows: &[ScalingRow]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()
}

pub fn save_rows(path: &Path, rows: &[ScalingRow]) -> CliResult<()> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_rows(std::io::BufWriter::new(file), rows).map_err(|e| CliError::io(path, e))
}

