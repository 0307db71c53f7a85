//! Config-driven Monte Carlo experiments.
//!
//! An experiment is a grid of cells: realization x transmit power x QoS
//! domain x algorithm (x top grid rate when sweeping the rate set). All
//! algorithms inside one cell see bit-identical channels, drawn from a
//! generator derived only from the master seed and the realization
//! counter, so runs are reproducible and paired across algorithms.
//! Realizations may be fanned out to a worker pool; records are sorted
//! into a canonical order before writing, so the output bytes do not
//! depend on the pool size.

mod config;
mod output;

pub use config::{Algorithm, ExperimentConfig, RateSetSpec};
pub use output::{
    fmt_f64, plotdata_csv, summary_csv, trace_csv, write_outputs, OutputPaths, SweepAxis,
};

use rayon::prelude::*;

use crate::baselines::{maxsinr_run, tdma_run, wmmse_run};
use crate::envelope_bcd::{run as bcd_run, TracePoint};
use crate::error::Result;
use crate::link_metrics::evaluate_rates;
use crate::network_model::{
    draw_channels, place_scenario, realization_rng, NetworkRealization,
};
use crate::rate_model::{QosDomain, RateSet};

/// The four experiment designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// One realization at the configured power.
    SingleRun,
    /// Per-iteration traces at the configured power.
    Convergence,
    /// Sweep the transmit power.
    SweepPower,
    /// Sweep the top rate of an integer grid rate set.
    SweepQmax,
}

impl ExperimentKind {
    /// Sweep column for the plot-data aggregation.
    pub fn sweep_axis(&self) -> SweepAxis {
        match self {
            ExperimentKind::SweepQmax => SweepAxis::QMax,
            _ => SweepAxis::TxPowerDbm,
        }
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub realization: usize,
    pub algorithm: String,
    /// QoS domain name for the proposed algorithm, "-" for benchmarks.
    pub qos_domain: String,
    pub tx_power_dbm: f64,
    pub q_max: Option<u32>,
    pub iterations: usize,
    pub weighted_discrete_rate: f64,
    pub weighted_continuous_rate: f64,
    /// Fraction of each budget spent, in [0, 1].
    pub bs_power_fraction: Vec<f64>,
    /// "ok", or an error tag; failed cells keep the run going.
    pub status: String,
}

/// One iteration of one cell, for convergence plots.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub realization: usize,
    pub algorithm: String,
    pub qos_domain: String,
    pub tx_power_dbm: f64,
    pub iteration: usize,
    pub surrogate_objective: f64,
    pub weighted_discrete_rate: f64,
    pub weighted_continuous_rate: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: Vec<ResultRecord>,
    pub traces: Vec<TraceRecord>,
    pub n_bs: usize,
}

/// Runs the full experiment grid; cell failures are recorded in the
/// cell's status and do not abort the run.
pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let powers: Vec<f64> = match kind {
        ExperimentKind::SweepPower => cfg.tx_power_sweep_dbm.clone(),
        _ => vec![cfg.scenario.tx_power_dbm],
    };
    let qmaxes: Vec<Option<u32>> = match kind {
        ExperimentKind::SweepQmax => cfg.qmax_sweep.iter().map(|&q| Some(q)).collect(),
        _ => vec![None],
    };
    let n_realizations = match kind {
        ExperimentKind::SingleRun => 1,
        _ => cfg.n_realizations,
    };
    let collect_traces = matches!(
        kind,
        ExperimentKind::Convergence | ExperimentKind::SingleRun
    );

    let per_realization: Vec<(Vec<ResultRecord>, Vec<TraceRecord>)> = (0..n_realizations)
        .into_par_iter()
        .map(|idx| run_realization(cfg, idx, &powers, &qmaxes, collect_traces))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = Vec::new();
    let mut traces = Vec::new();
    for (s, t) in per_realization {
        summary.extend(s);
        traces.extend(t);
    }
    // canonical order: sweep point, algorithm, domain, realization
    summary.sort_by(|a, b| {
        a.tx_power_dbm
            .total_cmp(&b.tx_power_dbm)
            .then(a.q_max.cmp(&b.q_max))
            .then(a.algorithm.cmp(&b.algorithm))
            .then(a.qos_domain.cmp(&b.qos_domain))
            .then(a.realization.cmp(&b.realization))
    });
    traces.sort_by(|a, b| {
        a.algorithm
            .cmp(&b.algorithm)
            .then(a.qos_domain.cmp(&b.qos_domain))
            .then(a.realization.cmp(&b.realization))
            .then(a.iteration.cmp(&b.iteration))
    });
    Ok(ExperimentOutput {
        summary,
        traces,
        n_bs: cfg.scenario.n_bs,
    })
}

fn run_realization(
    cfg: &ExperimentConfig,
    idx: usize,
    powers: &[f64],
    qmaxes: &[Option<u32>],
    collect_traces: bool,
) -> Result<(Vec<ResultRecord>, Vec<TraceRecord>)> {
    let mut rng = realization_rng(cfg.master_seed, idx as u64);
    let geometry = place_scenario(&cfg.scenario, &mut rng)?;
    let base = draw_channels(&geometry, &cfg.scenario, &mut rng)?;

    let mut summary = Vec::new();
    let mut traces = Vec::new();
    for &power in powers {
        let real = base.with_tx_power_dbm(power);
        for &q_max in qmaxes {
            let rate_set = match q_max {
                Some(q) => RateSet::grid(q, cfg.margin),
                None => cfg.rate_spec.build(cfg.margin)?,
            };
            let rate_sets = vec![rate_set; real.n_users()];
            for &algorithm in &cfg.algorithms {
                let domains: &[Option<QosDomain>] = if algorithm == Algorithm::Proposed {
                    &cfg.qos_domains.iter().map(|&d| Some(d)).collect::<Vec<_>>()
                } else {
                    &[None]
                };
                for &domain in domains {
                    let (record, cell_traces) = run_cell(
                        cfg,
                        &real,
                        &rate_sets,
                        idx,
                        power,
                        q_max,
                        algorithm,
                        domain,
                        collect_traces,
                    );
                    summary.push(record);
                    traces.extend(cell_traces);
                }
            }
        }
    }
    Ok((summary, traces))
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    real: &NetworkRealization,
    rate_sets: &[RateSet],
    realization: usize,
    tx_power_dbm: f64,
    q_max: Option<u32>,
    algorithm: Algorithm,
    domain: Option<QosDomain>,
    collect_traces: bool,
) -> (ResultRecord, Vec<TraceRecord>) {
    let qos_domain = domain.map_or("-".to_string(), |d| d.name().to_string());
    let mut record = ResultRecord {
        realization,
        algorithm: algorithm.name().to_string(),
        qos_domain: qos_domain.clone(),
        tx_power_dbm,
        q_max,
        iterations: 0,
        weighted_discrete_rate: 0.0,
        weighted_continuous_rate: 0.0,
        bs_power_fraction: vec![0.0; real.n_bs()],
        status: "ok".into(),
    };

    let outcome: Result<(usize, f64, f64, Vec<f64>, Vec<TracePoint>)> = (|| {
        match algorithm {
            Algorithm::Proposed => {
                let bcd_cfg = crate::envelope_bcd::BcdConfig {
                    qos_domain: domain.expect("proposed always has a domain"),
                    ..cfg.bcd.clone()
                };
                let state = bcd_run(real, rate_sets, &bcd_cfg)?;
                let report = evaluate_rates(real, &state.precoders, rate_sets)?;
                Ok((
                    state.iterations,
                    report.weighted_discrete_sum,
                    report.weighted_continuous_sum,
                    power_fractions(real, &report.bs_power_used),
                    state.trace,
                ))
            }
            Algorithm::Wmmse => {
                let run = wmmse_run(real, &cfg.baseline, rate_sets)?;
                let report = evaluate_rates(real, &run.precoders, rate_sets)?;
                Ok((
                    run.iterations,
                    report.weighted_discrete_sum,
                    report.weighted_continuous_sum,
                    power_fractions(real, &report.bs_power_used),
                    run.trace,
                ))
            }
            Algorithm::MaxSinr => {
                let run = maxsinr_run(real, &cfg.baseline)?;
                let report = evaluate_rates(real, &run.precoders, rate_sets)?;
                Ok((
                    run.iterations,
                    report.weighted_discrete_sum,
                    report.weighted_continuous_sum,
                    power_fractions(real, &report.bs_power_used),
                    Vec::new(),
                ))
            }
            Algorithm::Tdma => {
                let result = tdma_run(real, rate_sets)?;
                Ok((
                    1,
                    result.weighted_discrete_sum,
                    result.weighted_continuous_sum,
                    result.bs_power_fraction.clone(),
                    Vec::new(),
                ))
            }
        }
    })();

    let mut traces = Vec::new();
    match outcome {
        Ok((iterations, discrete, continuous, fractions, trace)) => {
            record.iterations = iterations;
            record.weighted_discrete_rate = discrete;
            record.weighted_continuous_rate = continuous;
            record.bs_power_fraction = fractions;
            if collect_traces {
                traces = trace
                    .into_iter()
                    .map(|t| TraceRecord {
                        realization,
                        algorithm: algorithm.name().to_string(),
                        qos_domain: qos_domain.clone(),
                        tx_power_dbm,
                        iteration: t.iteration,
                        surrogate_objective: t.surrogate_objective,
                        weighted_discrete_rate: t.weighted_discrete_rate,
                        weighted_continuous_rate: t.weighted_continuous_rate,
                    })
                    .collect();
            }
        }
        Err(e) => {
            record.status = format!("error: {e}").replace(',', ";").replace('\n', " ");
        }
    }
    (record, traces)
}

fn power_fractions(real: &NetworkRealization, used: &[f64]) -> Vec<f64> {
    used.iter()
        .zip(&real.power_budget)
        .map(|(&u, &p)| if p > 0.0 { u / p } else { 0.0 })
        .collect()
}
