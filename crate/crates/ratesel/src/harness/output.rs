//! CSV and plot-data writers.
//!
//! Floats are printed in scientific notation with 17 significant digits
//! and a '.' decimal separator, so identical results produce identical
//! bytes and determinism is testable with a file compare.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{ExperimentOutput, ResultRecord, TraceRecord};

/// Full-precision float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_qmax(q: Option<u32>) -> String {
    q.map(|v| v.to_string()).unwrap_or_default()
}

/// Renders the per-cell summary table.
pub fn summary_csv(out: &ExperimentOutput) -> String {
    let mut text = String::from("realization,algorithm,qos_domain,tx_power_dbm,q_max,iterations,weighted_discrete_rate,weighted_continuous_rate");
    for bs in 0..out.n_bs {
        let _ = write!(text, ",power_fraction_bs{bs}");
    }
    text.push_str(",status\n");
    for rec in &out.summary {
        let _ = write!(
            text,
            "{},{},{},{},{},{},{},{}",
            rec.realization,
            rec.algorithm,
            rec.qos_domain,
            fmt_f64(rec.tx_power_dbm),
            fmt_qmax(rec.q_max),
            rec.iterations,
            fmt_f64(rec.weighted_discrete_rate),
            fmt_f64(rec.weighted_continuous_rate),
        );
        for bs in 0..out.n_bs {
            let frac = rec.bs_power_fraction.get(bs).copied().unwrap_or(0.0);
            let _ = write!(text, ",{}", fmt_f64(frac));
        }
        let _ = writeln!(text, ",{}", rec.status);
    }
    text
}

/// Renders the per-iteration trace table.
pub fn trace_csv(traces: &[TraceRecord]) -> String {
    let mut text = String::from(
        "realization,algorithm,qos_domain,tx_power_dbm,iteration,surrogate_objective,weighted_discrete_rate,weighted_continuous_rate\n",
    );
    for t in traces {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            t.realization,
            t.algorithm,
            t.qos_domain,
            fmt_f64(t.tx_power_dbm),
            t.iteration,
            fmt_f64(t.surrogate_objective),
            fmt_f64(t.weighted_discrete_rate),
            fmt_f64(t.weighted_continuous_rate),
        );
    }
    text
}

/// Which column of the summary indexes a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    TxPowerDbm,
    QMax,
}

impl SweepAxis {
    fn label(&self) -> &'static str {
        match self {
            SweepAxis::TxPowerDbm => "tx_power_dbm",
            SweepAxis::QMax => "q_max",
        }
    }

    fn key(&self, rec: &ResultRecord) -> String {
        match self {
            SweepAxis::TxPowerDbm => fmt_f64(rec.tx_power_dbm),
            SweepAxis::QMax => fmt_qmax(rec.q_max),
        }
    }
}

/// Mean and standard error of the rates per sweep point per algorithm,
/// over cells with "ok" status. Input records must already be sorted in
/// the canonical order, so equal groups are contiguous.
pub fn plotdata_csv(out: &ExperimentOutput, axis: SweepAxis) -> String {
    let mut text = format!(
        "{},algorithm,qos_domain,n,mean_discrete_rate,se_discrete_rate,mean_continuous_rate,se_continuous_rate\n",
        axis.label()
    );
    let ok: Vec<&ResultRecord> = out.summary.iter().filter(|r| r.status == "ok").collect();
    let mut start = 0;
    while start < ok.len() {
        let group_key = |r: &ResultRecord| {
            (axis.key(r), r.algorithm.clone(), r.qos_domain.clone())
        };
        let key = group_key(ok[start]);
        let mut end = start;
        while end < ok.len() && group_key(ok[end]) == key {
            end += 1;
        }
        let group = &ok[start..end];
        let n = group.len() as f64;
        let (mean_d, se_d) = mean_se(group.iter().map(|r| r.weighted_discrete_rate));
        let (mean_c, se_c) = mean_se(group.iter().map(|r| r.weighted_continuous_rate));
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            key.0,
            key.1,
            key.2,
            n as usize,
            fmt_f64(mean_d),
            fmt_f64(se_d),
            fmt_f64(mean_c),
            fmt_f64(se_c),
        );
        start = end;
    }
    text
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Files produced by a run.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub summary: std::path::PathBuf,
    pub trace: Option<std::path::PathBuf>,
    pub plot: Option<(std::path::PathBuf, SweepAxis)>,
}

impl OutputPaths {
    /// Standard layout inside a directory.
    pub fn in_dir(dir: &Path, trace: bool, plot: Option<SweepAxis>) -> OutputPaths {
        OutputPaths {
            summary: dir.join("summary.csv"),
            trace: trace.then(|| dir.join("trace.csv")),
            plot: plot.map(|axis| {
                let name = match axis {
                    SweepAxis::TxPowerDbm => "plot_power.csv",
                    SweepAxis::QMax => "plot_qmax.csv",
                };
                (dir.join(name), axis)
            }),
        }
    }
}

/// Writes the summary, trace, and plot-data files.
pub fn write_outputs(out: &ExperimentOutput, paths: &OutputPaths) -> Result<()> {
    if let Some(parent) = paths.summary.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&paths.summary, summary_csv(out))
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", paths.summary.display()))))?;
    if let Some(trace_path) = &paths.trace {
        fs::write(trace_path, trace_csv(&out.traces))?;
    }
    if let Some((plot_path, axis)) = &paths.plot {
        fs::write(plot_path, plotdata_csv(out, *axis))?;
    }
    Ok(())
}
