//! CSV and JSON output formats.
//!
//! Trace CSV columns are fixed: `time_s, ntl_label, actual_x_m, actual_y_m,
//! est_x_m, est_y_m, method, abs_error_m`. Times are printed with three
//! decimals, lengths with six; estimate columns are empty while an NTL has no
//! estimate. JSON reports carry a `schema_version`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::metrics::{
    accumulate, compute_metrics, fgl_overhead, ErrorAccumulator, MetricsReport, ERROR_INDEX_BOUNDS,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: [&str; 8] = [
    "time_s",
    "ntl_label",
    "actual_x_m",
    "actual_y_m",
    "est_x_m",
    "est_y_m",
    "method",
    "abs_error_m",
];

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for s in &trace.samples {
        let (ex, ey, err) = match s.estimate.pos {
            Some(p) => (
                format!("{:.6}", p.x),
                format!("{:.6}", p.y),
                format!("{:.6}", p.distance(s.actual)),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            s.time.to_string(),
            trace.labels[s.ntl].clone(),
            format!("{:.6}", s.actual.x),
            format!("{:.6}", s.actual.y),
            ex,
            ey,
            s.estimate.method.as_str().to_string(),
            err,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trace_csv_bytes(trace: &Trace) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf)?;
    Ok(buf)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub scenario: String,
    pub master_seed: u64,
    pub episodes: u32,
    pub error_index_bounds_m: [f64; 7],
    pub reports: Vec<MetricsReport>,
}

/// Per-NTL metrics for one trace. When `baseline` names an NTL with at least
/// one fine-grained request, every report carries its overhead against it.
pub fn simulation_report(trace: &Trace, scenario: &str, baseline: Option<&str>) -> Result<SimulationReport> {
    let mut reports = trace
        .labels
        .iter()
        .map(|l| compute_metrics(trace, l))
        .collect::<Result<Vec<_>>>()?;
    if let Some(b) = baseline.and_then(|b| reports.iter().find(|r| r.label == b).cloned()) {
        for r in &mut reports {
            r.fgl_overhead_vs_baseline = fgl_overhead(r, &b).ok();
        }
    }
    Ok(SimulationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.to_string(),
        master_seed: trace.master_seed,
        episodes: trace.episodes,
        error_index_bounds_m: ERROR_INDEX_BOUNDS,
        reports,
    })
}

/// NTL types a sweep must contain, in presentation order.
pub const SWEEP_TYPES: [&str; 5] = [
    "CG-NTL",
    "FG-NTL-Improved",
    "FG-NTL",
    "EFG-NTL-Accurate",
    "EFG-NTL-Inaccurate",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    /// Over all replicates pooled.
    pub pooled: MetricsReport,
    /// One report per replicate, in replicate order.
    pub replicates: Vec<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub scenario: String,
    pub master_seed: u64,
    pub replicates: usize,
    pub rows: Vec<SweepRow>,
    /// Pooled fine-grained overhead of FG-NTL-Improved over FG-NTL.
    pub improved_vs_fg_overhead: Option<f64>,
}

impl SweepReport {
    pub fn row(&self, label: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Checks that every NTL type of [`SWEEP_TYPES`] is present.
pub fn require_sweep_types(labels: &[String]) -> Result<()> {
    match SWEEP_TYPES.iter().find(|t| !labels.iter().any(|l| l == *t)) {
        Some(missing) => Err(Error::Config(format!("sweep requires an NTL labelled `{missing}`"))),
        None => Ok(()),
    }
}

/// Metrics for one NTL over all replicates pooled sample by sample.
pub fn pooled_metrics(traces: &[Trace], label: &str) -> Result<MetricsReport> {
    let mut acc = ErrorAccumulator::default();
    let (mut fgl, mut unavailable) = (0, 0);
    for t in traces {
        let i = t
            .label_index(label)
            .ok_or_else(|| Error::EmptyTrace(label.to_string()))?;
        acc.merge(&accumulate(t, i));
        fgl += t.totals[i].fgl_count;
        unavailable += t.totals[i].fgl_unavailable;
    }
    MetricsReport::from_accumulator(label, &acc, fgl, unavailable)
}

pub fn sweep_report(traces: &[Trace], scenario: &str, master_seed: u64) -> Result<SweepReport> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Config("sweep needs at least one replicate".into()))?;
    require_sweep_types(&first.labels)?;
    let rows = first
        .labels
        .iter()
        .map(|label| {
            Ok(SweepRow {
                label: label.clone(),
                pooled: pooled_metrics(traces, label)?,
                replicates: traces
                    .iter()
                    .map(|t| compute_metrics(t, label))
                    .collect::<Result<Vec<_>>>()?,
            })
        })
        .collect::<Result<Vec<SweepRow>>>()?;
    let overhead = match (
        rows.iter().find(|r| r.label == "FG-NTL-Improved"),
        rows.iter().find(|r| r.label == "FG-NTL"),
    ) {
        (Some(a), Some(b)) => fgl_overhead(&a.pooled, &b.pooled).ok(),
        _ => None,
    };
    Ok(SweepReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: scenario.to_string(),
        master_seed,
        replicates: traces.len(),
        rows,
        improved_vs_fg_overhead: overhead,
    })
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "replicate",
    "ntl_label",
    "n_samples",
    "mae_m",
    "rmse_m",
    "within_10m",
    "fgl_count",
    "overhead_vs_fg",
];

/// One row per (replicate, NTL), then a `pooled` row per NTL.
pub fn write_sweep_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    let fg = report.row("FG-NTL");
    let emit = |w: &mut csv::Writer<W>, rep: String, r: &MetricsReport, base: Option<&MetricsReport>| {
        let overhead = base
            .and_then(|b| fgl_overhead(r, b).ok())
            .map(|o| format!("{o:.6}"))
            .unwrap_or_default();
        w.write_record([
            rep,
            r.label.clone(),
            r.n_samples.to_string(),
            format!("{:.6}", r.mae),
            format!("{:.6}", r.rmse),
            format!("{:.6}", r.within_10m()),
            r.fgl_count.to_string(),
            overhead,
        ])
    };
    for k in 0..report.replicates {
        for row in &report.rows {
            emit(&mut w, k.to_string(), &row.replicates[k], fg.map(|f| &f.replicates[k]))?;
        }
    }
    for row in &report.rows {
        emit(&mut w, "pooled".into(), &row.pooled, fg.map(|f| &f.pooled))?;
    }
    w.flush()?;
    Ok(())
}
