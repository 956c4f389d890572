//! Localization error and overhead statistics.

use serde::{Deserialize, Serialize};

use crate::engine::Trace;
use crate::error::{Error, Result};
use crate::planner::theoretical_mae;

/// Upper bounds of error indices 1..=7 in meters. Each index counts errors
/// in the closed range `[0, bound]`, so the fractions form a CDF.
pub const ERROR_INDEX_BOUNDS: [f64; 7] = [2.0, 5.0, 10.0, 20.0, 30.0, 50.0, 75.0];

/// Index (1-based) whose bound is 10 m.
pub const WITHIN_10M_INDEX: usize = 3;

/// Running sums from which a report is finalized; merging is exact.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorAccumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub within: [u64; 7],
    pub warmup: u64,
}

impl ErrorAccumulator {
    pub fn push(&mut self, err: f64) {
        self.n += 1;
        self.sum += err;
        self.sum_sq += err * err;
        for (slot, bound) in self.within.iter_mut().zip(ERROR_INDEX_BOUNDS) {
            if err <= bound {
                *slot += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &ErrorAccumulator) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        for (a, b) in self.within.iter_mut().zip(other.within) {
            *a += b;
        }
        self.warmup += other.warmup;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub n_samples: u64,
    /// Samples taken before the NTL had any estimate; excluded from the stats.
    pub warmup_samples: u64,
    pub cle: f64,
    pub mae: f64,
    pub rmse: f64,
    /// Fraction of errors within each index bound, index 1 first.
    pub within_bound: [f64; 7],
    pub fgl_count: u64,
    pub fgl_unavailable: u64,
    pub fgl_overhead_vs_baseline: Option<f64>,
}

impl MetricsReport {
    pub fn from_accumulator(label: &str, acc: &ErrorAccumulator, fgl_count: u64, fgl_unavailable: u64) -> Result<Self> {
        if acc.n == 0 {
            return Err(Error::EmptyTrace(label.to_string()));
        }
        let n = acc.n as f64;
        Ok(Self {
            label: label.to_string(),
            n_samples: acc.n,
            warmup_samples: acc.warmup,
            cle: acc.sum,
            mae: acc.sum / n,
            rmse: (acc.sum_sq / n).sqrt(),
            within_bound: acc.within.map(|c| c as f64 / n),
            fgl_count,
            fgl_unavailable,
            fgl_overhead_vs_baseline: None,
        })
    }

    /// Fraction within error index `k` (1-based).
    pub fn within_index(&self, k: usize) -> f64 {
        self.within_bound[k - 1]
    }

    pub fn within_10m(&self) -> f64 {
        self.within_index(WITHIN_10M_INDEX)
    }
}

/// Accumulates one NTL's errors from a trace.
pub fn accumulate(trace: &Trace, ntl: usize) -> ErrorAccumulator {
    let mut acc = ErrorAccumulator::default();
    for s in trace.samples_for(ntl) {
        match s.error() {
            Some(e) => acc.push(e),
            None => acc.warmup += 1,
        }
    }
    acc
}

pub fn compute_metrics(trace: &Trace, label: &str) -> Result<MetricsReport> {
    let ntl = trace
        .label_index(label)
        .ok_or_else(|| Error::EmptyTrace(label.to_string()))?;
    let acc = accumulate(trace, ntl);
    let totals = trace.totals.get(ntl).copied().unwrap_or_default();
    MetricsReport::from_accumulator(label, &acc, totals.fgl_count, totals.fgl_unavailable)
}

/// Relative extra fine-grained requests of `a` over the baseline `b`.
pub fn fgl_overhead(a: &MetricsReport, b: &MetricsReport) -> Result<f64> {
    if b.fgl_count == 0 {
        return Err(Error::UndefinedOverhead);
    }
    Ok((a.fgl_count as f64 - b.fgl_count as f64) / b.fgl_count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryComparison {
    pub simulated: f64,
    pub theory: f64,
    pub relative_delta: f64,
}

pub fn compare_theory(sim_mae: f64, cell_side: f64, range: f64) -> Result<TheoryComparison> {
    let theory = theoretical_mae(cell_side, range)?.mae_m;
    Ok(TheoryComparison {
        simulated: sim_mae,
        theory,
        relative_delta: (sim_mae - theory) / theory,
    })
}
