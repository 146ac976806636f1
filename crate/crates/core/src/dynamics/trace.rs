use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default trailing window (in recorded steps) for steady-state detection.
pub const DEFAULT_WINDOW: usize = 50;
/// Default maximum spread of every series over the window.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub values: Vec<f64>,
}

/// Named time series, one row per recorded step.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    labels: Vec<String>,
    rows: Vec<TraceRow>,
}

impl TraceRecord {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        for label in &labels {
            if label.is_empty() || label.contains([',', '\n', '\r', '"']) {
                return Err(Error::InvalidParameter(format!("invalid trace label {label:?}")));
            }
        }
        Ok(TraceRecord {
            labels,
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, step: usize, time: f64, values: Vec<f64>) -> Result<()> {
        if values.len() != self.labels.len() {
            return Err(Error::Dimension(format!(
                "trace row has {} values for {} labels",
                values.len(),
                self.labels.len()
            )));
        }
        if let Some(last) = self.rows.last() {
            if step <= last.step {
                return Err(Error::InvalidParameter(format!(
                    "trace step {step} does not follow step {}",
                    last.step
                )));
            }
        }
        self.rows.push(TraceRow { step, time, values });
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn series(&self, label: &str) -> Option<Vec<f64>> {
        let k = self.column_index(label)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SteadyReport {
    pub converged: bool,
    pub steady_step: Option<usize>,
    /// Window means: at the detected steady step, or over the final window when
    /// the run never settled.
    pub steady_values: BTreeMap<String, f64>,
    pub window: usize,
    pub tol: f64,
}

impl SteadyReport {
    pub fn value(&self, label: &str) -> Option<f64> {
        self.steady_values.get(label).copied()
    }
}

fn window_means(trace: &TraceRecord, end: usize, window: usize) -> BTreeMap<String, f64> {
    let rows = &trace.rows[end + 1 - window..=end];
    trace
        .labels
        .iter()
        .enumerate()
        .map(|(k, label)| {
            let mean = rows.iter().map(|r| r.values[k]).sum::<f64>() / window as f64;
            (label.clone(), mean)
        })
        .collect()
}

/// Finds the earliest row whose trailing `window` rows vary by at most `tol` in every series.
pub fn detect_steady_state(trace: &TraceRecord, window: usize, tol: f64) -> Result<SteadyReport> {
    if window < 2 {
        return Err(Error::InvalidParameter(format!("steady window must be >= 2, got {window}")));
    }
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("steady tolerance must be >= 0, got {tol}")));
    }
    if trace.len() < window {
        return Err(Error::InvalidParameter(format!(
            "trace has {} rows, shorter than the steady window {window}",
            trace.len()
        )));
    }
    let n_cols = trace.labels.len();
    let settled = |end: usize| -> bool {
        let rows = &trace.rows[end + 1 - window..=end];
        (0..n_cols).all(|k| {
            let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.values[k]), hi.max(r.values[k]))
            });
            hi - lo <= tol
        })
    };
    let found = (window - 1..trace.len()).find(|&end| settled(end));
    let end = found.unwrap_or(trace.len() - 1);
    Ok(SteadyReport {
        converged: found.is_some(),
        steady_step: found.map(|e| trace.rows[e].step),
        steady_values: window_means(trace, end, window),
        window,
        tol,
    })
}
