//! Accuracy evaluation: gauge alignment of the ground truth, RMSE, error
//! percentiles, ECDFs and success rates, plus their CSV outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NodeEstimate, NodeId, NodePosition};

/// Percentiles reported as the 1/2/3-sigma error quantiles.
pub const SIGMA_PERCENTILES: [f64; 3] = [68.27, 95.45, 99.73];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Cf,
    Cgp,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Cf, Method::Cgp];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cf => "CF",
            Method::Cgp => "CGP",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Position error of one node in one epoch for one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub epoch: usize,
    pub node: NodeId,
    pub method: Method,
    /// Meters; NaN when `success` is false.
    pub position_error: f64,
    pub success: bool,
}

/// Expresses `truth` in the estimator gauge: node 0 at the origin, node 1 on
/// the positive x-axis, node 2 (if present) with `y >= 0`.
pub fn gauge_frame(truth: &[NodePosition]) -> Vec<NodePosition> {
    let origin = truth[0];
    let (dx, dy) = (truth[1].x - origin.x, truth[1].y - origin.y);
    let len = dx.hypot(dy);
    let (c, s) = (dx / len, dy / len);
    let mut out: Vec<NodePosition> = truth
        .iter()
        .map(|p| {
            let (px, py) = (p.x - origin.x, p.y - origin.y);
            NodePosition::new(c * px + s * py, -s * px + c * py)
        })
        .collect();
    out[1].y = 0.0;
    if out.len() > 2 && out[2].y < 0.0 {
        out.iter_mut().for_each(|p| p.y = -p.y);
    }
    out[0] = NodePosition::ORIGIN;
    out
}

/// Ground truth aligned to the gauge of `estimates`, or `None` when the gauge
/// is undefined because node 0 or node 1 has no valid estimate.
pub fn align_frame(estimates: &[NodeEstimate], truth: &[NodePosition]) -> Option<Vec<NodePosition>> {
    if estimates.len() < 2 || truth.len() != estimates.len() || !estimates[0].valid || !estimates[1].valid {
        return None;
    }
    Some(gauge_frame(truth))
}

/// Per-node error samples of one epoch. Without a gauge, every node counts as
/// unsuccessful.
pub fn error_samples(epoch: usize, method: Method, estimates: &[NodeEstimate], truth: &[NodePosition]) -> Vec<ErrorSample> {
    let aligned = align_frame(estimates, truth);
    estimates
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let error = aligned.as_ref().and_then(|t| e.usable_position().map(|p| p.distance_to(&t[i])));
            ErrorSample {
                epoch,
                node: NodeId(i),
                method,
                position_error: error.unwrap_or(f64::NAN),
                success: error.is_some(),
            }
        })
        .collect()
}

/// Nearest-rank percentile of ascending `sorted` data, `pct` in (0, 100].
pub fn nearest_rank(sorted: &[f64], pct: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

/// Metrics of one method. Accuracy metrics are `None` without any success.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub rmse: Option<f64>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub q3: Option<f64>,
    /// Successful node estimates over attempted ones.
    pub success_rate: f64,
    /// Epochs in which every node succeeded, over all epochs.
    pub epoch_success_rate: f64,
    pub attempted: usize,
    /// `(error, cumulative fraction)` over successful samples.
    #[serde(skip)]
    pub ecdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

fn method_report(method: Method, samples: &[&ErrorSample]) -> MethodReport {
    let mut errors: Vec<f64> = samples.iter().filter(|s| s.success).map(|s| s.position_error).collect();
    errors.sort_by(f64::total_cmp);
    let n = errors.len();
    let rmse = (n > 0).then(|| (errors.iter().map(|e| e * e).sum::<f64>() / n as f64).sqrt());
    let [q1, q2, q3] = SIGMA_PERCENTILES.map(|p| nearest_rank(&errors, p));
    let ecdf = errors.iter().enumerate().map(|(i, e)| (*e, (i + 1) as f64 / n as f64)).collect();

    let mut epochs: BTreeMap<usize, bool> = BTreeMap::new();
    for s in samples {
        *epochs.entry(s.epoch).or_insert(true) &= s.success;
    }
    let good_epochs = epochs.values().filter(|ok| **ok).count();
    MethodReport {
        method,
        rmse,
        q1,
        q2,
        q3,
        success_rate: n as f64 / samples.len() as f64,
        epoch_success_rate: good_epochs as f64 / epochs.len() as f64,
        attempted: samples.len(),
        ecdf,
    }
}

/// Per-method report over all samples; methods without samples are omitted.
pub fn compute_report(samples: &[ErrorSample]) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let methods = Method::ALL
        .iter()
        .filter_map(|m| {
            let subset: Vec<&ErrorSample> = samples.iter().filter(|s| s.method == *m).collect();
            (!subset.is_empty()).then(|| method_report(*m, &subset))
        })
        .collect();
    Ok(EvalReport { methods })
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.6}"))
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

/// `method,scenario,rmse,q1,q2,q3,success_rate,epoch_success_rate`
pub fn write_report_csv<'a>(path: &Path, rows: impl IntoIterator<Item = (&'a str, &'a MethodReport)>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["method", "scenario", "rmse", "q1", "q2", "q3", "success_rate", "epoch_success_rate"])
        .map_err(|e| Error::csv(path, e))?;
    for (scenario, r) in rows {
        w.write_record([
            r.method.as_str().to_owned(),
            scenario.to_owned(),
            fmt_metric(r.rmse),
            fmt_metric(r.q1),
            fmt_metric(r.q2),
            fmt_metric(r.q3),
            format!("{:.6}", r.success_rate),
            format!("{:.6}", r.epoch_success_rate),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Two columns: `error_m,cum_fraction`.
pub fn write_ecdf_csv(path: &Path, report: &MethodReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["error_m", "cum_fraction"]).map_err(|e| Error::csv(path, e))?;
    for (e, f) in &report.ecdf {
        w.write_record([format!("{e:.6}"), format!("{f:.6}")]).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Raw samples: `epoch,node,method,position_error,success`.
pub fn write_errors_csv(path: &Path, samples: &[ErrorSample]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["epoch", "node", "method", "position_error", "success"])
        .map_err(|e| Error::csv(path, e))?;
    for s in samples {
        let err = if s.success { format!("{:.6}", s.position_error) } else { String::new() };
        w.write_record([s.epoch.to_string(), s.node.0.to_string(), s.method.to_string(), err, s.success.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
