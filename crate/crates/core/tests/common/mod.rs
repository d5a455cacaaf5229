#![allow(dead_code)]

use std::path::{Path, PathBuf};

use autopos::config::{Overrides, RunConfig};
use autopos::network::{ErrorClass, MeasurementMatrix, NodeId, NodePosition, RangeSample};
use autopos::simulator::RangingModelParams;
use statrs::distribution::{ContinuousCDF, Normal};

pub fn p(x: f64, y: f64) -> NodePosition {
    NodePosition::new(x, y)
}

/// (0,0), (4,0), (2,3), (1,1): already in the estimator gauge.
pub fn four_node_fixture() -> Vec<NodePosition> {
    vec![p(0.0, 0.0), p(4.0, 0.0), p(2.0, 3.0), p(1.0, 1.0)]
}

pub fn exact_matrix(points: &[NodePosition]) -> MeasurementMatrix {
    let mut m = MeasurementMatrix::new(0, points.len());
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i != j {
                let r = points[i].distance_to(&points[j]);
                m.set(NodeId(i), NodeId(j), RangeSample::observed(r, ErrorClass::Los)).unwrap();
            }
        }
    }
    m
}

pub fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

pub fn bundled(n: usize) -> RunConfig {
    RunConfig::load(&scenario_dir().join(format!("scenario{n}.toml"))).unwrap()
}

pub fn bundled_with(n: usize, epochs: usize, cell: f64) -> RunConfig {
    let mut cfg = bundled(n);
    cfg.apply(&Overrides { epochs: Some(epochs), cell: Some(cell), ..Default::default() });
    cfg
}

pub fn scenario_params(n: usize) -> RangingModelParams {
    bundled(n).ranging_params()
}

/// Probabilities of `[LOS, NLOS, OUTLIER, FAILED]` for one attempt at
/// distance `d`, written out from the two-stage draw.
pub fn class_probabilities(d: f64, params: &RangingModelParams) -> [f64; 4] {
    let fail = (d / params.d_max).min(1.0);
    let avail = 1.0 - fail;
    let thr = 0.8 - 0.3 * d / params.d_max;
    let mp_upper = (1.0 - thr).clamp(0.0, 1.0);
    let q = if params.nlos {
        Normal::new(0.0, 1.0).unwrap().cdf((d.ln() - params.mp_mean) / params.mp_sigma)
    } else {
        0.0
    };
    let nlos = if params.nlos { mp_upper * q } else { 0.0 };
    // p_eps below the threshold, or above it with a rejected lognormal draw.
    let out_low = params.p_out.min(thr.max(0.0));
    let out_high = (params.p_out - thr).max(0.0).min(mp_upper);
    let out_high = if params.nlos { (1.0 - q) * out_high } else { out_high };
    let outlier = out_low + out_high;
    let los = 1.0 - nlos - outlier;
    [avail * los, avail * nlos, avail * outlier, fail]
}

/// Posterior computed cell by cell straight from the definition.
pub fn update_oracle(centers: &[NodePosition], prior: &[f64], obs: &[(NodePosition, f64, f64)]) -> Vec<f64> {
    let mut post: Vec<f64> = centers
        .iter()
        .zip(prior)
        .map(|(c, w)| {
            let mut l = *w;
            for (origin, r, sigma) in obs {
                let dist = ((c.x - origin.x).powi(2) + (c.y - origin.y).powi(2)).sqrt();
                l *= (-(dist - r).powi(2) / (2.0 * sigma * sigma)).exp();
            }
            l
        })
        .collect();
    let total: f64 = post.iter().sum();
    post.iter_mut().for_each(|v| *v /= total);
    post
}

/// Smallest sample `x` with at least `pct` percent of the data `<= x`.
pub fn nearest_rank_oracle(data: &[f64], pct: f64) -> Option<f64> {
    let need = pct / 100.0 * data.len() as f64;
    data.iter()
        .copied()
        .filter(|x| data.iter().filter(|y| *y <= x).count() as f64 >= need)
        .min_by(f64::total_cmp)
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
