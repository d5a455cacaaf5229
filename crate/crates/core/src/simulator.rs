//! Semi-empirical ranging simulator.
//!
//! Every directed pair of nodes produces one ranging attempt per epoch. An
//! attempt first survives an availability draw whose failure probability
//! grows linearly with distance (`d / d_max`), then picks an error type:
//!
//! * multipath (NLOS): lognormal positive bias, only when it stays below `d`,
//! * outlier: uniform in `[-d, d_max - d]`,
//! * LOS: zero-mean Gaussian hardware noise.
//!
//! The multipath test is evaluated first; a rejected lognormal draw falls
//! through to the outlier and LOS tests without redrawing.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Constellation, ErrorClass, MeasurementMatrix, RangeSample};

/// Knobs of the ranging error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangingModelParams {
    /// Standard deviation of LOS hardware noise, meters.
    pub sigma_r: f64,
    /// Empirical maximum range, meters.
    pub d_max: f64,
    /// Outlier probability.
    pub p_out: f64,
    /// Enables the multipath branch.
    pub nlos: bool,
    /// Log-space mean of the multipath error.
    pub mp_mean: f64,
    /// Log-space standard deviation of the multipath error.
    pub mp_sigma: f64,
    pub seed: u64,
}

impl RangingModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| Err(Error::InvalidParameter { field, reason: reason.to_owned() });
        if !(self.sigma_r > 0.0 && self.sigma_r.is_finite()) {
            return bad("sigma_r", "must be positive");
        }
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return bad("d_max", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.p_out) {
            return bad("p_out", "must lie in [0, 1]");
        }
        if !(self.mp_sigma > 0.0 && self.mp_sigma.is_finite()) {
            return bad("mp_sigma", "must be positive");
        }
        if !self.mp_mean.is_finite() {
            return bad("mp_mean", "must be finite");
        }
        Ok(())
    }

    /// Multipath decision threshold on `p_eps` at distance `d`.
    pub fn multipath_threshold(&self, d: f64) -> f64 {
        0.8 - 0.3 * d / self.d_max
    }
}

/// Simulation inputs for one scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub constellation: Constellation,
    pub params: RangingModelParams,
    pub epochs: usize,
    pub label: String,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.epochs == 0 {
            return Err(Error::InvalidParameter { field: "epochs", reason: "must be at least 1".into() });
        }
        Ok(())
    }
}

/// Draws one ranging attempt for a pair at `true_distance`.
pub fn draw_measurement<R: Rng + ?Sized>(true_distance: f64, params: &RangingModelParams, rng: &mut R) -> RangeSample {
    let p_avail: f64 = rng.random();
    if p_avail <= true_distance / params.d_max {
        return RangeSample::FAILED;
    }
    let p_eps: f64 = rng.random();
    classify_error(true_distance, params, p_eps, rng)
}

/// Second stage of a draw: error classification for a given `p_eps`.
///
/// Split out so the decision thresholds can be exercised with a fixed `p_eps`.
pub fn classify_error<R: Rng + ?Sized>(d: f64, params: &RangingModelParams, p_eps: f64, rng: &mut R) -> RangeSample {
    if params.nlos && p_eps > params.multipath_threshold(d) {
        let eps_mp = LogNormal::new(params.mp_mean, params.mp_sigma)
            .expect("validated lognormal parameters")
            .sample(rng);
        if eps_mp < d {
            return RangeSample::observed(d + eps_mp, ErrorClass::Nlos);
        }
    }
    if p_eps < params.p_out {
        let u: f64 = rng.random();
        let eps_out = -d + u * params.d_max;
        return RangeSample::observed(d + eps_out, ErrorClass::Outlier);
    }
    let eps_hw = Normal::new(0.0, params.sigma_r).expect("validated sigma_r").sample(rng);
    RangeSample::observed(d + eps_hw, ErrorClass::Los)
}

/// Random stream of one epoch, derived from `(seed, epoch)` only.
pub fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64);
    rng
}

/// One attempt per ordered pair `i != j`, in row-major order.
pub fn simulate_epoch(config: &ScenarioConfig, epoch: usize) -> MeasurementMatrix {
    debug_assert!(epoch < config.epochs);
    let constellation = &config.constellation;
    let n = constellation.len();
    let mut rng = epoch_rng(config.params.seed, epoch);
    let mut matrix = MeasurementMatrix::new(epoch, n);
    for from in constellation.node_ids() {
        for to in constellation.node_ids() {
            if from == to {
                continue;
            }
            let sample = draw_measurement(constellation.distance(from, to), &config.params, &mut rng);
            matrix.set(from, to, sample).expect("off-diagonal entry");
        }
    }
    matrix
}

/// All epochs of a scenario, generated in parallel and returned in epoch order.
pub fn simulate(config: &ScenarioConfig) -> Vec<MeasurementMatrix> {
    use rayon::prelude::*;
    (0..config.epochs).into_par_iter().map(|t| simulate_epoch(config, t)).collect()
}

/// Empirical error-class fractions over all attempted measurements.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SimulationSummary {
    pub los: f64,
    pub nlos: f64,
    pub outlier: f64,
    pub failed: f64,
    pub attempts: usize,
}

pub fn summarize(matrices: &[MeasurementMatrix]) -> Result<SimulationSummary> {
    let mut counts = [0usize; 4];
    for m in matrices {
        for meas in m.measurements() {
            let k = match meas.class {
                ErrorClass::Los => 0,
                ErrorClass::Nlos => 1,
                ErrorClass::Outlier => 2,
                ErrorClass::Failed => 3,
            };
            counts[k] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let frac = |c: usize| c as f64 / total as f64;
    Ok(SimulationSummary {
        los: frac(counts[0]),
        nlos: frac(counts[1]),
        outlier: frac(counts[2]),
        failed: frac(counts[3]),
        attempts: total,
    })
}

/// Writes one CSV row per measurement:
/// `epoch,from,to,true_distance,range,error_class` (range empty when failed).
pub fn write_measurements_csv(path: &Path, constellation: &Constellation, matrices: &[MeasurementMatrix]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["epoch", "from", "to", "true_distance", "range", "error_class"])
        .map_err(|e| Error::csv(path, e))?;
    for m in matrices {
        for meas in m.measurements() {
            let range = meas.range.map(|r| format!("{r:.6}")).unwrap_or_default();
            w.write_record([
                m.epoch().to_string(),
                meas.from.0.to_string(),
                meas.to.0.to_string(),
                format!("{:.6}", constellation.distance(meas.from, meas.to)),
                range,
                meas.class.to_string(),
            ])
            .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
