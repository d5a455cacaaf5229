//! Keeps each node's belief from one epoch to the next and shows the error
//! and the belief spread settling over time.
//!
//! cargo run --release --example carry_beliefs -- [scenario] [epochs]

use std::path::Path;

use autopos::cgp::CgpEstimator;
use autopos::config::RunConfig;
use autopos::eval::{error_samples, Method};
use autopos::simulator::simulate_epoch;

fn main() -> autopos::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("scenario1", String::as_str);
    let epochs: usize = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(40);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    let mut cfg = RunConfig::load(&path)?;
    cfg.epochs = epochs;
    cfg.grid.carry_beliefs = true;
    let scenario = cfg.scenario()?;
    let truth = scenario.constellation.positions();

    let mut estimator = CgpEstimator::new(cfg.cgp_config()?, truth.len())?;
    println!("{:>5} {:>12} {:>12} {:>14}", "epoch", "mean err m", "max err m", "mean sqrt(tr)");
    for t in 0..epochs {
        let out = estimator.process(&simulate_epoch(&scenario, t));
        let samples = error_samples(t, Method::Cgp, &out.estimates, truth);
        let errs: Vec<f64> = samples.iter().filter(|s| s.success).map(|s| s.position_error).collect();
        let spread = out.estimates.iter().map(|e| e.covariance.trace().sqrt()).sum::<f64>() / out.estimates.len() as f64;
        if t < 5 || t % 5 == 4 {
            let mean = errs.iter().sum::<f64>() / errs.len().max(1) as f64;
            let max = errs.iter().cloned().fold(0.0, f64::max);
            println!("{t:>5} {mean:>12.2} {max:>12.2} {spread:>14.3}");
        }
    }
    Ok(())
}
