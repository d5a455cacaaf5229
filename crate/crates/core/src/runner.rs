//! Batch runner: simulate, estimate with both methods, evaluate, write outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

use crate::cgp::{BeliefGrid, CgpEstimator};
use crate::closed_form::cf_autoposition;
use crate::config::{Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{
    compute_report, error_samples, write_ecdf_csv, write_errors_csv, write_report_csv, ErrorSample, EvalReport,
    Method, MethodReport,
};
use crate::network::{MeasurementMatrix, NodeEstimate, NodeId};
use crate::simulator::{simulate, summarize, write_measurements_csv, SimulationSummary};

/// Everything produced by one scenario run, before anything is written.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub config: RunConfig,
    pub summary: SimulationSummary,
    pub samples: Vec<ErrorSample>,
    pub report: EvalReport,
    pub cgp_resets: usize,
    pub timings: Timings,
    /// Final-epoch beliefs per node, kept only when belief dumps are requested.
    pub final_beliefs: Vec<(NodeId, BeliefGrid)>,
    pub measurements: Option<Vec<MeasurementMatrix>>,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub simulate_ms: f64,
    pub closed_form_ms: f64,
    pub cgp_ms: f64,
    pub total_ms: f64,
}

/// Record of how a run was produced; re-running its `config` reproduces the
/// outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_path: Option<PathBuf>,
    pub scenario_label: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub overrides: Overrides,
    pub config: RunConfig,
    pub simulation: SimulationSummary,
    pub cgp_resets: usize,
    pub timings: Timings,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Per-epoch estimates, number of belief resets, and the final beliefs if kept.
type CgpRun = (Vec<Vec<NodeEstimate>>, usize, Vec<(NodeId, BeliefGrid)>);

/// Runs CGP over all epochs. Independent epochs run in parallel; carried
/// beliefs force sequential order. Results are always in epoch order.
fn run_cgp(config: &RunConfig, matrices: &[MeasurementMatrix], keep_beliefs: bool) -> Result<CgpRun> {
    let cgp = config.cgp_config()?;
    let n = matrices.first().map_or(0, |m| m.node_count());
    let collect_beliefs = |est: &CgpEstimator| -> Vec<(NodeId, BeliefGrid)> {
        (0..n).filter_map(|i| est.belief(NodeId(i)).map(|b| (NodeId(i), b.clone()))).collect()
    };
    if cgp.carry_beliefs {
        let mut est = CgpEstimator::new(cgp, n)?;
        let mut out = Vec::with_capacity(matrices.len());
        let mut resets = 0;
        for m in matrices {
            let epoch = est.process(m);
            resets += epoch.resets.len();
            out.push(epoch.estimates);
        }
        let beliefs = if keep_beliefs { collect_beliefs(&est) } else { Vec::new() };
        return Ok((out, resets, beliefs));
    }
    let results: Vec<_> = matrices
        .par_iter()
        .map(|m| -> Result<_> {
            let mut est = CgpEstimator::new(cgp.clone(), n)?;
            let epoch = est.process(m);
            Ok((epoch, est))
        })
        .collect::<Result<_>>()?;
    let resets = results.iter().map(|(e, _)| e.resets.len()).sum();
    let beliefs = match results.last() {
        Some((_, est)) if keep_beliefs => collect_beliefs(est),
        _ => Vec::new(),
    };
    Ok((results.into_iter().map(|(e, _)| e.estimates).collect(), resets, beliefs))
}

/// Simulates and evaluates one scenario in memory.
pub fn evaluate_scenario(config: &RunConfig) -> Result<ScenarioOutcome> {
    config.validate()?;
    let start = Instant::now();
    let scenario = config.scenario()?;
    let truth = scenario.constellation.positions().to_vec();

    let t = Instant::now();
    let matrices = simulate(&scenario);
    let summary = summarize(&matrices)?;
    let simulate_ms = ms(t);

    let t = Instant::now();
    let cf: Vec<_> = matrices.par_iter().map(cf_autoposition).collect();
    let closed_form_ms = ms(t);

    let t = Instant::now();
    let (cgp, cgp_resets, final_beliefs) = run_cgp(config, &matrices, config.output.dump_beliefs)?;
    let cgp_ms = ms(t);

    let mut samples = Vec::with_capacity(2 * truth.len() * matrices.len());
    for (epoch, r) in cf.iter().enumerate() {
        samples.extend(error_samples(epoch, Method::Cf, &r.estimates, &truth));
    }
    for (epoch, est) in cgp.iter().enumerate() {
        samples.extend(error_samples(epoch, Method::Cgp, est, &truth));
    }
    let report = compute_report(&samples)?;
    let timings = Timings { simulate_ms, closed_form_ms, cgp_ms, total_ms: ms(start) };
    Ok(ScenarioOutcome {
        config: config.clone(),
        summary,
        samples,
        report,
        cgp_resets,
        timings,
        final_beliefs,
        measurements: config.output.dump_measurements.then_some(matrices),
    })
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_beliefs(dir: &Path, beliefs: &[(NodeId, BeliefGrid)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (node, belief) in beliefs {
        let path = dir.join(format!("belief_node{}.csv", node.0));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["x", "y", "mass"]).map_err(|e| Error::csv(&path, e))?;
        for (c, p) in belief.domain().centers().zip(belief.mass()) {
            w.write_record([format!("{:.4}", c.x), format!("{:.4}", c.y), format!("{p:.6e}")])
                .map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Writes `report.csv`, per-method ECDFs, `errors.csv`, optional dumps and
/// finally `manifest.json`.
pub fn write_outputs(outcome: &ScenarioOutcome, config_path: Option<&Path>, overrides: &Overrides) -> Result<RunManifest> {
    let cfg = &outcome.config;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    write_report_csv(&dir.join("report.csv"), outcome.report.methods.iter().map(|r| (cfg.label.as_str(), r)))?;
    for r in &outcome.report.methods {
        write_ecdf_csv(&dir.join(format!("ecdf_{}_{}.csv", r.method, cfg.label)), r)?;
    }
    write_errors_csv(&dir.join("errors.csv"), &outcome.samples)?;
    if let Some(m) = &outcome.measurements {
        write_measurements_csv(&dir.join("measurements.csv"), &cfg.constellation()?, m)?;
    }
    if cfg.output.dump_beliefs {
        write_beliefs(&dir.join("beliefs"), &outcome.final_beliefs)?;
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config_path: config_path.map(Path::to_path_buf),
        scenario_label: cfg.label.clone(),
        seed: cfg.seed,
        output_dir: dir.clone(),
        overrides: overrides.clone(),
        config: cfg.clone(),
        simulation: outcome.summary,
        cgp_resets: outcome.cgp_resets,
        timings: outcome.timings,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join("manifest.json"), &json)?;
    Ok(manifest)
}

/// Loads a config file, applies overrides, runs and writes everything.
pub fn run_scenario(config_path: &Path, overrides: &Overrides) -> Result<ScenarioOutcome> {
    let mut config = RunConfig::load(config_path)?;
    config.apply(overrides);
    config.validate()?;
    info!("running {} ({} epochs, cell {} m)", config.label, config.epochs, config.grid.cell);
    let outcome = evaluate_scenario(&config)?;
    write_outputs(&outcome, Some(config_path), overrides)?;
    Ok(outcome)
}

fn fmt_m(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), |x| format!("{x:.2}"))
}

/// Table-style text block: simulated error classes and per-method metrics.
pub fn format_summary(outcomes: &[&ScenarioOutcome]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<22}", "");
    for o in outcomes {
        let _ = write!(s, "{:>12}", o.config.label);
    }
    s.push('\n');
    let mut row = |name: &str, f: &dyn Fn(&ScenarioOutcome) -> String| {
        let _ = write!(s, "{name:<22}");
        for o in outcomes {
            let _ = write!(s, "{:>12}", f(o));
        }
        s.push('\n');
    };
    row("d_max (m)", &|o| format!("{}", o.config.ranging.d_max));
    row("p_out", &|o| format!("{}", o.config.ranging.p_out));
    row("LOS", &|o| format!("{:.2}", o.summary.los));
    row("NLOS", &|o| format!("{:.2}", o.summary.nlos));
    row("Outlier", &|o| format!("{:.2}", o.summary.outlier));
    row("Failures", &|o| format!("{:.2}", o.summary.failed));
    for method in Method::ALL {
        let get = move |o: &ScenarioOutcome| o.report.method(method).cloned();
        let pick = |f: fn(&MethodReport) -> String| move |o: &ScenarioOutcome| get(o).map_or("NA".into(), |r| f(&r));
        row(&format!("{method} RMSE (m)"), &pick(|r| fmt_m(r.rmse)));
        row(&format!("{method} 1-sigma (m)"), &pick(|r| fmt_m(r.q1)));
        row(&format!("{method} 2-sigma (m)"), &pick(|r| fmt_m(r.q2)));
        row(&format!("{method} 3-sigma (m)"), &pick(|r| fmt_m(r.q3)));
        row(&format!("{method} success"), &pick(|r| format!("{:.2}", r.success_rate)));
        row(&format!("{method} epoch success"), &pick(|r| format!("{:.2}", r.epoch_success_rate)));
    }
    s
}

/// Result of running every config in a directory.
#[derive(Debug)]
pub struct BatchOutcome {
    pub outcomes: Vec<ScenarioOutcome>,
    pub failures: Vec<(PathBuf, Error)>,
    pub combined_dir: PathBuf,
}

/// Config files (`*.toml`) of a directory in name order.
pub fn scenario_files(config_dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(config_dir).map_err(|e| Error::io(config_dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every scenario in `config_dir`, continuing past failures, and writes a
/// combined `report.csv` and `ecdf_all.csv` to the override output directory
/// (or `out/`). Per-scenario outputs go to `<out-dir>/<label>` when an output
/// override is given.
pub fn run_all(config_dir: &Path, overrides: &Overrides) -> Result<BatchOutcome> {
    let files = scenario_files(config_dir)?;
    if files.is_empty() {
        return Err(Error::config("config_dir", format!("no *.toml scenario files in {}", config_dir.display())));
    }
    let combined_dir = overrides.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for path in files {
        let result = RunConfig::load(&path).and_then(|mut cfg| {
            cfg.apply(overrides);
            if overrides.out_dir.is_some() {
                cfg.output.dir = combined_dir.join(&cfg.label);
            }
            cfg.validate()?;
            info!("running {} ({} epochs, cell {} m)", cfg.label, cfg.epochs, cfg.grid.cell);
            let outcome = evaluate_scenario(&cfg)?;
            write_outputs(&outcome, Some(&path), overrides)?;
            Ok(outcome)
        });
        match result {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                error!("{}: {e}", path.display());
                failures.push((path, e));
            }
        }
    }
    std::fs::create_dir_all(&combined_dir).map_err(|e| Error::io(&combined_dir, e))?;
    let rows: Vec<_> = outcomes
        .iter()
        .flat_map(|o| o.report.methods.iter().map(move |r| (o.config.label.as_str(), r)))
        .collect();
    write_report_csv(&combined_dir.join("report.csv"), rows)?;
    let path = combined_dir.join("ecdf_all.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    w.write_record(["method", "scenario", "error_m", "cum_fraction"]).map_err(|e| Error::csv(&path, e))?;
    for o in &outcomes {
        for r in &o.report.methods {
            for (err, frac) in &r.ecdf {
                w.write_record([r.method.to_string(), o.config.label.clone(), format!("{err:.6}"), format!("{frac:.6}")])
                    .map_err(|e| Error::csv(&path, e))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(BatchOutcome { outcomes, failures, combined_dir })
}
