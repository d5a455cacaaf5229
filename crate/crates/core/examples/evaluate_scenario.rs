//! Runs one scenario file end to end and writes the CSV reports, the same
//! path the `autopos run` command takes.
//!
//! cargo run --release --example evaluate_scenario -- [config.toml] [out-dir]

use std::path::{Path, PathBuf};

use autopos::config::Overrides;
use autopos::eval::Method;
use autopos::runner::{format_summary, run_scenario};

fn main() -> autopos::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = args
        .first()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/scenario1.toml"));
    let out_dir = args.get(1).map_or_else(|| std::env::temp_dir().join("autopos-example"), PathBuf::from);
    let overrides = Overrides { epochs: Some(100), out_dir: Some(out_dir.clone()), ..Default::default() };

    let outcome = run_scenario(&config, &overrides)?;
    print!("{}", format_summary(&[&outcome]));
    for m in Method::ALL {
        if let Some(r) = outcome.report.method(m) {
            let median = r.ecdf.iter().find(|(_, f)| *f >= 0.5).map_or(f64::NAN, |(e, _)| *e);
            println!("{m}: median error {median:.2} m over {} successful estimates", r.ecdf.len());
        }
    }
    println!("reports in {}", out_dir.display());
    Ok(())
}
