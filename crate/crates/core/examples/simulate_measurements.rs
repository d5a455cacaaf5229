//! Draws ranging epochs for the bundled scenarios and prints the error-class
//! mix, plus a few raw measurements.
//!
//! cargo run --example simulate_measurements -- [epochs] [out.csv]

use std::path::{Path, PathBuf};

use autopos::config::RunConfig;
use autopos::simulator::{simulate, summarize, write_measurements_csv};

fn main() -> autopos::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().and_then(|a| a.parse().ok()).unwrap_or(200);
    let csv_path = args.get(1).map(PathBuf::from);
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");

    println!("{:<10} {:>8} {:>8} {:>8} {:>8} {:>9}", "scenario", "LOS", "NLOS", "outlier", "failed", "attempts");
    for name in ["scenario1", "scenario2", "scenario3"] {
        let mut cfg = RunConfig::load(&dir.join(format!("{name}.toml")))?;
        cfg.epochs = epochs;
        let scenario = cfg.scenario()?;
        let matrices = simulate(&scenario);
        let s = summarize(&matrices)?;
        println!("{name:<10} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>9}", s.los, s.nlos, s.outlier, s.failed, s.attempts);

        if name == "scenario3" {
            println!("\nfirst epoch of {name}:");
            for m in matrices[0].measurements().take(8) {
                let d = scenario.constellation.distance(m.from, m.to);
                let r = m.range.map_or("-".to_owned(), |r| format!("{r:.2}"));
                println!("  {} -> {}  true {d:6.2} m  measured {r:>6}  {}", m.from, m.to, m.class);
            }
            if let Some(path) = &csv_path {
                write_measurements_csv(path, &scenario.constellation, &matrices)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
