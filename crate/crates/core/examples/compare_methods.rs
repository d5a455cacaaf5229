//! Runs the bundled scenarios in memory and prints a comparison table.
//!
//! cargo run --release --example compare_methods -- [epochs] [cell] [--independent]

use std::path::Path;

use autopos::config::{Overrides, RunConfig};
use autopos::runner::{evaluate_scenario, format_summary};

fn main() -> autopos::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let epochs = args.first().and_then(|a| a.parse().ok()).unwrap_or(200);
    let cell = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(0.25);
    let independent = args.iter().any(|a| a == "--independent");

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let overrides = Overrides { epochs: Some(epochs), cell: Some(cell), carry_beliefs: independent.then_some(false), ..Default::default() };
    let mut outcomes = Vec::new();
    for name in ["scenario1.toml", "scenario2.toml", "scenario3.toml"] {
        let mut cfg = RunConfig::load(&dir.join(name))?;
        cfg.apply(&overrides);
        outcomes.push(evaluate_scenario(&cfg)?);
    }
    let refs: Vec<_> = outcomes.iter().collect();
    print!("{}", format_summary(&refs));
    for o in &outcomes {
        println!("{}: simulate {:.0} ms, CF {:.0} ms, CGP {:.0} ms, CGP resets {}", o.config.label, o.timings.simulate_ms, o.timings.closed_form_ms, o.timings.cgp_ms, o.cgp_resets);
    }
    Ok(())
}
