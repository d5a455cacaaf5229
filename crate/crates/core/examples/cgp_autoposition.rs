//! One epoch of collaborative grid positioning next to the closed-form
//! baseline, on the default 13-node layout.
//!
//! cargo run --release --example cgp_autoposition -- [scenario1|scenario2|scenario3] [epoch]

use std::path::Path;

use autopos::cgp::cgp_autoposition;
use autopos::closed_form::cf_autoposition;
use autopos::config::RunConfig;
use autopos::eval::gauge_frame;
use autopos::simulator::simulate_epoch;

fn main() -> autopos::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("scenario2", String::as_str);
    let epoch = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"));
    let cfg = RunConfig::load(&path)?;
    let scenario = cfg.scenario()?;
    let truth = gauge_frame(scenario.constellation.positions());

    let matrix = simulate_epoch(&scenario, epoch);
    let cf = cf_autoposition(&matrix);
    let cgp = cgp_autoposition(&matrix, &cfg.cgp_config()?)?;

    println!("{name}, epoch {epoch}, {} cells of {} m", cfg.grid_domain()?.len(), cfg.grid.cell);
    println!("{:<5} {:>16} {:>10} {:>16} {:>10} {:>10}", "node", "truth", "CF err", "CGP", "CGP err", "sqrt(tr)");
    for (i, t) in truth.iter().enumerate() {
        let cf_err = cf.estimates[i].usable_position().map_or("failed".to_owned(), |p| format!("{:.2}", p.distance_to(t)));
        let g = &cgp[i];
        let (pos, err) = match g.usable_position() {
            Some(p) => (format!("({:.2}, {:.2})", p.x, p.y), format!("{:.2}", p.distance_to(t))),
            None => ("-".to_owned(), "invalid".to_owned()),
        };
        println!(
            "{:<5} {:>16} {cf_err:>10} {pos:>16} {err:>10} {:>10.2}",
            g.node.to_string(),
            format!("({:.2}, {:.2})", t.x, t.y),
            g.covariance.trace().sqrt()
        );
    }
    Ok(())
}
