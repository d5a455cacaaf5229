//! The histogram filter on its own: a uniform belief narrowed by range
//! observations from three known nodes, printed as a coarse ASCII map after
//! each step.
//!
//! cargo run --example grid_filter

use autopos::cgp::{estimate, init_uniform, predict, update, BeliefGrid, GridDomain, GridObservation};
use autopos::network::{CovarianceMatrix2, NodeEstimate, NodeId, NodePosition};

fn draw(belief: &BeliefGrid) {
    let d = belief.domain();
    let peak = belief.mass().iter().cloned().fold(0.0, f64::max);
    let shades = [' ', '.', ':', 'o', 'O', '#'];
    for row in (0..d.ny()).rev().step_by(2) {
        let line: String = (0..d.nx())
            .map(|col| {
                let level = belief.mass()[row * d.nx() + col] / peak;
                shades[((level * (shades.len() - 1) as f64).round() as usize).min(shades.len() - 1)]
            })
            .collect();
        println!("  |{line}|");
    }
}

fn main() -> autopos::Result<()> {
    let domain = GridDomain::new(-1.0, 5.0, -1.0, 4.0, 0.1)?;
    let target = NodePosition::new(1.0, 1.0);
    let anchors = [(0.0, 0.0), (4.0, 0.0), (2.0, 3.0)].map(|(x, y)| NodePosition::new(x, y));

    let mut belief = init_uniform(&domain);
    for (k, a) in anchors.iter().enumerate() {
        let obs = GridObservation {
            origin: NodeEstimate::valid(NodeId(k), *a, CovarianceMatrix2::ZERO),
            range: a.distance_to(&target) + 0.05,
            sigma: 0.3,
        };
        belief = update(&belief, &obs)?;
        let e = estimate(&belief, NodeId(3));
        println!("after range from {} : estimate ({:.2}, {:.2}), trace {:.3} m^2", e.node, e.position.x, e.position.y, e.covariance.trace());
        println!("  (origin {})", NodeId(k));
        draw(&belief);
    }

    let diffused = predict(&belief, 0.3);
    let e = estimate(&diffused, NodeId(3));
    println!("after 0.3 m diffusion: trace {:.3} m^2", e.covariance.trace());
    Ok(())
}
