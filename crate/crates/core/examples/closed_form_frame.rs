//! Closed-form auto-positioning: builds the local frame from three ranges and
//! places the remaining nodes by least squares, first without noise, then on
//! one simulated epoch.
//!
//! cargo run --example closed_form_frame

use autopos::closed_form::{cf_autoposition, place_frame_anchors};
use autopos::config::RunConfig;
use autopos::eval::gauge_frame;
use autopos::network::{ErrorClass, MeasurementMatrix, NodeId, NodePosition, RangeSample};
use autopos::simulator::simulate_epoch;

fn main() -> autopos::Result<()> {
    let frame = place_frame_anchors(4.0, 13f64.sqrt(), 13f64.sqrt()).expect("valid triangle");
    println!("frame from d01=4, d02=d12=sqrt(13): {frame:?}");

    let truth = [(0.0, 0.0), (4.0, 0.0), (2.0, 3.0), (1.0, 1.0)].map(|(x, y)| NodePosition::new(x, y));
    let mut m = MeasurementMatrix::new(0, truth.len());
    for i in 0..truth.len() {
        for j in (0..truth.len()).filter(|j| *j != i) {
            m.set(NodeId(i), NodeId(j), RangeSample::observed(truth[i].distance_to(&truth[j]), ErrorClass::Los))?;
        }
    }
    let r = cf_autoposition(&m);
    println!("\nnoise-free 4-node fixture, success = {}", r.success());
    for e in &r.estimates {
        println!("  {}  ({:.6}, {:.6})", e.node, e.position.x, e.position.y);
    }

    let cfg = RunConfig::from_toml_str(include_str!("../scenarios/scenario2.toml"))?;
    let scenario = cfg.scenario()?;
    let aligned = gauge_frame(scenario.constellation.positions());
    let epoch = simulate_epoch(&scenario, 0);
    let r = cf_autoposition(&epoch);
    println!("\nscenario2 epoch 0, success = {}", r.success());
    for (e, t) in r.estimates.iter().zip(&aligned) {
        match r.failures[e.node.0] {
            None => println!("  {:<4} error {:6.2} m", e.node.to_string(), e.position.distance_to(t)),
            Some(reason) => println!("  {:<4} {reason}", e.node.to_string()),
        }
    }
    Ok(())
}
