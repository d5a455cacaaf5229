//! Library results checked against independent reference computations.

mod common;

use autopos::cgp::{estimate, init_uniform, predict, update, update_all, BeliefGrid, GridDomain, GridObservation};
use autopos::closed_form::trilaterate;
use autopos::eval::nearest_rank;
use autopos::network::{Constellation, CovarianceMatrix2, ErrorClass, NodeEstimate, NodeId, NodePosition};
use autopos::simulator::{draw_measurement, epoch_rng, simulate, summarize, RangingModelParams, ScenarioConfig};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn origin(node: usize, at: NodePosition) -> NodeEstimate {
    NodeEstimate::valid(NodeId(node), at, CovarianceMatrix2::ZERO)
}

#[test]
fn class_fractions_match_per_pair_probabilities() {
    for scenario in [1, 2, 3] {
        let params = scenario_params(scenario);
        let constellation = Constellation::default_parking_lot();
        let n = constellation.len();
        let epochs = 700;
        assert!(epochs * n * (n - 1) >= 100_000);
        let config = ScenarioConfig { constellation: constellation.clone(), params, epochs, label: "oracle".into() };
        let summary = summarize(&simulate(&config)).unwrap();

        let mut expected = [0.0; 4];
        for a in constellation.node_ids() {
            for b in constellation.node_ids().filter(|b| *b != a) {
                let probs = class_probabilities(constellation.distance(a, b), &params);
                expected.iter_mut().zip(probs).for_each(|(e, q)| *e += q / (n * (n - 1)) as f64);
            }
        }
        let got = [summary.los, summary.nlos, summary.outlier, summary.failed];
        for (name, (g, e)) in ["LOS", "NLOS", "OUTLIER", "FAILED"].iter().zip(got.iter().zip(expected)) {
            assert!((g - e).abs() < 0.02, "scenario {scenario} {name}: simulated {g:.4}, expected {e:.4}");
        }
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_distance_fractions_and_failure_rate() {
    let params = scenario_params(3);
    let mut rng = epoch_rng(99, 0);
    for d in [5.0, 20.0, 40.0] {
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let s = draw_measurement(d, &params, &mut rng);
            if let Some(r) = s.range {
                assert!(r >= 0.0);
            }
            let k = match s.class {
                ErrorClass::Los => 0,
                ErrorClass::Nlos => 1,
                ErrorClass::Outlier => 2,
                ErrorClass::Failed => 3,
            };
            counts[k] += 1;
        }
        let expected = class_probabilities(d, &params);
        for k in 0..4 {
            let f = counts[k] as f64 / n as f64;
            assert!((f - expected[k]).abs() < 0.01, "d={d} class {k}: {f:.4} vs {:.4}", expected[k]);
        }
        assert!((counts[3] as f64 / n as f64 - d / params.d_max).abs() < 0.01);
    }
}

#[test]
fn gaussian_only_residuals_are_normal() {
    let params = RangingModelParams { p_out: 0.0, nlos: false, ..scenario_params(1) };
    let mut rng = epoch_rng(7, 3);
    let d = 20.0;
    let residuals: Vec<f64> = std::iter::repeat_with(|| draw_measurement(d, &params, &mut rng))
        .filter_map(|s| s.range)
        .take(100_000)
        .map(|r| r - d)
        .collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 3.0 * params.sigma_r / n.sqrt(), "mean {mean}");
    assert!((sd / params.sigma_r - 1.0).abs() < 0.05, "sd {sd}");
}

#[test]
fn update_matches_cell_by_cell_posterior() {
    let domain = GridDomain::new(-2.0, 8.0, -3.0, 7.0, 0.2).unwrap();
    assert_eq!((domain.nx(), domain.ny()), (50, 50));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let weights: Vec<f64> = (0..domain.len()).map(|_| rng.random_range(0.1..1.0)).collect();
    let prior = BeliefGrid::from_weights(&domain, weights.clone()).unwrap();
    let target = p(3.3, 1.7);
    let anchors = [p(0.0, 0.0), p(6.0, 0.5), p(2.0, 6.0)];
    let obs: Vec<GridObservation> = anchors
        .iter()
        .enumerate()
        .map(|(i, a)| GridObservation { origin: origin(i, *a), range: a.distance_to(&target) + 0.15 * i as f64, sigma: 0.6 + 0.2 * i as f64 })
        .collect();

    let centers: Vec<_> = domain.centers().collect();
    let mut sequential = prior.clone();
    for (k, o) in obs.iter().enumerate() {
        sequential = update(&sequential, o).unwrap();
        let raw: Vec<_> = obs[..=k].iter().map(|o| (o.origin.position, o.range, o.sigma)).collect();
        let expected = update_oracle(&centers, &weights, &raw);
        for (got, want) in sequential.mass().iter().zip(&expected) {
            assert!((got - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE), "{got} vs {want}");
        }
        assert!((sequential.total() - 1.0).abs() < 1e-9);
    }
    let batched = update_all(&prior, &obs).unwrap();
    for (a, b) in batched.mass().iter().zip(sequential.mass()) {
        assert!((a - b).abs() <= 1e-12 * b);
    }
}

#[test]
fn three_exact_ranges_locate_fixture_node() {
    let fixture = four_node_fixture();
    let domain = GridDomain::new(-1.0, 5.0, -1.0, 4.0, 0.1).unwrap();
    let obs: Vec<GridObservation> = (0..3)
        .map(|i| GridObservation { origin: origin(i, fixture[i]), range: fixture[i].distance_to(&fixture[3]), sigma: 0.2 })
        .collect();
    let post = update_all(&init_uniform(&domain), &obs).unwrap();
    let est = estimate(&post, NodeId(3));
    assert!((est.position.x - 1.0).abs() <= 0.1 && (est.position.y - 1.0).abs() <= 0.1);

    let centers: Vec<_> = domain.centers().collect();
    let raw: Vec<_> = obs.iter().map(|o| (o.origin.position, o.range, o.sigma)).collect();
    let oracle = update_oracle(&centers, &vec![1.0; centers.len()], &raw);
    assert_eq!(est.position, centers[argmax(&oracle)]);
}

#[test]
fn predict_matches_direct_convolution() {
    let domain = GridDomain::from_counts(0.0, 0.0, 1.0, 21, 21).unwrap();
    let center = p(10.5, 10.5);
    let spike = BeliefGrid::point_mass(&domain, center).unwrap();
    for sigma_cells in [0.5, 1.0, 2.0] {
        let out = predict(&spike, sigma_cells);
        let radius = (4.0 * sigma_cells).ceil();
        let kernel = |dx: f64, dy: f64| {
            if dx.abs() > radius || dy.abs() > radius {
                0.0
            } else {
                (-(dx * dx + dy * dy) / (2.0 * sigma_cells * sigma_cells)).exp()
            }
        };
        let raw: Vec<f64> = domain.centers().map(|c| kernel(c.x - center.x, c.y - center.y)).collect();
        let z: f64 = raw.iter().sum();
        for (got, want) in out.mass().iter().zip(raw.iter().map(|w| w / z)) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((out.total() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn predict_conserves_mass_at_edges() {
    let domain = GridDomain::from_counts(0.0, 0.0, 0.5, 12, 7).unwrap();
    let corner = BeliefGrid::point_mass(&domain, p(0.1, 0.1)).unwrap();
    let out = predict(&corner, 0.8);
    assert!((out.total() - 1.0).abs() < 1e-12);
    assert!(out.mass().iter().all(|m| *m >= 0.0));
    assert_eq!(argmax(out.mass()), 0);
}

#[test]
fn trilateration_matches_brute_force_search() {
    let anchors = [p(0.0, 0.0), p(4.0, 0.0), p(2.0, 3.0)];
    let target = p(1.0, 1.0);
    let pairs: Vec<_> = anchors.iter().map(|a| (*a, a.distance_to(&target) + 0.1)).collect();
    let x = trilaterate(&pairs).unwrap();

    let cost = |q: NodePosition| pairs.iter().map(|(a, r)| (a.distance_to(&q) - r).powi(2)).sum::<f64>();
    let (mut best, mut best_cost) = (target, f64::INFINITY);
    for i in -1000..=1000 {
        for j in -1000..=1000 {
            let q = p(target.x + i as f64 * 1e-3, target.y + j as f64 * 1e-3);
            let c = cost(q);
            if c < best_cost {
                best = q;
                best_cost = c;
            }
        }
    }
    assert!(x.distance_to(&best) < 1.5e-3, "solver {x:?}, grid {best:?}");
    assert!(cost(x) <= best_cost + 1e-9);
}

#[test]
fn nearest_rank_agrees_with_counting_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2, 7, 100, 1001] {
        let data: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let mut sorted = data.clone();
        sorted.sort_by(f64::total_cmp);
        for pct in [1.0, 50.0, 68.27, 95.45, 99.73, 100.0] {
            assert_eq!(nearest_rank(&sorted, pct), nearest_rank_oracle(&data, pct), "n={n} pct={pct}");
        }
    }
}
