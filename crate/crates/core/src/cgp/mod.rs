//! Collaborative grid positioning (CGP).
//!
//! Each node is estimated by a histogram filter over a shared grid. Node 0 is
//! fixed at the origin, node 1 is estimated on the positive x-axis by a 1-D
//! filter, and every further node by a 2-D filter fed with all available
//! ranges from nodes that already hold a valid estimate. Uncertainty of the
//! originating estimates widens the likelihood of their observations.

mod grid;
mod pipeline;

pub use grid::{
    estimate, gaussian_kernel, init_uniform, log_likelihood, predict, update, update_all, BeliefGrid, GridDomain,
    GridObservation, UNDERFLOW_MASS,
};
pub use pipeline::{cgp_autoposition, estimate_a1_1d, CgpConfig, CgpEpoch, CgpEstimator};

use crate::network::CovarianceMatrix2;

/// Inter-node ranging noise: `sigma_r + sqrt(tr(origin)) + sqrt(tr(peer))`.
/// A peer without an estimate contributes nothing.
pub fn combined_sigma(origin_cov: &CovarianceMatrix2, peer_cov: Option<&CovarianceMatrix2>, sigma_r: f64) -> f64 {
    sigma_r + origin_cov.trace().max(0.0).sqrt() + peer_cov.map_or(0.0, |c| c.trace().max(0.0).sqrt())
}
