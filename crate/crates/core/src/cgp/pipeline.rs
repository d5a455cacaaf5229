use log::warn;
use serde::{Deserialize, Serialize};

use super::combined_sigma;
use super::grid::{estimate, init_uniform, predict, update_all, BeliefGrid, GridDomain, GridObservation};
use crate::error::Result;
use crate::network::{CovarianceMatrix2, MeasurementMatrix, NodeEstimate, NodeId, NodePosition};

/// Settings of the CGP estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgpConfig {
    /// Shared 2-D grid for nodes 2 and above.
    pub domain: GridDomain,
    /// Cell size of the 1-D filter for node 1, meters.
    pub line_cell: f64,
    /// LOS ranging noise assumed by the likelihood, meters.
    pub sigma_r: f64,
    /// Diffusion applied to carried beliefs between epochs, meters.
    pub sigma_pred: f64,
    /// Keep beliefs across epochs instead of restarting from uniform.
    pub carry_beliefs: bool,
}

impl CgpConfig {
    fn line_domain(&self) -> Result<GridDomain> {
        GridDomain::line(0.0, self.domain.x_max().max(4.0 * self.line_cell), self.line_cell)
    }
}

/// Result of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct CgpEpoch {
    pub estimates: Vec<NodeEstimate>,
    /// Nodes whose belief underflowed and was restarted from uniform.
    pub resets: Vec<NodeId>,
}

impl CgpEpoch {
    pub fn success(&self) -> bool {
        self.estimates.iter().all(|e| e.valid)
    }
}

/// Stateful CGP runner. Holds per-node beliefs so they can be carried from
/// one epoch to the next when `carry_beliefs` is set.
#[derive(Debug, Clone)]
pub struct CgpEstimator {
    config: CgpConfig,
    line_domain: GridDomain,
    beliefs: Vec<Option<BeliefGrid>>,
    estimates: Vec<NodeEstimate>,
}

impl CgpEstimator {
    pub fn new(config: CgpConfig, node_count: usize) -> Result<Self> {
        let line_domain = config.line_domain()?;
        Ok(Self {
            config,
            line_domain,
            beliefs: vec![None; node_count],
            estimates: (0..node_count).map(|i| NodeEstimate::invalid(NodeId(i))).collect(),
        })
    }

    pub fn config(&self) -> &CgpConfig {
        &self.config
    }

    /// Latest belief of a node (none for node 0 or never-estimated nodes).
    pub fn belief(&self, node: NodeId) -> Option<&BeliefGrid> {
        self.beliefs.get(node.0).and_then(Option::as_ref)
    }

    pub fn estimates(&self) -> &[NodeEstimate] {
        &self.estimates
    }

    /// Runs the node pipeline on one epoch of measurements.
    pub fn process(&mut self, matrix: &MeasurementMatrix) -> CgpEpoch {
        let n = matrix.node_count();
        assert_eq!(n, self.beliefs.len(), "node count changed between epochs");
        let carry = self.config.carry_beliefs;
        let previous = std::mem::replace(
            &mut self.estimates,
            (0..n).map(|i| NodeEstimate::invalid(NodeId(i))).collect(),
        );
        let mut resets = Vec::new();

        self.estimates[0] = NodeEstimate::valid(NodeId::ORIGIN, NodePosition::ORIGIN, CovarianceMatrix2::ZERO);

        for target in (1..n).map(NodeId) {
            let own_prior = (carry && previous[target.0].valid).then_some(previous[target.0].covariance);
            let origins: Vec<NodeEstimate> = if target == NodeId::AXIS {
                vec![self.estimates[0]]
            } else {
                (0..n)
                    .filter(|&k| k != target.0)
                    .map(|k| if k < target.0 { self.estimates[k] } else if carry { previous[k] } else { NodeEstimate::invalid(NodeId(k)) })
                    .filter(|e| e.valid)
                    .collect()
            };
            let observations: Vec<GridObservation> = origins
                .iter()
                .flat_map(|origin| {
                    let (a, b) = matrix.pair(origin.node, target);
                    let sigma = combined_sigma(&origin.covariance, own_prior.as_ref(), self.config.sigma_r);
                    [a, b].into_iter().flatten().map(move |range| GridObservation { origin: *origin, range, sigma })
                })
                .collect();

            let carried = if carry { self.beliefs[target.0].take() } else { None };
            let has_prior = carried.is_some();
            if observations.is_empty() && !has_prior {
                self.beliefs[target.0] = None;
                continue;
            }
            let fresh = || self.fresh_belief(target);
            let prior = match carried {
                Some(b) => {
                    let mut p = predict(&b, self.config.sigma_pred);
                    if target == NodeId::HALF_PLANE && p.restrict_to_upper_half_plane().is_err() {
                        p = fresh();
                    }
                    p
                }
                None => fresh(),
            };
            let posterior = match update_all(&prior, &observations) {
                Ok(p) => p,
                Err(e) => {
                    warn!("epoch {}: belief of {target} reset after {e}", matrix.epoch());
                    resets.push(target);
                    match update_all(&fresh(), &observations) {
                        Ok(p) => p,
                        Err(_) => {
                            self.beliefs[target.0] = None;
                            continue;
                        }
                    }
                }
            };
            self.estimates[target.0] = estimate(&posterior, target);
            self.beliefs[target.0] = Some(posterior);
        }
        CgpEpoch { estimates: self.estimates.clone(), resets }
    }

    fn fresh_belief(&self, target: NodeId) -> BeliefGrid {
        if target == NodeId::AXIS {
            return init_uniform(&self.line_domain);
        }
        let mut b = init_uniform(&self.config.domain);
        if target == NodeId::HALF_PLANE {
            b.restrict_to_upper_half_plane().expect("grid reaches into y >= 0");
        }
        b
    }
}

/// 1-D estimate of node 1 on the positive x-axis from its ranges to node 0.
/// Without any range the node is invalid.
pub fn estimate_a1_1d(ranges_to_a0: &[f64], config: &CgpConfig) -> Result<NodeEstimate> {
    if ranges_to_a0.is_empty() {
        return Ok(NodeEstimate::invalid(NodeId::AXIS));
    }
    let origin = NodeEstimate::valid(NodeId::ORIGIN, NodePosition::ORIGIN, CovarianceMatrix2::ZERO);
    let sigma = combined_sigma(&origin.covariance, None, config.sigma_r);
    let observations: Vec<_> = ranges_to_a0.iter().map(|&range| GridObservation { origin, range, sigma }).collect();
    let posterior = update_all(&init_uniform(&config.line_domain()?), &observations)?;
    Ok(estimate(&posterior, NodeId::AXIS))
}

/// Single-epoch CGP from uniform priors.
pub fn cgp_autoposition(matrix: &MeasurementMatrix, config: &CgpConfig) -> Result<Vec<NodeEstimate>> {
    let config = CgpConfig { carry_beliefs: false, ..config.clone() };
    let mut estimator = CgpEstimator::new(config, matrix.node_count())?;
    Ok(estimator.process(matrix).estimates)
}
