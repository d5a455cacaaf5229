//! Shared domain types: node positions, constellations, directed ranging
//! measurements and per-node estimates.
//!
//! Everything here is an immutable value type once built, so epochs can be
//! handed across threads freely.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a node within a constellation. Node 0 is the frame origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub const ORIGIN: NodeId = NodeId(0);
    pub const AXIS: NodeId = NodeId(1);
    pub const HALF_PLANE: NodeId = NodeId(2);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

/// 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodePosition {
    pub x: f64,
    pub y: f64,
}

impl NodePosition {
    pub const ORIGIN: NodePosition = NodePosition { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: &NodePosition) -> f64 {
        euclidean_distance(*self, *other)
    }
}

/// Straight-line distance between two positions.
pub fn euclidean_distance(a: NodePosition, b: NodePosition) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Ground-truth node layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    positions: Vec<NodePosition>,
}

impl Constellation {
    /// Builds a constellation, rejecting fewer than three nodes, non-finite
    /// coordinates and coincident nodes.
    pub fn new(positions: Vec<NodePosition>) -> Result<Self> {
        if positions.len() < 3 {
            return Err(Error::InvalidConstellation(format!(
                "at least 3 nodes are required, got {}",
                positions.len()
            )));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidConstellation(format!("node {i} has a non-finite coordinate")));
            }
        }
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if euclidean_distance(positions[i], positions[j]) <= 0.0 {
                    return Err(Error::InvalidConstellation(format!("nodes {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { positions })
    }

    /// 13-node parking-lot layout, roughly 30 m x 20 m on a perturbed grid.
    /// Nodes 0 and 1 span the long side and node 2 sits opposite, so the
    /// frame-defining triangle is well conditioned.
    pub fn default_parking_lot() -> Self {
        Self::new(DEFAULT_PARKING_LOT.to_vec()).expect("default constellation is valid")
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[NodePosition] {
        &self.positions
    }

    pub fn position(&self, node: NodeId) -> NodePosition {
        self.positions[node.0]
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        euclidean_distance(self.positions[a.0], self.positions[b.0])
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.positions.len()).map(NodeId)
    }
}

const DEFAULT_PARKING_LOT: [NodePosition; 13] = [
    NodePosition::new(0.0, 0.0),
    NodePosition::new(29.7, 0.2),
    NodePosition::new(15.1, 20.3),
    NodePosition::new(7.8, 0.6),
    NodePosition::new(15.2, -0.3),
    NodePosition::new(22.4, 0.5),
    NodePosition::new(0.9, 9.6),
    NodePosition::new(8.1, 10.4),
    NodePosition::new(15.6, 9.8),
    NodePosition::new(22.9, 10.3),
    NodePosition::new(29.4, 10.1),
    NodePosition::new(0.4, 19.8),
    NodePosition::new(8.3, 19.5),
];

/// Simulator ground-truth label for a measurement. Estimators never read it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorClass {
    Los,
    Nlos,
    Outlier,
    Failed,
}

impl ErrorClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorClass::Los => "LOS",
            ErrorClass::Nlos => "NLOS",
            ErrorClass::Outlier => "OUTLIER",
            ErrorClass::Failed => "FAILED",
        }
    }
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one ranging attempt: a range (meters) or a failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSample {
    pub range: Option<f64>,
    pub class: ErrorClass,
}

impl RangeSample {
    pub const FAILED: RangeSample = RangeSample { range: None, class: ErrorClass::Failed };

    /// A successful range; negative values are clamped to zero.
    pub fn observed(range: f64, class: ErrorClass) -> Self {
        debug_assert!(class != ErrorClass::Failed);
        Self { range: Some(range.max(0.0)), class }
    }
}

/// One directed measurement `from -> to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangingMeasurement {
    pub from: NodeId,
    pub to: NodeId,
    pub range: Option<f64>,
    pub class: ErrorClass,
}

/// Directed pair-wise measurements of one epoch. `(i, j)` and `(j, i)` are
/// independent entries; the diagonal is always empty.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    epoch: usize,
    n: usize,
    entries: Vec<Option<RangeSample>>,
}

impl MeasurementMatrix {
    pub fn new(epoch: usize, n: usize) -> Self {
        Self { epoch, n, entries: vec![None; n * n] }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Stores a directed entry. Self-measurements are rejected.
    pub fn set(&mut self, from: NodeId, to: NodeId, sample: RangeSample) -> Result<()> {
        if from == to {
            return Err(Error::SelfMeasurement(from.0));
        }
        if from.0 >= self.n || to.0 >= self.n {
            return Err(Error::NodeOutOfRange { node: from.0.max(to.0), count: self.n });
        }
        self.entries[from.0 * self.n + to.0] = Some(sample);
        Ok(())
    }

    /// Removes a directed entry, leaving it absent.
    pub fn clear(&mut self, from: NodeId, to: NodeId) {
        if from.0 < self.n && to.0 < self.n {
            self.entries[from.0 * self.n + to.0] = None;
        }
    }

    pub fn get(&self, from: NodeId, to: NodeId) -> Option<RangeSample> {
        if from.0 >= self.n || to.0 >= self.n {
            return None;
        }
        self.entries[from.0 * self.n + to.0]
    }

    /// The directed range `from -> to`, if it exists and did not fail.
    pub fn range(&self, from: NodeId, to: NodeId) -> Option<f64> {
        self.get(from, to).and_then(|s| s.range)
    }

    /// Both directed ranges of an unordered pair, `(a -> b, b -> a)`.
    pub fn pair(&self, a: NodeId, b: NodeId) -> (Option<f64>, Option<f64>) {
        (self.range(a, b), self.range(b, a))
    }

    /// Arithmetic mean of the available directions of a pair.
    pub fn fused_range(&self, a: NodeId, b: NodeId) -> Option<f64> {
        match self.pair(a, b) {
            (Some(ab), Some(ba)) => Some(0.5 * (ab + ba)),
            (Some(r), None) | (None, Some(r)) => Some(r),
            (None, None) => None,
        }
    }

    /// All present entries in row-major order.
    pub fn measurements(&self) -> impl Iterator<Item = RangingMeasurement> + '_ {
        self.entries.iter().enumerate().filter_map(move |(k, e)| {
            e.map(|s| RangingMeasurement {
                from: NodeId(k / self.n),
                to: NodeId(k % self.n),
                range: s.range,
                class: s.class,
            })
        })
    }
}

/// Symmetric 2x2 covariance in m^2, stored as `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CovarianceMatrix2 {
    xx: f64,
    xy: f64,
    yy: f64,
}

const PSD_TOLERANCE: f64 = 1e-12;

impl CovarianceMatrix2 {
    pub const ZERO: CovarianceMatrix2 = CovarianceMatrix2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    /// Builds a covariance, rejecting non-PSD input.
    pub fn new(xx: f64, xy: f64, yy: f64) -> Result<Self> {
        let c = Self { xx, xy, yy };
        let (lo, _) = c.eigenvalues();
        if !(xx.is_finite() && xy.is_finite() && yy.is_finite()) || lo < -PSD_TOLERANCE {
            return Err(Error::NotPositiveSemidefinite { xx, xy, yy });
        }
        Ok(c)
    }

    pub fn diagonal(xx: f64, yy: f64) -> Result<Self> {
        Self::new(xx, 0.0, yy)
    }

    /// Builds from a full matrix; asymmetric input is an error.
    pub fn from_rows(rows: [[f64; 2]; 2]) -> Result<Self> {
        if rows[0][1] != rows[1][0] {
            return Err(Error::AsymmetricCovariance);
        }
        Self::new(rows[0][0], rows[0][1], rows[1][1])
    }

    pub fn xx(&self) -> f64 {
        self.xx
    }

    pub fn xy(&self) -> f64 {
        self.xy
    }

    pub fn yy(&self) -> f64 {
        self.yy
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = half_diff.hypot(self.xy);
        (mean - radius, mean + radius)
    }
}

/// Sum of the diagonal of a covariance.
pub fn trace(c: &CovarianceMatrix2) -> f64 {
    c.trace()
}

/// Position estimate of one node. Invalid estimates carry no usable position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeEstimate {
    pub node: NodeId,
    pub position: NodePosition,
    pub covariance: CovarianceMatrix2,
    pub valid: bool,
}

impl NodeEstimate {
    pub fn valid(node: NodeId, position: NodePosition, covariance: CovarianceMatrix2) -> Self {
        Self { node, position, covariance, valid: true }
    }

    pub fn invalid(node: NodeId) -> Self {
        Self {
            node,
            position: NodePosition::new(f64::NAN, f64::NAN),
            covariance: CovarianceMatrix2::ZERO,
            valid: false,
        }
    }

    /// Position if the estimate may be consumed.
    pub fn usable_position(&self) -> Option<NodePosition> {
        self.valid.then_some(self.position)
    }
}
