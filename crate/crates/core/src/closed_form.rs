//! Closed-form auto-positioning baseline.
//!
//! Node 0 sits at the origin, node 1 on the positive x-axis at the measured
//! distance, node 2 in the upper half-plane from the triangle it forms with the
//! first two. Every further node is placed by least-squares trilateration from
//! all nodes placed before it, but only if its ranges to nodes 0 and 1 exist.
//! Directed ranges of a pair are averaged. There is no outlier rejection.

use std::fmt;

use serde::Serialize;

use crate::network::{CovarianceMatrix2, MeasurementMatrix, NodeEstimate, NodeId, NodePosition};

const MAX_ITERATIONS: usize = 50;
const STEP_TOLERANCE: f64 = 1e-6;
const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CfFailure {
    MissingRange,
    NegativeDiscriminant,
    DegenerateGeometry,
    InsufficientRanges,
}

impl fmt::Display for CfFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CfFailure::MissingRange => "MISSING_RANGE",
            CfFailure::NegativeDiscriminant => "NEGATIVE_DISCRIMINANT",
            CfFailure::DegenerateGeometry => "DEGENERATE_GEOMETRY",
            CfFailure::InsufficientRanges => "INSUFFICIENT_RANGES",
        })
    }
}

impl std::error::Error for CfFailure {}

/// Per-epoch outcome of the closed-form method.
#[derive(Debug, Clone, PartialEq)]
pub struct CfResult {
    pub estimates: Vec<NodeEstimate>,
    pub failures: Vec<Option<CfFailure>>,
}

impl CfResult {
    /// True iff every node was placed.
    pub fn success(&self) -> bool {
        self.estimates.iter().all(|e| e.valid)
    }

    pub fn node_success(&self, node: NodeId) -> bool {
        self.estimates[node.0].valid
    }

    /// Reason of the lowest-index failed node.
    pub fn failure_reason(&self) -> Option<CfFailure> {
        self.failures.iter().flatten().next().copied()
    }
}

/// Positions of the three frame-defining nodes from their pair-wise ranges.
pub fn place_frame_anchors(d01: f64, d02: f64, d12: f64) -> Result<[NodePosition; 3], CfFailure> {
    if !(d01 > 0.0) {
        return Err(CfFailure::DegenerateGeometry);
    }
    let x1 = d01;
    let x2 = (d02 * d02 - d12 * d12 + x1 * x1) / (2.0 * x1);
    let y2_sq = d02 * d02 - x2 * x2;
    if !(y2_sq >= 0.0) {
        return Err(CfFailure::NegativeDiscriminant);
    }
    Ok([NodePosition::ORIGIN, NodePosition::new(x1, 0.0), NodePosition::new(x2, y2_sq.sqrt())])
}

fn lse_cost(x: NodePosition, anchors: &[(NodePosition, f64)]) -> f64 {
    anchors.iter().map(|(a, r)| (x.distance_to(a) - r).powi(2)).sum()
}

fn centroid(anchors: &[(NodePosition, f64)]) -> NodePosition {
    let n = anchors.len() as f64;
    NodePosition::new(
        anchors.iter().map(|(a, _)| a.x).sum::<f64>() / n,
        anchors.iter().map(|(a, _)| a.y).sum::<f64>() / n,
    )
}

/// Gauss-Newton with step halving from `start`; returns the minimizer and
/// its cost.
fn gauss_newton(start: NodePosition, anchors: &[(NodePosition, f64)]) -> Result<(NodePosition, f64), CfFailure> {
    let mut x = start;
    let mut cost = lse_cost(x, anchors);
    for _ in 0..MAX_ITERATIONS {
        let (mut jtj, mut jtr) = ([0.0f64; 3], [0.0f64; 2]);
        for (a, r) in anchors {
            let dist = x.distance_to(a);
            if dist == 0.0 {
                continue;
            }
            let (ux, uy) = ((x.x - a.x) / dist, (x.y - a.y) / dist);
            let res = dist - r;
            jtj[0] += ux * ux;
            jtj[1] += ux * uy;
            jtj[2] += uy * uy;
            jtr[0] += ux * res;
            jtr[1] += uy * res;
        }
        let normal = CovarianceMatrix2::new(jtj[0], jtj[1], jtj[2]).map_err(|_| CfFailure::DegenerateGeometry)?;
        let (lo, hi) = normal.eigenvalues();
        if !(hi > 0.0) {
            return Err(CfFailure::DegenerateGeometry);
        }
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            // Locally flat direction at this iterate only; damp the step.
            let damping = hi * 1e-3;
            jtj[0] += damping;
            jtj[2] += damping;
        }
        let det = jtj[0] * jtj[2] - jtj[1] * jtj[1];
        let dx = -(jtj[2] * jtr[0] - jtj[1] * jtr[1]) / det;
        let dy = -(jtj[0] * jtr[1] - jtj[1] * jtr[0]) / det;

        let mut t = 1.0;
        let mut next = NodePosition::new(x.x + dx, x.y + dy);
        let mut next_cost = lse_cost(next, anchors);
        while next_cost > cost && t > 1e-10 {
            t *= 0.5;
            next = NodePosition::new(x.x + t * dx, x.y + t * dy);
            next_cost = lse_cost(next, anchors);
        }
        let step = t * dx.hypot(dy);
        if next_cost <= cost {
            x = next;
            cost = next_cost;
        }
        if step < STEP_TOLERANCE {
            return if x.is_finite() { Ok((x, cost)) } else { Err(CfFailure::DegenerateGeometry) };
        }
    }
    Err(CfFailure::DegenerateGeometry)
}

/// Condition number of the anchor scatter matrix; infinite for collinear
/// anchors.
fn anchor_condition(anchors: &[(NodePosition, f64)]) -> f64 {
    let m = centroid(anchors);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, _) in anchors {
        sxx += (a.x - m.x).powi(2);
        sxy += (a.x - m.x) * (a.y - m.y);
        syy += (a.y - m.y).powi(2);
    }
    let scatter = CovarianceMatrix2::new(sxx, sxy, syy).unwrap_or(CovarianceMatrix2::ZERO);
    let (lo, hi) = scatter.eigenvalues();
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Reflection of `x` across the principal axis of the anchor positions.
fn mirror_across_anchors(x: NodePosition, anchors: &[(NodePosition, f64)]) -> NodePosition {
    let m = centroid(anchors);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, _) in anchors {
        sxx += (a.x - m.x).powi(2);
        sxy += (a.x - m.x) * (a.y - m.y);
        syy += (a.y - m.y).powi(2);
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (c, s) = (angle.cos(), angle.sin());
    let (px, py) = (x.x - m.x, x.y - m.y);
    let along = px * c + py * s;
    NodePosition::new(m.x + 2.0 * along * c - px, m.y + 2.0 * along * s - py)
}

/// Linearized solution from differences of the squared range equations.
fn linear_solution(anchors: &[(NodePosition, f64)]) -> Option<NodePosition> {
    let (a0, r0) = anchors[0];
    let (mut ata, mut atb) = ([0.0f64; 3], [0.0f64; 2]);
    for (a, r) in &anchors[1..] {
        let (gx, gy) = (2.0 * (a.x - a0.x), 2.0 * (a.y - a0.y));
        let h = r0 * r0 - r * r + a.x * a.x + a.y * a.y - a0.x * a0.x - a0.y * a0.y;
        ata[0] += gx * gx;
        ata[1] += gx * gy;
        ata[2] += gy * gy;
        atb[0] += gx * h;
        atb[1] += gy * h;
    }
    let det = ata[0] * ata[2] - ata[1] * ata[1];
    let x = NodePosition::new((ata[2] * atb[0] - ata[1] * atb[1]) / det, (ata[0] * atb[1] - ata[1] * atb[0]) / det);
    x.is_finite().then_some(x)
}

/// Least-squares minimizer of `sum (|X - A_k| - r_k)^2`. Gauss-Newton runs
/// from the anchor centroid and from the linearized solution, then once more
/// from the mirror image of the better result. The lowest cost wins; ties go
/// to the larger y.
pub fn trilaterate(anchors: &[(NodePosition, f64)]) -> Result<NodePosition, CfFailure> {
    if anchors.len() < 3 {
        return Err(CfFailure::InsufficientRanges);
    }
    if anchor_condition(anchors) > MAX_CONDITION {
        return Err(CfFailure::DegenerateGeometry);
    }
    let better = |a: (NodePosition, f64), b: (NodePosition, f64)| {
        let tie = (a.1 - b.1).abs() <= 1e-9 * a.1.max(b.1) + 1e-12;
        if (tie && b.0.y > a.0.y) || (!tie && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let starts = std::iter::once(centroid(anchors)).chain(linear_solution(anchors));
    let best = starts
        .filter_map(|s| gauss_newton(s, anchors).ok())
        .reduce(better)
        .ok_or(CfFailure::DegenerateGeometry)?;
    let best = match gauss_newton(mirror_across_anchors(best.0, anchors), anchors) {
        Ok(other) => better(best, other),
        Err(_) => best,
    };
    Ok(best.0)
}

/// Least-squares position from known estimates and the ranges to them.
/// Invalid estimates are skipped.
pub fn trilaterate_lse(known: &[NodeEstimate], ranges: &[f64]) -> Result<NodePosition, CfFailure> {
    let anchors: Vec<_> = known
        .iter()
        .zip(ranges)
        .filter(|(k, r)| k.valid && r.is_finite())
        .map(|(k, r)| (k.position, *r))
        .collect();
    trilaterate(&anchors)
}

/// Places every node of one epoch. Never aborts: failures are recorded per node.
pub fn cf_autoposition(matrix: &MeasurementMatrix) -> CfResult {
    let n = matrix.node_count();
    let mut estimates: Vec<NodeEstimate> = (0..n).map(|i| NodeEstimate::invalid(NodeId(i))).collect();
    let mut failures: Vec<Option<CfFailure>> = vec![None; n];
    let (a0, a1, a2) = (NodeId::ORIGIN, NodeId::AXIS, NodeId::HALF_PLANE);

    let frame = match (matrix.fused_range(a0, a1), matrix.fused_range(a0, a2), matrix.fused_range(a1, a2)) {
        (Some(d01), Some(d02), Some(d12)) => place_frame_anchors(d01, d02, d12),
        _ => Err(CfFailure::MissingRange),
    };
    let frame = match frame {
        Ok(f) => f,
        Err(reason) => {
            failures.iter_mut().for_each(|f| *f = Some(reason));
            return CfResult { estimates, failures };
        }
    };
    for (i, p) in frame.iter().enumerate() {
        estimates[i] = NodeEstimate::valid(NodeId(i), *p, CovarianceMatrix2::ZERO);
    }

    for target in (3..n).map(NodeId) {
        if matrix.fused_range(a0, target).is_none() || matrix.fused_range(a1, target).is_none() {
            failures[target.0] = Some(CfFailure::MissingRange);
            continue;
        }
        let (known, ranges): (Vec<_>, Vec<_>) = estimates[..target.0]
            .iter()
            .filter(|e| e.valid)
            .filter_map(|e| matrix.fused_range(e.node, target).map(|r| (*e, r)))
            .unzip();
        match trilaterate_lse(&known, &ranges) {
            Ok(p) => estimates[target.0] = NodeEstimate::valid(target, p, CovarianceMatrix2::ZERO),
            Err(reason) => failures[target.0] = Some(reason),
        }
    }
    CfResult { estimates, failures }
}
