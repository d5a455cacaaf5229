//! Discrete belief over an equidistant grid of cell centers, with the three
//! histogram-filter steps: prediction, measurement update and estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{CovarianceMatrix2, NodeEstimate, NodeId, NodePosition};

/// Smallest total mass accepted after an update before it counts as underflow.
pub const UNDERFLOW_MASS: f64 = 1e-300;

/// Axis-aligned grid. Cell `m` has column `m % nx` and row `m / nx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    x_min: f64,
    y_min: f64,
    cell: f64,
    nx: usize,
    ny: usize,
}

impl GridDomain {
    /// Covers `[x_min, x_max] x [y_min, y_max]`; the upper bounds are rounded to
    /// a whole number of cells.
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::InvalidGrid(format!("cell size must be positive, got {cell}")));
        }
        if !(x_max > x_min && y_max > y_min) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("extent must be finite and non-empty".into()));
        }
        let nx = (((x_max - x_min) / cell).round() as usize).max(1);
        let ny = (((y_max - y_min) / cell).round() as usize).max(1);
        Self::from_counts(x_min, y_min, cell, nx, ny)
    }

    /// A single row of cells centered on `y = 0`, spanning `[x_min, x_max]`.
    pub fn line(x_min: f64, x_max: f64, cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) || !(x_max > x_min) {
            return Err(Error::InvalidGrid("line needs a positive cell and a non-empty extent".into()));
        }
        let nx = (((x_max - x_min) / cell).round() as usize).max(1);
        Self::from_counts(x_min, -0.5 * cell, cell, nx, 1)
    }

    pub fn from_counts(x_min: f64, y_min: f64, cell: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx * ny < 4 {
            return Err(Error::InvalidGrid(format!("need at least 4 cells, got {nx} x {ny}")));
        }
        Ok(Self { x_min, y_min, cell, nx, ny })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.nx as f64 * self.cell
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_min + self.ny as f64 * self.cell
    }

    pub fn is_line(&self) -> bool {
        self.ny == 1
    }

    pub fn center(&self, m: usize) -> NodePosition {
        let (ix, iy) = (m % self.nx, m / self.nx);
        NodePosition::new(self.x_min + (ix as f64 + 0.5) * self.cell, self.y_min + (iy as f64 + 0.5) * self.cell)
    }

    pub fn centers(&self) -> impl Iterator<Item = NodePosition> + '_ {
        (0..self.len()).map(|m| self.center(m))
    }

    /// Index of the cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: NodePosition) -> Option<usize> {
        let fx = ((p.x - self.x_min) / self.cell).floor();
        let fy = ((p.y - self.y_min) / self.cell).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some(fy as usize * self.nx + fx as usize)
    }
}

/// Probability mass per cell, normalized to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    domain: GridDomain,
    mass: Vec<f64>,
}

/// A range observed from an already-estimated node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridObservation {
    pub origin: NodeEstimate,
    pub range: f64,
    /// Combined ranging and node-uncertainty standard deviation, meters.
    pub sigma: f64,
}

/// Uniform belief: every cell holds `1 / M`.
pub fn init_uniform(domain: &GridDomain) -> BeliefGrid {
    let m = domain.len();
    BeliefGrid { domain: domain.clone(), mass: vec![1.0 / m as f64; m] }
}

impl BeliefGrid {
    /// Normalizes arbitrary non-negative weights into a belief.
    pub fn from_weights(domain: &GridDomain, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != domain.len() {
            return Err(Error::InvalidGrid(format!("{} weights for {} cells", weights.len(), domain.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGrid("weights must be finite and non-negative".into()));
        }
        let mut belief = BeliefGrid { domain: domain.clone(), mass: weights };
        belief.normalize()?;
        Ok(belief)
    }

    /// All mass on the cell containing `p`.
    pub fn point_mass(domain: &GridDomain, p: NodePosition) -> Result<Self> {
        let m = domain.cell_of(p).ok_or_else(|| Error::InvalidGrid(format!("{p:?} lies outside the grid")))?;
        let mut weights = vec![0.0; domain.len()];
        weights[m] = 1.0;
        Self::from_weights(domain, weights)
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    fn normalize(&mut self) -> Result<()> {
        let total = self.total();
        if !(total >= UNDERFLOW_MASS) {
            return Err(Error::Underflow(total));
        }
        let eta = 1.0 / total;
        self.mass.iter_mut().for_each(|p| *p *= eta);
        Ok(())
    }

    /// Zeroes every cell whose center has `y < 0` and renormalizes.
    pub fn restrict_to_upper_half_plane(&mut self) -> Result<()> {
        let nx = self.domain.nx;
        for (row, chunk) in self.mass.chunks_mut(nx).enumerate() {
            let y = self.domain.y_min + (row as f64 + 0.5) * self.domain.cell;
            if y < 0.0 {
                chunk.iter_mut().for_each(|p| *p = 0.0);
            }
        }
        self.normalize()
    }
}

/// Symmetric discrete Gaussian weights for offsets `-r..=r`, summing to one.
pub fn gaussian_kernel(sigma_cells: f64) -> Vec<f64> {
    if !(sigma_cells > 0.0) {
        return vec![1.0];
    }
    let radius = (4.0 * sigma_cells).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64).powi(2) / (2.0 * sigma_cells * sigma_cells)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

/// Mirrors an out-of-range index back into `0..n` (half-sample symmetric).
fn mirror(i: i64, n: usize) -> usize {
    let period = 2 * n as i64;
    let k = i.rem_euclid(period);
    if k < n as i64 {
        k as usize
    } else {
        (period - 1 - k) as usize
    }
}

/// Prediction step for a static node: separable Gaussian diffusion with
/// standard deviation `sigma` (meters), mirrored at the grid edges, followed
/// by renormalization. `sigma = 0` is the identity.
pub fn predict(prior: &BeliefGrid, sigma: f64) -> BeliefGrid {
    let kernel = gaussian_kernel(sigma / prior.domain.cell);
    if kernel.len() == 1 {
        return prior.clone();
    }
    let radius = (kernel.len() / 2) as i64;
    let (nx, ny) = (prior.domain.nx, prior.domain.ny);
    let mut rows = vec![0.0; nx * ny];
    for iy in 0..ny {
        let src = &prior.mass[iy * nx..(iy + 1) * nx];
        for ix in 0..nx {
            rows[iy * nx + ix] = kernel
                .iter()
                .enumerate()
                .map(|(k, w)| w * src[mirror(ix as i64 + k as i64 - radius, nx)])
                .sum();
        }
    }
    let mut out = vec![0.0; nx * ny];
    if ny == 1 {
        out.copy_from_slice(&rows);
    } else {
        for iy in 0..ny {
            for ix in 0..nx {
                out[iy * nx + ix] = kernel
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * rows[mirror(iy as i64 + k as i64 - radius, ny) * nx + ix])
                    .sum();
            }
        }
    }
    let mut belief = BeliefGrid { domain: prior.domain.clone(), mass: out };
    belief.normalize().expect("diffusion preserves positive mass");
    belief
}

/// Per-cell Gaussian log-likelihood of one observation, up to a constant.
pub fn log_likelihood(domain: &GridDomain, obs: &GridObservation) -> Vec<f64> {
    let mut ll = vec![0.0; domain.len()];
    accumulate_log_likelihood(domain, obs.origin.position, &[(obs.range, obs.sigma)], &mut ll);
    ll
}

/// Adds `-(|origin - X_m| - r)^2 / (2 sigma^2)` for each `(r, sigma)` to `ll`.
fn accumulate_log_likelihood(domain: &GridDomain, origin: NodePosition, ranges: &[(f64, f64)], ll: &mut [f64]) {
    for (m, acc) in ll.iter_mut().enumerate() {
        let dist = domain.center(m).distance_to(&origin);
        for &(r, sigma) in ranges {
            let y = dist - r;
            *acc -= y * y / (2.0 * sigma * sigma);
        }
    }
}

fn apply_log_likelihood(belief: &BeliefGrid, ll: &[f64]) -> Result<BeliefGrid> {
    let shift = belief
        .mass
        .iter()
        .zip(ll)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Err(Error::Underflow(0.0));
    }
    let mass = belief
        .mass
        .iter()
        .zip(ll)
        .map(|(p, l)| if *p > 0.0 { p * (l - shift).exp() } else { 0.0 })
        .collect();
    let mut posterior = BeliefGrid { domain: belief.domain.clone(), mass };
    posterior.normalize()?;
    Ok(posterior)
}

/// Measurement update with one range observation: posterior mass is
/// proportional to `prior * exp(-y^2 / (2 sigma^2))` with `y` the residual
/// between cell-to-origin distance and observed range.
pub fn update(belief: &BeliefGrid, obs: &GridObservation) -> Result<BeliefGrid> {
    update_all(belief, std::slice::from_ref(obs))
}

/// Applies several independent observations at once; equivalent to
/// sequential [`update`] calls, evaluated in log space.
pub fn update_all(belief: &BeliefGrid, observations: &[GridObservation]) -> Result<BeliefGrid> {
    if observations.is_empty() {
        return Ok(belief.clone());
    }
    for obs in observations {
        if !(obs.sigma > 0.0) || !obs.range.is_finite() || !obs.origin.valid {
            return Err(Error::InvalidGrid(format!("unusable observation {obs:?}")));
        }
    }
    let mut ll = vec![0.0; belief.domain.len()];
    let mut start = 0;
    // Observations sharing an origin reuse one distance evaluation per cell.
    while start < observations.len() {
        let origin = observations[start].origin.position;
        let end = start
            + observations[start..]
                .iter()
                .take_while(|o| o.origin.position == origin)
                .count();
        let ranges: Vec<_> = observations[start..end].iter().map(|o| (o.range, o.sigma)).collect();
        accumulate_log_likelihood(&belief.domain, origin, &ranges, &mut ll);
        start = end;
    }
    apply_log_likelihood(belief, &ll)
}

/// Position of the most probable cell (lowest index on ties) and the
/// probability-weighted spread of all cells around that position.
pub fn estimate(belief: &BeliefGrid, node: NodeId) -> NodeEstimate {
    let mut best = 0;
    for (m, p) in belief.mass.iter().enumerate() {
        if *p > belief.mass[best] {
            best = m;
        }
    }
    let center = belief.domain.center(best);
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for (m, p) in belief.mass.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let c = belief.domain.center(m);
        let (dx, dy) = (c.x - center.x, c.y - center.y);
        xx += p * dx * dx;
        xy += p * dx * dy;
        yy += p * dy * dy;
    }
    let covariance = CovarianceMatrix2::new(xx, xy, yy).expect("weighted outer products are PSD");
    NodeEstimate::valid(node, center, covariance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CovarianceMatrix2;

    fn origin_at(x: f64, y: f64) -> NodeEstimate {
        NodeEstimate::valid(NodeId(0), NodePosition::new(x, y), CovarianceMatrix2::ZERO)
    }

    #[test]
    fn uniform_examples() {
        let four = GridDomain::from_counts(0.0, 0.0, 1.0, 2, 2).unwrap();
        assert!(init_uniform(&four).mass().iter().all(|p| *p == 0.25));

        let big = GridDomain::new(0.0, 30.0, 0.0, 30.0, 0.1).unwrap();
        assert_eq!(big.len(), 90_000);
        let b = init_uniform(&big);
        assert!((b.mass()[0] - 1.111_111e-5).abs() < 1e-10);
        assert!((b.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_rejects_bad_geometry() {
        assert!(GridDomain::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(GridDomain::new(0.0, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(GridDomain::new(1.0, 0.0, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn cell_lookup_round_trips() {
        let d = GridDomain::new(-5.0, 5.0, -2.0, 3.0, 0.5).unwrap();
        for m in [0, 7, d.len() - 1] {
            assert_eq!(d.cell_of(d.center(m)), Some(m));
        }
        assert_eq!(d.cell_of(NodePosition::new(6.0, 0.0)), None);
    }

    #[test]
    fn zero_diffusion_is_identity() {
        let d = GridDomain::new(0.0, 3.0, 0.0, 3.0, 1.0).unwrap();
        let b = BeliefGrid::from_weights(&d, (1..=9).map(f64::from).collect()).unwrap();
        assert_eq!(predict(&b, 0.0), b);
    }

    #[test]
    fn diffusion_keeps_uniform_fixed() {
        let d = GridDomain::new(0.0, 4.0, 0.0, 3.0, 0.5).unwrap();
        let u = init_uniform(&d);
        let p = predict(&u, 0.7);
        for (a, b) in p.mass().iter().zip(u.mass()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn estimate_of_point_mass() {
        let d = GridDomain::new(0.0, 4.0, 0.0, 4.0, 1.0).unwrap();
        let b = BeliefGrid::point_mass(&d, NodePosition::new(2.2, 3.4)).unwrap();
        let e = estimate(&b, NodeId(5));
        assert_eq!(e.position, NodePosition::new(2.5, 3.5));
        assert_eq!(e.covariance, CovarianceMatrix2::ZERO);
    }

    #[test]
    fn tie_breaks_to_lowest_index_and_spread_is_around_argmax() {
        // Cell centers 0, 2, 4, 6 on a line.
        let d = GridDomain::line(-1.0, 7.0, 2.0).unwrap();
        let b = BeliefGrid::from_weights(&d, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let e = estimate(&b, NodeId(1));
        assert_eq!(e.position, NodePosition::new(0.0, 0.0));
        assert!((e.covariance.xx() - 2.0).abs() < 1e-15);
        assert_eq!(e.covariance.yy(), 0.0);
    }

    #[test]
    fn single_range_gives_annulus() {
        let d = GridDomain::new(-6.0, 6.0, -6.0, 6.0, 0.1).unwrap();
        let obs = GridObservation { origin: origin_at(0.0, 0.0), range: 4.0, sigma: 0.2 };
        let post = update(&init_uniform(&d), &obs).unwrap();
        let e = estimate(&post, NodeId(1));
        assert!((e.position.distance_to(&NodePosition::ORIGIN) - 4.0).abs() < 0.1);
        assert!(e.covariance.trace() > 4.0);
    }

    #[test]
    fn consistent_observation_keeps_point_mass() {
        let d = GridDomain::new(0.0, 5.0, 0.0, 5.0, 0.5).unwrap();
        let truth = NodePosition::new(1.25, 1.25);
        let prior = BeliefGrid::point_mass(&d, truth).unwrap();
        let obs = GridObservation { origin: origin_at(4.0, 0.0), range: truth.distance_to(&NodePosition::new(4.0, 0.0)), sigma: 0.3 };
        assert_eq!(update(&prior, &obs).unwrap(), prior);
    }

    #[test]
    fn disjoint_support_underflows() {
        let d = GridDomain::new(0.0, 5.0, 0.0, 5.0, 0.5).unwrap();
        let prior = BeliefGrid::point_mass(&d, NodePosition::new(0.25, 0.25)).unwrap();
        // Zero prior mass everywhere the likelihood lives is fine; only an
        // all-zero prior can fail.
        let obs = GridObservation { origin: origin_at(4.0, 4.0), range: 0.1, sigma: 0.01 };
        assert!(update(&prior, &obs).is_ok());
        let empty = BeliefGrid { domain: d.clone(), mass: vec![0.0; d.len()] };
        assert!(matches!(update(&empty, &obs), Err(Error::Underflow(_))));
    }

    #[test]
    fn upper_half_plane_restriction() {
        let d = GridDomain::new(-2.0, 2.0, -2.0, 2.0, 1.0).unwrap();
        let mut b = init_uniform(&d);
        b.restrict_to_upper_half_plane().unwrap();
        for (m, p) in b.mass().iter().enumerate() {
            if d.center(m).y < 0.0 {
                assert_eq!(*p, 0.0);
            } else {
                assert!((p - 0.125).abs() < 1e-15);
            }
        }
    }
}
