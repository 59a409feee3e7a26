//! Model base manifolds and sampled scalar fields.
//!
//! Tori are the unit cells `[0,1)^{2n}` with equal quadrature weights, so the
//! flat reference volume is 1. The axisymmetric sphere is sampled at interior
//! colatitudes `θ_i = (i + ½)π/N`; its weights carry the `2π sinθ dθ` area
//! element, so they sum to the round area `4π`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::krf::sphere::SphereOps;
use crate::spectral::TorusSpectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Torus2d,
    Torus4d,
    SphereAxisym,
}

impl Topology {
    pub fn name(self) -> &'static str {
        match self {
            Topology::Torus2d => "torus-2d",
            Topology::Torus4d => "torus-4d",
            Topology::SphereAxisym => "sphere-axisym",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "torus-2d" | "torus2d" => Ok(Topology::Torus2d),
            "torus-4d" | "torus4d" => Ok(Topology::Torus4d),
            "sphere-axisym" | "sphere" => Ok(Topology::SphereAxisym),
            other => Err(CoreError::Parse(format!("unknown topology `{other}`"))),
        }
    }

    /// Number of coordinates per node.
    pub fn coordinate_count(self) -> usize {
        match self {
            Topology::Torus2d => 2,
            Topology::Torus4d => 4,
            Topology::SphereAxisym => 1,
        }
    }

    /// Complex dimension `n` of the modelled manifold.
    pub fn complex_dim(self) -> usize {
        match self {
            Topology::Torus2d | Topology::SphereAxisym => 1,
            Topology::Torus4d => 2,
        }
    }

    pub fn is_torus(self) -> bool {
        !matches!(self, Topology::SphereAxisym)
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Discretization of one of the model manifolds.
pub struct GridSpec {
    topology: Topology,
    resolution: usize,
    axis: Vec<f64>,
    weights: Vec<f64>,
    len: usize,
    spectral: OnceLock<TorusSpectral>,
    sphere_ops: OnceLock<SphereOps>,
}

pub type Grid = Arc<GridSpec>;

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("topology", &self.topology)
            .field("resolution", &self.resolution)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.topology == other.topology && self.resolution == other.resolution
    }
}

impl GridSpec {
    pub fn new(topology: Topology, resolution: usize) -> Result<Grid> {
        match topology {
            Topology::Torus2d | Topology::Torus4d => {
                if resolution < 4 || resolution % 2 != 0 {
                    return Err(CoreError::InvalidInput(format!(
                        "torus resolution must be even and >= 4, got {resolution}"
                    )));
                }
            }
            Topology::SphereAxisym => {
                if resolution < 8 {
                    return Err(CoreError::InvalidInput(format!(
                        "sphere resolution must be >= 8, got {resolution}"
                    )));
                }
            }
        }
        let d = topology.coordinate_count();
        let len = resolution.pow(d as u32);
        let (axis, weights) = match topology {
            Topology::SphereAxisym => {
                let axis: Vec<f64> = (0..resolution)
                    .map(|i| (i as f64 + 0.5) * PI / resolution as f64)
                    .collect();
                let weights = fejer_area_weights(&axis);
                (axis, weights)
            }
            _ => {
                let axis = (0..resolution)
                    .map(|i| i as f64 / resolution as f64)
                    .collect();
                let w = 1.0 / len as f64;
                (axis, vec![w; len])
            }
        };
        Ok(Arc::new(GridSpec {
            topology,
            resolution,
            axis,
            weights,
            len,
            spectral: OnceLock::new(),
            sphere_ops: OnceLock::new(),
        }))
    }

    pub fn torus2d(resolution: usize) -> Result<Grid> {
        Self::new(Topology::Torus2d, resolution)
    }

    pub fn torus4d(resolution: usize) -> Result<Grid> {
        Self::new(Topology::Torus4d, resolution)
    }

    pub fn sphere(resolution: usize) -> Result<Grid> {
        Self::new(Topology::SphereAxisym, resolution)
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn complex_dim(&self) -> usize {
        self.topology.complex_dim()
    }

    /// Size of the per-node symmetric matrices (`2n`).
    pub fn tensor_dim(&self) -> usize {
        2 * self.complex_dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Total reference volume (1 on tori, 4π on the sphere).
    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let d = self.topology.coordinate_count();
        let mut idx = vec![0; d];
        let mut rem = node;
        for a in (0..d).rev() {
            idx[a] = rem % self.resolution;
            rem /= self.resolution;
        }
        idx
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .into_iter()
            .map(|i| self.axis[i])
            .collect()
    }

    pub(crate) fn spectral(&self) -> Result<&TorusSpectral> {
        if !self.topology.is_torus() {
            return Err(CoreError::Unsupported {
                op: "spectral differentiation",
                topology: self.topology.to_string(),
            });
        }
        Ok(self.spectral.get_or_init(|| {
            TorusSpectral::new(self.resolution, self.topology.coordinate_count())
        }))
    }

    pub(crate) fn sphere_ops(&self) -> Result<&SphereOps> {
        if self.topology != Topology::SphereAxisym {
            return Err(CoreError::Unsupported {
                op: "axisymmetric sphere operators",
                topology: self.topology.to_string(),
            });
        }
        Ok(self
            .sphere_ops
            .get_or_init(|| SphereOps::new(&self.axis, &self.weights)))
    }
}

/// Fejér's first rule on `x = cos θ_i`, scaled by 2π to integrate over the sphere.
fn fejer_area_weights(theta: &[f64]) -> Vec<f64> {
    let n = theta.len();
    theta
        .iter()
        .map(|&t| {
            let s: f64 = (1..=n / 2)
                .map(|k| {
                    let k = k as f64;
                    (2.0 * k * t).cos() / (4.0 * k * k - 1.0)
                })
                .sum();
            2.0 * PI * (2.0 / n as f64) * (1.0 - 2.0 * s)
        })
        .collect()
}

/// Deterministic pairwise (tree) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub(crate) fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(CoreError::GridMismatch {
            left: format!("{}:{}", a.topology, a.resolution),
            right: format!("{}:{}", b.topology, b.resolution),
        })
    }
}

/// Real function sampled at the grid nodes.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput(format!(
                "non-finite sample at node {i}"
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_vec_unchecked(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Integral against the reference measure (flat or round).
    pub fn integral(&self) -> f64 {
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .collect();
        pairwise_sum(&terms)
    }

    /// Integral against `ratio · μ₀`.
    pub fn integral_weighted(&self, ratio: &[f64]) -> f64 {
        debug_assert_eq!(ratio.len(), self.values.len());
        let terms: Vec<f64> = self
            .values
            .iter()
            .zip(ratio)
            .zip(self.grid.weights())
            .map(|((v, r), w)| v * r * w)
            .collect();
        pairwise_sum(&terms)
    }

    /// Average against the reference measure.
    pub fn mean(&self) -> f64 {
        self.integral() / self.grid.volume()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_weights_sum_to_one() {
        for g in [GridSpec::torus2d(16).unwrap(), GridSpec::torus4d(8).unwrap()] {
            assert!((g.volume() - 1.0).abs() < 1e-14);
            assert!(g.weights().iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn sphere_weights_integrate_polynomials_in_cos_theta() {
        let g = GridSpec::sphere(32).unwrap();
        assert!((g.volume() - 4.0 * PI).abs() < 1e-12);
        assert!(g.weights().iter().all(|&w| w > 0.0));
        // ∫ cos²θ dA = 4π/3
        let f = ScalarField::from_fn(&g, |c| c[0].cos().powi(2));
        assert!((f.integral() - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!(g.axis().iter().all(|&t| t > 0.0 && t < PI));
    }

    #[test]
    fn odd_torus_resolution_rejected() {
        assert!(GridSpec::torus2d(15).is_err());
        assert!(GridSpec::sphere(4).is_err());
    }

    #[test]
    fn multi_index_is_row_major() {
        let g = GridSpec::torus2d(8).unwrap();
        assert_eq!(g.multi_index(9), vec![1, 1]);
        assert_eq!(g.coords(3), vec![0.0, 3.0 / 8.0]);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = GridSpec::torus2d(4).unwrap();
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(ScalarField::new(&g, v).is_err());
    }
}
