//! Symmetric and Hermitian tensor fields, and the real/complex dictionary.
//!
//! Real coordinates are ordered `(x_1..x_n, x_{n+1}..x_{2n})` with
//! `z_j = x_j + i x_{j+n}`. A real symmetric matrix is split into blocks
//! `[[A, Bᵀ], [B, C]]` of size `n`. On the sphere the 2×2 matrices are the
//! components in the round orthonormal frame `(e_θ, e_ϕ)`.

use nalgebra::{Complex, DMatrix};

use crate::density::Density;
use crate::error::{CoreError, Result};
use crate::grid::{same_grid, Grid, ScalarField, Topology};

const SYMMETRY_TOL: f64 = 1e-12;

fn scale_of<T: nalgebra::ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.iter().fold(1.0_f64, |s, v| s.max(v.clone().modulus()))
}

/// Per-node real symmetric `2n × 2n` matrices.
#[derive(Debug, Clone)]
pub struct SymTensorField {
    grid: Grid,
    values: Vec<DMatrix<f64>>,
}

impl SymTensorField {
    pub fn new(grid: &Grid, values: Vec<DMatrix<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::InvalidInput(format!(
                "expected {} matrices, got {}",
                grid.len(),
                values.len()
            )));
        }
        let d = grid.tensor_dim();
        let mut values = values;
        for (node, m) in values.iter_mut().enumerate() {
            if m.nrows() != d || m.ncols() != d {
                return Err(CoreError::InvalidInput(format!(
                    "node {node}: expected {d}x{d} matrix, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::InvalidInput(format!("non-finite entry at node {node}")));
            }
            let asym = (&*m - m.transpose()).amax();
            if asym > SYMMETRY_TOL * scale_of(m) {
                return Err(CoreError::NotSymmetric { node, asymmetry: asym });
            }
            *m = (&*m + m.transpose()) * 0.5;
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<DMatrix<f64>>) -> Self {
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// The flat (or round) reference metric `g₀ = Id`.
    pub fn identity(grid: &Grid) -> Self {
        let d = grid.tensor_dim();
        Self::from_vec_unchecked(grid, vec![DMatrix::identity(d, d); grid.len()])
    }

    pub fn zeros(grid: &Grid) -> Self {
        let d = grid.tensor_dim();
        Self::from_vec_unchecked(grid, vec![DMatrix::zeros(d, d); grid.len()])
    }

    /// `ρ · g₀`.
    pub fn conformal(rho: &ScalarField) -> Self {
        let grid = rho.grid();
        let d = grid.tensor_dim();
        let values = rho
            .values()
            .iter()
            .map(|&r| DMatrix::identity(d, d) * r)
            .collect();
        Self::from_vec_unchecked(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    pub fn at(&self, node: usize) -> &DMatrix<f64> {
        &self.values[node]
    }

    pub fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        Self::from_vec_unchecked(&self.grid, self.values.iter().map(f).collect())
    }

    pub fn zip_with(
        &self,
        other: &SymTensorField,
        f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        Ok(Self::from_vec_unchecked(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &SymTensorField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymTensorField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|m| m * c)
    }

    /// Pointwise product with a scalar field.
    pub fn scale_by(&self, rho: &ScalarField) -> Result<Self> {
        same_grid(&self.grid, rho.grid())?;
        Ok(Self::from_vec_unchecked(
            &self.grid,
            self.values
                .iter()
                .zip(rho.values())
                .map(|(m, r)| m * *r)
                .collect(),
        ))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |s, m| s.max(m.amax()))
    }

    /// Largest deviation from J-invariance, `max |J·h − h|`.
    pub fn j_defect(&self) -> f64 {
        let n = self.grid.complex_dim();
        self.values
            .iter()
            .fold(0.0, |s, m| s.max((j_action(m, n) - m).amax()))
    }

    /// J-invariant part `½(h + J·h)`.
    pub fn project_11(&self) -> Self {
        let n = self.grid.complex_dim();
        self.map(|m| (m + j_action(m, n)) * 0.5)
    }
}

/// `J·h = [[C, −B], [−Bᵀ, A]]` for `h = [[A, Bᵀ], [B, C]]`.
pub fn j_action(h: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let a = h.view((0, 0), (n, n));
    let b = h.view((n, 0), (n, n));
    let c = h.view((n, n), (n, n));
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(&c);
    out.view_mut((0, n), (n, n)).copy_from(&(-b));
    out.view_mut((n, 0), (n, n)).copy_from(&(-b.transpose()));
    out.view_mut((n, n), (n, n)).copy_from(&a);
    out
}

/// Per-node Hermitian `n × n` matrices `[g_{i j̄}]`.
#[derive(Debug, Clone)]
pub struct HermitianField {
    grid: Grid,
    values: Vec<DMatrix<Complex<f64>>>,
}

impl HermitianField {
    pub fn new(grid: &Grid, values: Vec<DMatrix<Complex<f64>>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::InvalidInput(format!(
                "expected {} matrices, got {}",
                grid.len(),
                values.len()
            )));
        }
        let n = grid.complex_dim();
        for (node, m) in values.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(CoreError::InvalidInput(format!(
                    "node {node}: expected {n}x{n} matrix"
                )));
            }
            let defect = (m - m.adjoint()).iter().fold(0.0_f64, |s, v| s.max(v.norm()));
            if defect > SYMMETRY_TOL * scale_of(m) {
                return Err(CoreError::NotHermitian { node, defect });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[DMatrix<Complex<f64>>] {
        &self.values
    }

    pub fn at(&self, node: usize) -> &DMatrix<Complex<f64>> {
        &self.values[node]
    }
}

/// `G = A + iB` becomes `[[2A, 2B], [−2B, 2A]]`; in complex terms the
/// blocks are `G + Ḡ` and `±(G − Gᵀ)/i`.
pub fn hermitian_to_real(h: &HermitianField) -> SymTensorField {
    let n = h.grid.complex_dim();
    let values = h
        .values
        .iter()
        .map(|g| {
            let mut m = DMatrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (g[(i, j)].re, g[(i, j)].im);
                    m[(i, j)] = 2.0 * a;
                    m[(i + n, j + n)] = 2.0 * a;
                    m[(i, j + n)] = 2.0 * b;
                    m[(i + n, j)] = -2.0 * b;
                }
            }
            m
        })
        .collect();
    SymTensorField::from_vec_unchecked(&h.grid, values)
}

/// Inverse of [`hermitian_to_real`] on J-invariant tensors.
pub fn real_to_hermitian(g: &SymTensorField) -> Result<HermitianField> {
    let n = g.grid.complex_dim();
    let mut out = Vec::with_capacity(g.values.len());
    for (node, m) in g.values.iter().enumerate() {
        let defect = (j_action(m, n) - m).amax();
        if defect > SYMMETRY_TOL * scale_of(m) {
            return Err(CoreError::NotJInvariant { node, defect });
        }
        out.push(DMatrix::from_fn(n, n, |i, j| {
            Complex::new(0.5 * m[(i, j)], 0.5 * m[(i, j + n)])
        }));
    }
    Ok(HermitianField {
        grid: g.grid.clone(),
        values: out,
    })
}

/// Matrix of second partials. On the sphere, the covariant Hessian in the
/// orthonormal frame, `diag(f_θθ, cotθ f_θ)`.
pub fn real_hessian(f: &ScalarField) -> Result<SymTensorField> {
    let grid = f.grid();
    let d = grid.tensor_dim();
    let values = match grid.topology() {
        Topology::SphereAxisym => {
            let ops = grid.sphere_ops()?;
            let d1 = ops.d_theta(f.values());
            let d2 = ops.d2_theta(f.values());
            grid.axis()
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    let mut m = DMatrix::zeros(2, 2);
                    m[(0, 0)] = d2[i];
                    m[(1, 1)] = t.cos() / t.sin() * d1[i];
                    m
                })
                .collect()
        }
        _ => {
            let parts = grid.spectral()?.hessian(f.values());
            (0..grid.len())
                .map(|node| DMatrix::from_fn(d, d, |a, b| parts[a][b][node]))
                .collect()
        }
    };
    Ok(SymTensorField::from_vec_unchecked(grid, values))
}

/// `[f_{i j̄}] = ¼(A + C) + (i/4)(Bᵀ − B)` from the blocks of `∇²f`.
pub fn complex_hessian(f: &ScalarField) -> Result<HermitianField> {
    let hess = real_hessian(f)?;
    let n = f.grid().complex_dim();
    let values = hess
        .values
        .iter()
        .map(|m| {
            DMatrix::from_fn(n, n, |i, j| {
                let a = m[(i, j)];
                let c = m[(i + n, j + n)];
                // B_{ij} = m[(i + n, j)]
                let b_ij = m[(i + n, j)];
                let b_ji = m[(j + n, i)];
                Complex::new(0.25 * (a + c), 0.25 * (b_ji - b_ij))
            })
        })
        .collect();
    Ok(HermitianField {
        grid: f.grid().clone(),
        values,
    })
}

/// A positive-definite metric field with cached inverses and volume ratio.
#[derive(Debug, Clone)]
pub struct Metric {
    field: SymTensorField,
    inverse: Vec<DMatrix<f64>>,
    sqrt_det: Vec<f64>,
}

impl Metric {
    pub fn new(field: SymTensorField) -> Result<Self> {
        let mut inverse = Vec::with_capacity(field.values.len());
        let mut sqrt_det = Vec::with_capacity(field.values.len());
        for (node, m) in field.values.iter().enumerate() {
            match m.clone().cholesky() {
                Some(ch) => {
                    let l = ch.l();
                    let det_sqrt: f64 = l.diagonal().iter().product();
                    inverse.push(ch.inverse());
                    sqrt_det.push(det_sqrt);
                }
                None => {
                    return Err(CoreError::Singular {
                        node,
                        eigenvalue: min_eigenvalue(m),
                    })
                }
            }
        }
        Ok(Self {
            field,
            inverse,
            sqrt_det,
        })
    }

    pub fn reference(grid: &Grid) -> Self {
        Self::new(SymTensorField::identity(grid)).expect("identity is positive definite")
    }

    pub fn field(&self) -> &SymTensorField {
        &self.field
    }

    pub fn grid(&self) -> &Grid {
        &self.field.grid
    }

    pub fn inverse(&self, node: usize) -> &DMatrix<f64> {
        &self.inverse[node]
    }

    /// `√det g` relative to the reference volume.
    pub fn volume_ratio(&self) -> &[f64] {
        &self.sqrt_det
    }

    pub fn volume(&self) -> f64 {
        ScalarField::constant(self.grid(), 1.0).integral_weighted(&self.sqrt_det)
    }

    /// `g⁻¹h` at one node.
    pub fn raise(&self, node: usize, h: &DMatrix<f64>) -> DMatrix<f64> {
        &self.inverse[node] * h
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn check_pair(g: &Metric, h: &SymTensorField) -> Result<()> {
    same_grid(g.grid(), h.grid())
}

/// `tr(g⁻¹h)` per node.
pub fn pointwise_trace(g: &Metric, h: &SymTensorField) -> Result<ScalarField> {
    check_pair(g, h)?;
    let v = (0..h.values.len())
        .map(|i| (&g.inverse[i] * &h.values[i]).trace())
        .collect();
    Ok(ScalarField::from_vec_unchecked(g.grid(), v))
}

/// `tr(g⁻¹h g⁻¹k)` per node.
pub fn pointwise_trace_pair(
    g: &Metric,
    h: &SymTensorField,
    k: &SymTensorField,
) -> Result<ScalarField> {
    check_pair(g, h)?;
    check_pair(g, k)?;
    let v = (0..h.values.len())
        .map(|i| {
            let gh = &g.inverse[i] * &h.values[i];
            let gk = &g.inverse[i] * &k.values[i];
            (gh * gk).trace()
        })
        .collect();
    Ok(ScalarField::from_vec_unchecked(g.grid(), v))
}

/// `dV_g = √det g · μ₀`.
pub fn riemannian_volume(g: &Metric) -> Density {
    Density::from_ratio_unchecked(g.grid(), g.sqrt_det.clone())
}

/// Quadrature of `f` against `μ`.
pub fn integrate(f: &ScalarField, mu: &Density) -> Result<f64> {
    same_grid(f.grid(), mu.grid())?;
    Ok(f.integral_weighted(mu.ratio()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use std::f64::consts::PI;

    fn herm(n: usize, seed: u64) -> DMatrix<Complex<f64>> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = DMatrix::from_fn(n, n, |_, _| Complex::new(next(), next()));
        (&m + m.adjoint()) * Complex::new(0.5, 0.0)
    }

    #[test]
    fn half_identity_maps_to_identity() {
        let g = GridSpec::torus2d(4).unwrap();
        let h = HermitianField::new(
            &g,
            vec![DMatrix::from_element(1, 1, Complex::new(0.5, 0.0)); 16],
        )
        .unwrap();
        let r = hermitian_to_real(&h);
        assert_eq!(r.at(3), &DMatrix::<f64>::identity(2, 2));
    }

    #[test]
    fn determinant_identity_and_round_trip() {
        let g = GridSpec::torus4d(4).unwrap();
        let vals: Vec<_> = (0..g.len()).map(|i| herm(2, i as u64 + 1)).collect();
        let h = HermitianField::new(&g, vals).unwrap();
        let r = hermitian_to_real(&h);
        let back = real_to_hermitian(&r).unwrap();
        for i in 0..g.len() {
            let lhs = r.at(i).determinant();
            let rhs = 16.0 * h.at(i).determinant().norm_sqr();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300));
            assert!((back.at(i) - h.at(i)).iter().all(|z| z.norm() < 1e-15));
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let g = GridSpec::torus2d(4).unwrap();
        let bad = DMatrix::from_element(1, 1, Complex::new(1.0, 0.3));
        assert!(matches!(
            HermitianField::new(&g, vec![bad; 16]),
            Err(CoreError::NotHermitian { .. })
        ));
    }

    #[test]
    fn complex_hessian_of_sine_is_quarter_laplacian() {
        let g = GridSpec::torus2d(16).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * PI * x[0]).sin());
        let c = complex_hessian(&f).unwrap();
        for i in 0..g.len() {
            let x = g.coords(i)[0];
            let expected = -PI * PI * (2.0 * PI * x).sin();
            assert!((c.at(i)[(0, 0)].re - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn complex_hessian_matches_j_projection() {
        let g = GridSpec::torus4d(8).unwrap();
        let tau = 2.0 * PI;
        let f = ScalarField::from_fn(&g, |x| {
            (tau * (x[0] + 2.0 * x[3])).sin() + (tau * (x[1] - x[2])).cos() * (tau * x[0]).cos()
        });
        let hess = real_hessian(&f).unwrap();
        let lhs = hermitian_to_real(&complex_hessian(&f).unwrap());
        let rhs = hess.project_11();
        let diff = lhs.sub(&rhs).unwrap().sup_norm();
        assert!(diff <= 1e-10 * hess.sup_norm(), "diff {diff}");
    }

    #[test]
    fn trace_pair_of_metric_with_itself_is_dimension() {
        let g = GridSpec::torus4d(4).unwrap();
        let m = Metric::reference(&g).field().scale(3.0);
        let metric = Metric::new(m.clone()).unwrap();
        let t = pointwise_trace_pair(&metric, &m, &m).unwrap();
        assert!(t.values().iter().all(|v| (v - 4.0).abs() < 1e-14));
        assert!((riemannian_volume(&metric).total() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn indefinite_metric_rejected() {
        let g = GridSpec::torus2d(4).unwrap();
        let m = SymTensorField::identity(&g).scale(-1.0);
        assert!(matches!(Metric::new(m), Err(CoreError::Singular { .. })));
    }

    #[test]
    fn sphere_hessian_trace_is_laplace_beltrami() {
        let g = GridSpec::sphere(32).unwrap();
        let f = ScalarField::from_fn(&g, |c| c[0].cos());
        let h = real_hessian(&f).unwrap();
        for i in 0..g.len() {
            let t = g.axis()[i];
            assert!((h.at(i).trace() + 2.0 * t.cos()).abs() < 1e-10);
        }
    }
}
