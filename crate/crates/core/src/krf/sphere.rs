//! Operators on S¹-invariant functions of the round unit sphere.
//!
//! Smooth axisymmetric functions are polynomials in `cos θ`, i.e. cosine series
//! in the colatitude. Differentiation goes through the discrete cosine
//! transform on the interior nodes, which keeps the poles regular without any
//! ghost extension and makes `Δ` exact on the polynomials the grid resolves.

use nalgebra::{DMatrix, DVector, LU};

use crate::grid::pairwise_sum;

pub(crate) struct SphereOps {
    laplacian: DMatrix<f64>,
    d_theta: DMatrix<f64>,
    d2_theta: DMatrix<f64>,
    gauge_lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    weights: Vec<f64>,
    volume: f64,
}

impl SphereOps {
    pub(crate) fn new(theta: &[f64], weights: &[f64]) -> Self {
        let n = theta.len();
        // analysis: f(θ_i) = Σ_k c_k cos(kθ_i)
        let analysis = DMatrix::from_fn(n, n, |k, i| {
            let c = 2.0 / n as f64 * (k as f64 * theta[i]).cos();
            if k == 0 {
                0.5 * c
            } else {
                c
            }
        });
        let synth = |f: &dyn Fn(f64, f64) -> f64| {
            DMatrix::from_fn(n, n, |i, k| f(theta[i], k as f64))
        };
        let lap_syn = synth(&|t, k| {
            -k * k * (k * t).cos() - k * t.cos() * (k * t).sin() / t.sin()
        });
        let d1_syn = synth(&|t, k| -k * (k * t).sin());
        let d2_syn = synth(&|t, k| -k * k * (k * t).cos());

        let laplacian = &lap_syn * &analysis;
        let volume = pairwise_sum(weights);
        let w = DVector::from_column_slice(weights);
        let ones = DVector::from_element(n, 1.0);
        let gauge = &laplacian + (&ones * w.transpose()) / volume;
        Self {
            laplacian,
            d_theta: &d1_syn * &analysis,
            d2_theta: &d2_syn * &analysis,
            gauge_lu: gauge.lu(),
            weights: weights.to_vec(),
            volume,
        }
    }

    fn apply(m: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
        (m * DVector::from_column_slice(f)).as_slice().to_vec()
    }

    /// Laplace–Beltrami operator `(1/sinθ) ∂_θ (sinθ ∂_θ)`.
    pub(crate) fn laplace_beltrami(&self, f: &[f64]) -> Vec<f64> {
        Self::apply(&self.laplacian, f)
    }

    pub(crate) fn laplacian_matrix(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    pub(crate) fn d_theta(&self, f: &[f64]) -> Vec<f64> {
        Self::apply(&self.d_theta, f)
    }

    pub(crate) fn d2_theta(&self, f: &[f64]) -> Vec<f64> {
        Self::apply(&self.d2_theta, f)
    }

    /// Mean-zero `u` with `Δ_LB u = rhs`; `rhs` must already integrate to zero.
    pub(crate) fn solve_laplace_beltrami(&self, rhs: &[f64]) -> Vec<f64> {
        let b = DVector::from_column_slice(rhs);
        let u = self
            .gauge_lu
            .solve(&b)
            .expect("gauge-fixed Laplacian is nonsingular");
        let mean = pairwise_sum(
            &u.iter()
                .zip(&self.weights)
                .map(|(a, w)| a * w)
                .collect::<Vec<_>>(),
        ) / self.volume;
        u.iter().map(|v| v - mean).collect()
    }
}
