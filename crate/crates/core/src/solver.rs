//! Krylov solver for the curved Laplacians.

use crate::error::{CoreError, Result};
use crate::grid::pairwise_sum;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&terms)
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverSettings {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 500,
        }
    }
}

/// Right-preconditioned BiCGSTAB for `A x = b`, starting from zero.
///
/// Returns the solution and the number of iterations. The residual is
/// measured in the Euclidean norm of the node values.
pub fn bicgstab(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precondition: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    settings: SolverSettings,
) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let target = settings.rel_tol * b_norm;
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut residual = b_norm;
    for it in 1..=settings.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let y = precondition(&p);
        v = apply(&y);
        alpha = rho / dot(&r_hat, &v);
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        axpy(&mut x, alpha, &y);
        let s_norm = dot(&s, &s).sqrt();
        if s_norm <= target {
            return Ok((x, it));
        }
        let z = precondition(&s);
        let t = apply(&z);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        axpy(&mut x, omega, &z);
        r = s;
        axpy(&mut r, -omega, &t);
        residual = dot(&r, &r).sqrt();
        if residual <= target {
            return Ok((x, it));
        }
        if omega == 0.0 || !residual.is_finite() {
            break;
        }
    }
    Err(CoreError::SolverStalled {
        iterations: settings.max_iter,
        residual: residual / b_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_tridiagonal_system() {
        let n = 50;
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut v = 4.0 * x[i];
                    if i > 0 {
                        v -= 1.5 * x[i - 1];
                    }
                    if i + 1 < n {
                        v -= 0.5 * x[i + 1];
                    }
                    v
                })
                .collect()
        };
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = apply(&exact);
        let (x, _) = bicgstab(apply, |r| r.to_vec(), &b, SolverSettings::default()).unwrap();
        for (a, e) in x.iter().zip(&exact) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let (x, it) = bicgstab(|v| v.to_vec(), |v| v.to_vec(), &[0.0; 4], SolverSettings::default()).unwrap();
        assert_eq!(x, vec![0.0; 4]);
        assert_eq!(it, 0);
    }
}
