//! Seeded random test data: smooth potentials, tangent directions and densities.
//!
//! Torus fields are short trigonometric sums with wavenumbers in `[−2, 2]^d`;
//! sphere fields are axisymmetric Legendre series. All generators draw from a
//! caller-owned `ChaCha8Rng`, so a seed fixes every sample.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::Density;
use crate::error::Result;
use crate::grid::{Grid, ScalarField, Topology};
use crate::kahler::{nabla11, KahlerPotential};
use crate::tensor::min_eigenvalue;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const MODES: usize = 6;
const KMAX: i32 = 2;
const LMAX: usize = 6;

/// `Σ_l a_l P_l(cos θ)` on an axisymmetric grid.
pub fn legendre_series(grid: &Grid, coeffs: &[f64]) -> ScalarField {
    ScalarField::from_fn(grid, |x| {
        let c = x[0].cos();
        let (mut p0, mut p1) = (1.0, c);
        let mut sum = 0.0;
        for (l, a) in coeffs.iter().enumerate() {
            let p = match l {
                0 => 1.0,
                1 => c,
                _ => {
                    let lf = l as f64;
                    let p2 = ((2.0 * lf - 1.0) * c * p1 - (lf - 1.0) * p0) / lf;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            sum += a * p;
        }
        sum
    })
}

fn random_trig(grid: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let d = grid.topology().coordinate_count();
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..MODES)
        .map(|_| {
            let k = loop {
                let k: Vec<i32> = (0..d).map(|_| rng.gen_range(-KMAX..=KMAX)).collect();
                if k.iter().any(|&v| v != 0) {
                    break k;
                }
            };
            let k = k.into_iter().map(|v| 2.0 * PI * v as f64).collect();
            (k, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    ScalarField::from_fn(grid, |x| {
        terms
            .iter()
            .map(|(k, a, b)| {
                let arg: f64 = k.iter().zip(x).map(|(ki, xi)| ki * xi).sum();
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    })
}

/// A random smooth, mean-zero field with unit sup norm.
pub fn random_field(grid: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let f = match grid.topology() {
        Topology::SphereAxisym => {
            let coeffs: Vec<f64> = (0..=LMAX)
                .map(|l| if l == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) / l as f64 })
                .collect();
            legendre_series(grid, &coeffs)
        }
        _ => random_trig(grid, rng),
    };
    let m = f.mean();
    let f = f.map(|v| v - m);
    let s = f.sup_norm();
    if s > 0.0 {
        f.scale(1.0 / s)
    } else {
        f
    }
}

/// A random tangent direction `ν`.
pub fn random_tangent(grid: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    random_field(grid, rng)
}

/// A random potential whose `∇^{1,1}φ` has eigenvalues of modulus at most
/// `strength < 1`, so `g₀ + ∇^{1,1}φ` is safely positive.
pub fn random_potential(grid: &Grid, rng: &mut ChaCha8Rng, strength: f64) -> Result<KahlerPotential> {
    let f = random_field(grid, rng);
    let h = nabla11(&f)?;
    let top = h
        .values()
        .iter()
        .map(|m| min_eigenvalue(m).abs().max(min_eigenvalue(&(-m)).abs()))
        .fold(0.0, f64::max);
    let phi = if top > 0.0 { f.scale(strength / top) } else { f };
    KahlerPotential::new(phi)
}

/// A positive density `∝ exp(spread · f)` with random smooth `f`, normalized
/// to the grid volume.
pub fn random_density(grid: &Grid, rng: &mut ChaCha8Rng, spread: f64) -> Result<Density> {
    let f = random_field(grid, rng);
    let ratio = f.values().iter().map(|v| (spread * v).exp()).collect();
    Density::new(grid, ratio)?.normalized(grid.volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn same_seed_same_sample() {
        let g = GridSpec::torus2d(16).unwrap();
        let a = random_field(&g, &mut rng(3));
        let b = random_field(&g, &mut rng(3));
        assert_eq!(a.values(), b.values());
        assert!(a.mean().abs() < 1e-14);
    }

    #[test]
    fn legendre_matches_closed_forms() {
        let g = GridSpec::sphere(16).unwrap();
        let f = legendre_series(&g, &[0.0, 0.0, 0.0, 1.0]);
        for (i, v) in f.values().iter().enumerate() {
            let c = g.coords(i)[0].cos();
            assert!((v - 0.5 * (5.0 * c * c * c - 3.0 * c)).abs() < 1e-14);
        }
    }

    #[test]
    fn potentials_are_positive_on_all_topologies() {
        let mut r = rng(11);
        for g in [
            GridSpec::torus2d(16).unwrap(),
            GridSpec::torus4d(8).unwrap(),
            GridSpec::sphere(32).unwrap(),
        ] {
            for _ in 0..5 {
                let p = random_potential(&g, &mut r, 0.5).unwrap();
                let lo = p.metric().volume_ratio().iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(lo > 0.0);
            }
        }
    }

    #[test]
    fn densities_have_grid_mass() {
        let g = GridSpec::sphere(32).unwrap();
        let mu = random_density(&g, &mut rng(5), 1.0).unwrap();
        assert!((mu.total() - g.volume()).abs() < 1e-12 * g.volume());
    }
}
