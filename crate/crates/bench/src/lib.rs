//! Shared fixtures for the benchmarks: seeded inputs on fixed grids, so every
//! run times the same work.

use kahler_core::density::Density;
use kahler_core::grid::{Grid, GridSpec, ScalarField};
use kahler_core::kahler::KahlerPotential;
use kahler_core::krf::SymmetricSphereMetric;
use kahler_core::sampling::{random_density, random_potential, random_tangent, rng};

pub const SEED: u64 = 42;

pub fn torus2d() -> Grid {
    GridSpec::torus2d(64).expect("valid grid")
}

pub fn torus4d() -> Grid {
    GridSpec::torus4d(12).expect("valid grid")
}

pub fn sphere(n: usize) -> Grid {
    GridSpec::sphere(n).expect("valid grid")
}

/// A potential and a tangent direction.
pub fn potential_and_tangent(grid: &Grid) -> (KahlerPotential, ScalarField) {
    let mut r = rng(SEED);
    let phi = random_potential(grid, &mut r, 0.5).expect("positive potential");
    (phi, random_tangent(grid, &mut r))
}

pub fn density_pair(grid: &Grid) -> (Density, Density) {
    let mut r = rng(SEED);
    (
        random_density(grid, &mut r, 1.0).expect("density"),
        random_density(grid, &mut r, 1.0).expect("density"),
    )
}

pub fn flow_start(grid: &Grid) -> SymmetricSphereMetric {
    SymmetricSphereMetric::mode(grid, 2, 0.05).expect("small perturbation")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let g = GridSpec::torus2d(16).unwrap();
        let (phi, nu) = potential_and_tangent(&g);
        assert_eq!(phi.grid().len(), nu.values().len());
        let (a, b) = density_pair(&sphere(64));
        assert!((a.total() - b.total()).abs() < 1e-12);
    }
}
