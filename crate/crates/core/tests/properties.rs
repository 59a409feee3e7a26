//! Invariants checked over seeded random inputs. Each case draws a seed and
//! builds its fields from it, so failures shrink to a reproducible seed.

use proptest::prelude::*;

use kahler_core::density::{
    dtilde_v_distance, dv_distance, gtilde_inner, phi_differential, phi_inverse, phi_map, tilv_geodesic,
    QuadraticCrossing,
};
use kahler_core::ebin::{ebin_geodesic, ebin_inner, volume_polynomial};
use kahler_core::grid::{Grid, GridSpec};
use kahler_core::kahler::{calabi_inner, nabla11, potential_to_metric, KahlerPotential};
use kahler_core::sampling::{random_density, random_field, random_potential, random_tangent, rng};
use kahler_core::suite::EQUIVALENCE_BOUND;
use kahler_core::tensor::Metric;

fn torus() -> Grid {
    GridSpec::torus2d(16).unwrap()
}

fn grids() -> Vec<Grid> {
    vec![torus(), GridSpec::torus4d(6).unwrap(), GridSpec::sphere(32).unwrap()]
}

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn potential_to_metric_is_affine(seed in any::<u64>(), s in -0.5f64..0.5) {
        let g = torus();
        let mut r = rng(seed);
        let phi = random_potential(&g, &mut r, 0.3).unwrap();
        let psi = random_potential(&g, &mut r, 0.3).unwrap();
        let mixed = phi.phi().add(&psi.phi().scale(s)).unwrap();
        let lhs = potential_to_metric(&mixed).unwrap();
        let rhs = phi.metric().field().add(&nabla11(psi.phi()).unwrap().scale(s)).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn nabla11_is_j_invariant(seed in any::<u64>()) {
        for g in grids().into_iter().filter(|g| g.topology().is_torus()) {
            let h = nabla11(&random_tangent(&g, &mut rng(seed))).unwrap();
            prop_assert!(h.j_defect() <= 1e-12 * h.sup_norm().max(1.0));
        }
    }

    #[test]
    fn square_root_map_is_an_isometry(seed in any::<u64>()) {
        for g in grids() {
            let mut r = rng(seed);
            let mu = random_density(&g, &mut r, 1.0).unwrap();
            let a = random_field(&g, &mut r);
            let back = phi_inverse(&phi_map(&mu));
            for (x, y) in back.ratio().iter().zip(mu.ratio()) {
                prop_assert!((x - y).abs() <= 1e-14 * y.abs());
            }
            let da = phi_differential(&mu, &a).unwrap();
            let lhs = gtilde_inner(&mu, &a, &a).unwrap();
            let rhs = da.mul(&da).unwrap().integral();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }
    }

    #[test]
    fn volume_distance_is_a_metric(seed in any::<u64>()) {
        let g = GridSpec::sphere(64).unwrap();
        let mut r = rng(seed);
        let a = random_density(&g, &mut r, 1.5).unwrap();
        let b = random_density(&g, &mut r, 1.5).unwrap();
        let c = random_density(&g, &mut r, 1.5).unwrap();
        let ab = dv_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, dv_distance(&b, &a).unwrap());
        prop_assert_eq!(dv_distance(&a, &a).unwrap(), 0.0);
        prop_assert!(ab <= dv_distance(&a, &c).unwrap() + dv_distance(&c, &b).unwrap() + 1e-14);
        let dt = dtilde_v_distance(&a, &b).unwrap();
        prop_assert!(dt <= ab && ab < EQUIVALENCE_BOUND * dt);
    }

    #[test]
    fn quadratic_roots_solve_the_quadratic(c1 in -5.0f64..5.0, c2 in 0.1f64..5.0, target in 1.0f64..3.0) {
        let q = QuadraticCrossing::solve([1.0, c1, c2], target, 1e-12);
        prop_assert!(!q.roots.is_empty());
        for t in &q.roots {
            let v = 1.0 + c1 * t + c2 * t * t;
            prop_assert!((v - target).abs() <= 1e-12 * (1.0 + c2 * t * t + (c1 * t).abs()));
        }
    }

    #[test]
    fn ambient_geodesic_mass_is_quadratic(seed in any::<u64>(), t in 0.0f64..1.0) {
        let g = GridSpec::sphere(64).unwrap();
        let mut r = rng(seed);
        let mu = random_density(&g, &mut r, 1.0).unwrap();
        let a = random_field(&g, &mut r).mul(&mu.ratio_field()).unwrap().scale(0.5);
        let c1 = a.integral();
        let c2 = 0.25 * a.mul(&a).unwrap().values().iter().zip(mu.ratio()).zip(g.weights())
            .map(|((v, f), w)| w * v / f).sum::<f64>();
        let mass = tilv_geodesic(&mu, &a, t).unwrap().total();
        prop_assert!((mass - (mu.total() + c1 * t + c2 * t * t)).abs() < 1e-12 * mu.total());
    }

    #[test]
    fn calabi_pairing_is_symmetric_and_positive(seed in any::<u64>()) {
        let g = torus();
        let mut r = rng(seed);
        let phi = random_potential(&g, &mut r, 0.5).unwrap();
        let nu = random_tangent(&g, &mut r);
        let eta = random_tangent(&g, &mut r);
        let a = calabi_inner(&phi, &nu, &eta).unwrap();
        let b = calabi_inner(&phi, &eta, &nu).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!(calabi_inner(&phi, &nu, &nu).unwrap() > 0.0);
    }

    #[test]
    fn metric_geodesic_volume_matches_closed_form(seed in any::<u64>()) {
        let g = torus();
        let mut r = rng(seed);
        let phi = random_potential(&g, &mut r, 0.3).unwrap();
        let h = nabla11(&random_tangent(&g, &mut r)).unwrap();
        let norm = ebin_inner(phi.metric(), &h, &h).unwrap().sqrt();
        let h = h.scale(0.1 / norm);
        let path = ebin_geodesic(phi.metric().field(), &h, 1.0, 40).unwrap();
        let [c0, c1, c2] = volume_polynomial(phi.metric(), &h).unwrap();
        let end = Metric::new(path.last().clone()).unwrap().volume();
        prop_assert!((end - (c0 + c1 + c2)).abs() < 1e-10 * c0);
    }
}

#[test]
fn reference_potential_has_reference_volume() {
    for g in grids() {
        let p = KahlerPotential::reference(&g);
        assert!((p.volume() - g.volume()).abs() < 1e-12 * g.volume());
    }
}
