use std::fs;

use kahler_core::ebin::ebin_geodesic;
use kahler_core::error::CoreError;
use kahler_core::grid::GridSpec;
use kahler_core::io::{read_metric_path, read_scalar_field, write_metric_path, write_scalar_field};
use kahler_core::kahler::nabla11;
use kahler_core::sampling::{random_field, random_potential, rng};

#[test]
fn metric_path_round_trips_bit_for_bit() {
    let g = GridSpec::torus2d(8).unwrap();
    let mut r = rng(9);
    let phi = random_potential(&g, &mut r, 0.3).unwrap();
    let h = nabla11(&random_field(&g, &mut r)).unwrap().scale(1e-3);
    let path = ebin_geodesic(phi.metric().field(), &h, 1.0, 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_metric_path(dir.path(), &path).unwrap();
    let back = read_metric_path(dir.path()).unwrap();
    assert_eq!(back.times(), path.times());
    assert_eq!(back.generator(), path.generator());
    for (a, b) in back.metrics().iter().zip(path.metrics()) {
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!(x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}

#[test]
fn sidecar_with_future_convention_is_rejected() {
    let g = GridSpec::sphere(16).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.csv");
    write_scalar_field(&p, &random_field(&g, &mut rng(1))).unwrap();
    let side = p.with_extension("json");
    let text = fs::read_to_string(&side).unwrap().replace("\"convention_version\": 1", "\"convention_version\": 2");
    fs::write(&side, text).unwrap();
    assert!(matches!(read_scalar_field(&p), Err(CoreError::Parse(_))));
}

#[test]
fn truncated_field_is_rejected() {
    let g = GridSpec::torus2d(4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.csv");
    write_scalar_field(&p, &random_field(&g, &mut rng(2))).unwrap();
    let text = fs::read_to_string(&p).unwrap();
    let cut: Vec<&str> = text.lines().take(5).collect();
    fs::write(&p, cut.join("\n")).unwrap();
    assert!(read_scalar_field(&p).is_err());
}
