//! End-to-end acceptance runs. Each test prints one PASS/FAIL line, written
//! straight to stderr so it shows without `--nocapture`.

use std::io::Write;

use kahler_core::grid::{Grid, GridSpec};
use kahler_core::krf::FlowControls;
use kahler_core::report::Report;
use kahler_core::suite::{self, SuiteOptions};

fn announce(id: u32, title: &str, reports: &[Report], detail: &str) {
    let failed: Vec<&Report> = reports.iter().filter(|r| !r.pass).collect();
    let verdict = if failed.is_empty() && !reports.is_empty() { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "{verdict} criterion {id:>2}: {title} ({} checks, {} failed){detail}",
        reports.len(),
        failed.len()
    );
    for r in failed.iter().take(5) {
        let _ = writeln!(
            err,
            "      {}: lhs {:e} rhs {:e} bound {:e}",
            r.check_name, r.lhs, r.rhs, r.bound
        );
    }
    assert!(failed.is_empty() && !reports.is_empty(), "criterion {id} failed");
}

fn torus2d() -> Grid {
    GridSpec::torus2d(64).unwrap()
}

fn torus4d() -> Grid {
    GridSpec::torus4d(12).unwrap()
}

fn opts(seed: u64, count: usize) -> SuiteOptions {
    SuiteOptions {
        seed,
        count,
        tol: None,
    }
}

#[test]
fn criterion_01_isometric_embedding() {
    let mut reports = suite::isometric_embedding(&torus2d(), &opts(1, 20)).unwrap();
    reports.extend(suite::isometric_embedding(&torus4d(), &opts(2, 20)).unwrap());
    announce(1, "ambient pairing is twice the Calabi pairing", &reports, "");
}

#[test]
fn criterion_02_trace_pairing() {
    let mut reports = suite::trace_pairing(&torus2d(), &opts(1, 20)).unwrap();
    reports.extend(suite::trace_pairing(&torus4d(), &opts(2, 20)).unwrap());
    announce(2, "trace pairing and conformal norm fraction", &reports, "");
}

#[test]
fn criterion_03_conformal_angle() {
    let mut reports = suite::conformal_angle_suite(&torus2d(), &opts(3, 10)).unwrap();
    reports.extend(suite::conformal_angle_suite(&torus4d(), &opts(4, 10)).unwrap());
    announce(3, "angle to conformal directions is 0 and pi/4", &reports, "");
}

#[test]
fn criterion_04_second_fundamental_form() {
    let mut reports = suite::second_fundamental_suite(&torus2d(), &opts(5, 20)).unwrap();
    reports.extend(suite::second_fundamental_suite(&torus4d(), &opts(6, 20)).unwrap());
    announce(4, "second fundamental form trace pairing is negative", &reports, "");
}

#[test]
fn criterion_05_volume_form_geodesics() {
    let mut reports = suite::calabi_geodesic_suite(&torus2d(), &opts(7, 20)).unwrap();
    reports.extend(suite::calabi_geodesic_suite(&GridSpec::sphere(128).unwrap(), &opts(8, 20)).unwrap());
    announce(5, "closed-form geodesics of volume forms", &reports, "");
}

#[test]
fn criterion_06_equivalence_bounds() {
    let mut reports = suite::equivalence_suite(&torus2d(), &opts(9, 100)).unwrap();
    let bumps = suite::bump_family_suite(&GridSpec::torus2d(256).unwrap(), &[1e-1, 1e-2, 1e-3, 1e-4], 1.10).unwrap();
    let best = bumps.last().map(|r| r.rhs).unwrap_or(0.0);
    reports.extend(bumps);
    announce(
        6,
        "intrinsic and extrinsic volume distances are equivalent",
        &reports,
        &format!(", best bump ratio {best:.4} vs {:.4}", suite::EQUIVALENCE_BOUND),
    );
}

#[test]
fn criterion_07_distance_chain() {
    let mut reports = suite::theorem_chain_suite(&torus2d(), &opts(10, 20)).unwrap();
    reports.extend(suite::theorem_chain_suite(&GridSpec::torus4d(8).unwrap(), &opts(11, 20)).unwrap());
    announce(7, "computable chain between Calabi and ambient distances", &reports, "");
}

#[test]
fn criterion_08_geodesics_leave_level_sets() {
    let mut reports = suite::intersection_suite(&torus2d(), &opts(12, 20)).unwrap();
    reports.extend(suite::intersection_suite(&GridSpec::torus4d(8).unwrap(), &opts(13, 10)).unwrap());
    announce(8, "geodesics leave the fixed-volume level sets", &reports, "");
}

#[test]
fn criterion_09_completion() {
    let mut reports = suite::completion_suite(&torus2d(), &opts(14, 5)).unwrap();
    reports.extend(suite::completion_suite(&GridSpec::sphere(128).unwrap(), &opts(15, 5)).unwrap());
    announce(9, "L1 completion criteria and boundary rays", &reports, "");
}

#[test]
fn criterion_10_kahler_ricci_flow() {
    let grid = GridSpec::sphere(256).unwrap();
    let controls = FlowControls {
        t_end: 30.0,
        dt0: 1e-3,
        ..Default::default()
    };
    let (reports, runs) = suite::flow_suite(&grid, &opts(16, 0), controls, 0.05).unwrap();
    let rates: Vec<String> = runs
        .iter()
        .map(|r| format!("{} {:.3}", r.label, r.rate.unwrap_or(f64::NAN)))
        .collect();
    announce(
        10,
        "Kähler–Ricci flow on the sphere",
        &reports,
        &format!(", rates: {}", rates.join(", ")),
    );
}
