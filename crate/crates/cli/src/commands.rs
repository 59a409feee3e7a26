//! The five commands. Each returns its reports and the tables to write.

use kahler_core::density::{
    bump_pair, dtilde_v_distance, dv_distance, dv_distance_with_reference, equivalence_check, CalabiGeodesic,
    Density,
};
use kahler_core::ebin::path_length_ebin;
use kahler_core::error::Result;
use kahler_core::grid::{Grid, ScalarField};
use kahler_core::kahler::{calabi_lift, default_trial_paths, equivalence_chain_check};
use kahler_core::krf::{
    convergence_report_with, krf_integrate, FlowControls, FlowStatus, FlowTrajectory,
    SymmetricSphereMetric,
};
use kahler_core::report::Report;
use kahler_core::sampling::{random_density, random_potential, rng};
use kahler_core::suite::{density_pairs, run_suite, SuiteOptions};

use crate::config::{InitialData, PairKind, RunConfig};

/// A CSV table: header and numeric rows.
pub struct Table {
    pub file: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Outcome {
    pub reports: Vec<Report>,
    pub tables: Vec<Table>,
    /// Extra `name value` lines for the human-readable summary.
    pub notes: Vec<(String, String)>,
    /// Fields written next to the tables.
    pub fields: Vec<(&'static str, ScalarField)>,
    /// Written as `trajectory.csv`.
    pub trajectory: Option<FlowTrajectory>,
}

impl Outcome {
    fn new(reports: Vec<Report>) -> Self {
        Self {
            reports,
            tables: Vec::new(),
            notes: Vec::new(),
            fields: Vec::new(),
            trajectory: None,
        }
    }
}

fn tag(reports: Vec<Report>, label: &str) -> Vec<Report> {
    reports
        .into_iter()
        .map(|mut r| {
            r.check_name = format!("{} [{label}]", r.check_name);
            r
        })
        .collect()
}

fn opts(cfg: &RunConfig) -> SuiteOptions {
    SuiteOptions {
        seed: cfg.seed,
        count: cfg.count,
        tol: cfg.tol,
    }
}

/// A few fixed nodes whose values make a readable time series.
pub fn probe_nodes(grid: &Grid) -> Vec<usize> {
    let mut nodes = vec![0, grid.len() / 4, grid.len() / 2];
    nodes.dedup();
    nodes
}

fn probe_header(grid: &Grid, leading: &[&str]) -> Vec<String> {
    leading
        .iter()
        .map(|s| s.to_string())
        .chain(probe_nodes(grid).into_iter().map(|i| format!("F_node{i}")))
        .collect()
}

pub fn verify(cfg: &RunConfig, grid: &Grid) -> Result<Outcome> {
    let reports = run_suite(cfg.suite, grid, &opts(cfg))?;
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i as f64, r.lhs, r.rhs, r.bound, r.pass as u8 as f64])
        .collect();
    let mut out = Outcome::new(reports);
    out.tables.push(Table {
        file: "checks.csv",
        header: ["check", "lhs", "rhs", "bound", "pass"].map(String::from).to_vec(),
        rows,
    });
    Ok(out)
}

/// Bump floors spread geometrically over `[1e-4, 1e-1]`.
fn bump_floors(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![1e-2];
    }
    (0..count)
        .map(|k| 0.1 * 10f64.powf(-3.0 * k as f64 / (count - 1) as f64))
        .collect()
}

fn pairs(cfg: &RunConfig, grid: &Grid, count: usize) -> Result<Vec<(Density, Density)>> {
    match cfg.pair {
        PairKind::Random => density_pairs(grid, cfg.seed, count),
        PairKind::Bump => bump_floors(count).into_iter().map(|e| bump_pair(grid, e)).collect(),
    }
}

pub fn geodesic(cfg: &RunConfig, grid: &Grid) -> Result<Outcome> {
    let tol = |d: f64| cfg.tol.unwrap_or(d);
    let (mu1, mu2) = pairs(cfg, grid, 1)?.remove(0);
    let geo = CalabiGeodesic::new(&mu1, &mu2)?;
    let len = geo.length();
    let samples = 100;
    let probes = probe_nodes(grid);
    let mut rows = Vec::with_capacity(samples + 1);
    let (mut residual, mut speed_gap, mut mass_gap) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=samples {
        let t = len * k as f64 / samples as f64;
        let mu = geo.at(t);
        let (res, speed) = (geo.ode_residual(t), geo.speed(t));
        residual = residual.max(res);
        speed_gap = speed_gap.max((speed - 1.0).abs());
        mass_gap = mass_gap.max((mu.total() - grid.volume()).abs() / grid.volume());
        let mut row = vec![t, mu.total(), speed, res];
        row.extend(probes.iter().map(|&i| mu.ratio()[i]));
        rows.push(row);
    }
    let end = geo.at(len);
    let end_gap = end.ratio_field().sub(&mu2.ratio_field())?.sup_norm() / mu2.ratio_field().sup_norm();
    let rho = random_density(grid, &mut rng(cfg.seed ^ 0x5c), 0.5)?;
    let reports = vec![
        Report::at_most("geodesic equation residual", residual, 0.0, tol(1e-8)),
        Report::at_most("deviation from unit speed", speed_gap, 0.0, tol(1e-8)),
        Report::at_most("relative mass drift", mass_gap, 0.0, tol(1e-10)),
        Report::at_most("endpoint reached", end_gap, 0.0, tol(1e-10)),
        Report::close(
            "length against distance formula",
            len,
            dv_distance_with_reference(&mu1, &mu2, &rho)?,
            tol(1e-10),
        ),
    ];
    let mut out = Outcome::new(reports);
    out.notes.push(("length".into(), format!("{len:.12e}")));
    out.tables.push(Table {
        file: "geodesic.csv",
        header: probe_header(grid, &["t", "mass", "speed", "residual"]),
        rows,
    });
    out.fields.push(("start.csv", mu1.ratio_field()));
    out.fields.push(("end.csv", mu2.ratio_field()));
    Ok(out)
}

pub fn distance(cfg: &RunConfig, grid: &Grid) -> Result<Outcome> {
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (j, (mu1, mu2)) in pairs(cfg, grid, cfg.count)?.iter().enumerate() {
        let dv = dv_distance(mu1, mu2)?;
        let dt = dtilde_v_distance(mu1, mu2)?;
        rows.push(vec![j as f64, dv, dt, dv / dt, mu1.l1_distance(mu2)?]);
        reports.extend(tag(equivalence_check(mu1, mu2)?, &format!("pair {j}")));
    }
    let best = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    let mut out = Outcome::new(reports);
    out.notes.push(("largest ratio".into(), format!("{best:.6}")));
    out.tables.push(Table {
        file: "distances.csv",
        header: ["pair", "dv", "dv_extrinsic", "ratio", "l1"].map(String::from).to_vec(),
        rows,
    });
    Ok(out)
}

pub fn equivalence(cfg: &RunConfig, grid: &Grid) -> Result<Outcome> {
    let tol = cfg.tol.unwrap_or(1e-8);
    let n = grid.complex_dim() as f64;
    let mut r = rng(cfg.seed);
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for j in 0..cfg.count {
        let p1 = random_potential(grid, &mut r, 0.4)?;
        let p2 = random_potential(grid, &mut r, 0.4)?;
        let paths = default_trial_paths(&p1, &p2)?;
        let best = paths
            .iter()
            .map(path_length_ebin)
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let (mu1, mu2) = (p1.volume_form(), p2.volume_form());
        let lc = if n == 1.0 {
            calabi_lift(&p1, &p2, 65)?.calabi_length()?
        } else {
            f64::NAN
        };
        rows.push(vec![
            j as f64,
            dv_distance(&mu1, &mu2)?,
            dtilde_v_distance(&mu1, &mu2)?,
            (0.5 * n).sqrt() * best,
            lc,
        ]);
        reports.extend(tag(equivalence_chain_check(&p1, &p2, &paths, tol)?, &format!("pair {j}")));
    }
    let mut out = Outcome::new(reports);
    out.tables.push(Table {
        file: "chain.csv",
        header: ["pair", "dv", "dv_extrinsic", "scaled_trial_length", "calabi_length"]
            .map(String::from)
            .to_vec(),
        rows,
    });
    Ok(out)
}

pub fn flow(cfg: &RunConfig, grid: &Grid) -> Result<Outcome> {
    let initial = match cfg.initial {
        InitialData::Mode(l) => SymmetricSphereMetric::mode(grid, l, cfg.amplitude)?,
        InitialData::Random => SymmetricSphereMetric::random(grid, &mut rng(cfg.seed), cfg.amplitude)?,
    };
    let controls = FlowControls {
        t_end: cfg.t_end,
        dt0: cfg.dt0,
        ..Default::default()
    };
    let traj = krf_integrate(&initial, controls)?;
    let summary = convergence_report_with(&traj, &cfg.thresholds);
    let probes = probe_nodes(grid);
    let profile = traj
        .samples()
        .iter()
        .zip(traj.densities())
        .map(|(s, mu)| {
            let mut row = vec![s.t];
            row.extend(probes.iter().map(|&i| mu.ratio()[i]));
            row
        })
        .collect();
    let mut out = Outcome::new(summary.reports.clone());
    let status = match summary.status {
        FlowStatus::Converged => "converged",
        FlowStatus::Inconclusive => "inconclusive",
    };
    let fmt_opt = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:.6e}"));
    out.notes.extend([
        ("status".to_string(), status.to_string()),
        ("decay rate".into(), fmt_opt(summary.rate)),
        ("length".into(), format!("{:.10e}", summary.length)),
        ("length (direct)".into(), format!("{:.10e}", summary.length_direct)),
        ("tail bound".into(), fmt_opt(summary.tail_bound)),
        ("steps".into(), format!("{} ({} rejected)", traj.steps(), traj.rejected_steps())),
    ]);
    out.tables.push(Table {
        file: "profile.csv",
        header: probe_header(grid, &["t"]),
        rows: profile,
    });
    out.trajectory = Some(traj);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_floors_span_three_decades() {
        let f = bump_floors(4);
        assert_eq!(f.len(), 4);
        assert!((f[0] - 0.1).abs() < 1e-15 && (f[3] - 1e-4).abs() < 1e-15);
        assert_eq!(bump_floors(1), vec![1e-2]);
    }
}
