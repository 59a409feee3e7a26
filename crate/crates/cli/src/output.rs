//! Artifacts: `summary.json`, `summary.txt`, and the command's CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use kahler_core::io::{write_scalar_field, write_table};
use kahler_core::report::{all_pass, Report};

use crate::commands::Outcome;
use crate::config::RunConfig;
use crate::Failure;

fn unwritable(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("cannot write {}: {e}", path.display()))
}

/// Creates the output directory up front so a bad path fails before any work.
pub fn prepare(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| unwritable(dir, e))?;
    let probe = dir.join(".kahler-lab-write-test");
    fs::write(&probe, b"").map_err(|e| unwritable(dir, e))?;
    let _ = fs::remove_file(probe);
    Ok(())
}

pub fn summary_text(cfg: &RunConfig, outcome: &Outcome) -> String {
    let reports = &outcome.reports;
    let failed = reports.iter().filter(|r| !r.pass).count();
    let mut s = String::new();
    let _ = writeln!(s, "kahler-lab {}", cfg.command);
    let _ = writeln!(s, "{:<17}{}", "grid", cfg.grid_label());
    let _ = writeln!(s, "{:<17}{}", "seed", cfg.seed);
    for (k, v) in &outcome.notes {
        let _ = writeln!(s, "{k:<17}{v}");
    }
    let _ = writeln!(s, "{:<17}{} ({failed} failed)", "checks", reports.len());
    let _ = writeln!(s, "{:<17}{}", "result", if all_pass(reports) { "PASS" } else { "FAIL" });
    let _ = writeln!(s);
    for r in reports {
        let _ = writeln!(s, "{}", line(r));
    }
    s
}

fn line(r: &Report) -> String {
    format!(
        "{}  {}  lhs={:.6e} rhs={:.6e} bound={:.3e}",
        if r.pass { "ok  " } else { "FAIL" },
        r.check_name,
        r.lhs,
        r.rhs,
        r.bound
    )
}

pub fn write_all(cfg: &RunConfig, outcome: &Outcome) -> Result<(), Failure> {
    let dir = &cfg.out;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: kahler_core::error::CoreError| unwritable(&path, e)
    };
    let json = serde_json::to_string_pretty(&outcome.reports).map_err(|e| unwritable(dir, e))? + "\n";
    let p = dir.join("summary.json");
    fs::write(&p, json).map_err(|e| unwritable(&p, e))?;
    let p = dir.join("summary.txt");
    fs::write(&p, summary_text(cfg, outcome)).map_err(|e| unwritable(&p, e))?;
    for t in &outcome.tables {
        let p = dir.join(t.file);
        let header: Vec<&str> = t.header.iter().map(String::as_str).collect();
        write_table(&p, &header, &t.rows).map_err(io(&p))?;
    }
    for (name, f) in &outcome.fields {
        let p = dir.join(name);
        write_scalar_field(&p, f).map_err(io(&p))?;
    }
    if let Some(traj) = &outcome.trajectory {
        let p = dir.join("trajectory.csv");
        traj.write_csv(&p).map_err(io(&p))?;
    }
    Ok(())
}
