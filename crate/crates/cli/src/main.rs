//! `kahler-lab`: runs the verification suites, geodesics, distances and flows
//! of `kahler-core` and writes reports plus plot-ready CSV data.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for usage
//! or configuration errors, 3 when a computation aborts numerically.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kahler_core::error::CoreError;
use kahler_core::grid::GridSpec;
use kahler_core::report::all_pass;

use config::{Command, RunConfig, Setting, Settings};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("numerical abort: {0}")]
    Abort(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Abort(_) => 3,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        use CoreError::*;
        match e {
            NumericalAbort(_)
            | Positivity { .. }
            | Degenerate { .. }
            | Singular { .. }
            | SolverStalled { .. }
            | NegativeDensity { .. }
            | VanishingDensity { .. }
            | WrongMass { .. }
            | Normalization(_)
            | NotTangent { .. }
            | NotMeanZero { .. } => Failure::Abort(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kahler-lab", version, about = "Kähler metrics inside the space of Riemannian metrics, checked numerically")]
struct Cli {
    /// What to run (may also come from the config file).
    #[arg(value_enum)]
    command: Option<Command>,
    /// File of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid as `topology:resolution`: torus2d:16..256, torus4d:8..16, sphere:64..1024.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Override the per-check tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Suite group for `verify`: kahler, density, ebin, flow or all.
    #[arg(long)]
    suite: Option<String>,
    /// Pair family for `geodesic` and `distance`: random or bump.
    #[arg(long)]
    pair: Option<String>,
    /// Number of samples or pairs.
    #[arg(long)]
    count: Option<String>,
    /// Flow initial data: mode:L or random.
    #[arg(long)]
    initial: Option<String>,
    /// Flow initial perturbation size.
    #[arg(long)]
    amplitude: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// Initial flow time step.
    #[arg(long)]
    dt0: Option<String>,
    /// Flow verdict thresholds, e.g. curvature:1e-3,increment:1e-8,tail:1e-6.
    #[arg(long)]
    thresholds: Option<String>,
}

impl Cli {
    fn settings(&self) -> Result<Settings, Failure> {
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
                config::parse_file(&text, &path.display().to_string())?
            }
            None => Settings::new(),
        };
        let command = self.command.map(|c| c.name().to_string());
        let flags = [
            ("command", &command),
            ("grid", &self.grid),
            ("seed", &self.seed),
            ("tol", &self.tol),
            ("out", &self.out),
            ("suite", &self.suite),
            ("pair", &self.pair),
            ("count", &self.count),
            ("initial", &self.initial),
            ("amplitude", &self.amplitude),
            ("t_end", &self.t_end),
            ("dt0", &self.dt0),
            ("thresholds", &self.thresholds),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                let origin = if key == "command" {
                    "command".to_string()
                } else {
                    format!("--{}", key.replace('_', "-"))
                };
                s.insert(key.to_string(), Setting { value: v.clone(), origin });
            }
        }
        Ok(s)
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let cfg = RunConfig::from_settings(&cli.settings()?)?;
    output::prepare(&cfg.out)?;
    let grid = GridSpec::new(cfg.topology, cfg.resolution)?;
    let outcome = match cfg.command {
        Command::Verify => commands::verify(&cfg, &grid),
        Command::Geodesic => commands::geodesic(&cfg, &grid),
        Command::Distance => commands::distance(&cfg, &grid),
        Command::Flow => commands::flow(&cfg, &grid),
        Command::Equivalence => commands::equivalence(&cfg, &grid),
    }?;
    output::write_all(&cfg, &outcome)?;
    let pass = all_pass(&outcome.reports);
    let failed = outcome.reports.iter().filter(|r| !r.pass).count();
    println!(
        "{} {}: {} checks, {failed} failed -> {}",
        if pass { "PASS" } else { "FAIL" },
        cfg.command,
        outcome.reports.len(),
        cfg.out.display()
    );
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("kahler-lab: {f}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_map_to_abort() {
        let f: Failure = CoreError::NumericalAbort("step underflow".into()).into();
        assert_eq!(f.code(), 3);
        let f: Failure = CoreError::Positivity {
            node: 0,
            coords: vec![0.0],
            eigenvalue: -1.0,
        }
        .into();
        assert_eq!(f.code(), 3);
        let f: Failure = CoreError::Parse("x".into()).into();
        assert_eq!(f.code(), 2);
    }
}
