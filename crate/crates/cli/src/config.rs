//! Run configuration: a flat `key = value` file, overridden by flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use kahler_core::grid::Topology;
use kahler_core::krf::Thresholds;
use kahler_core::suite::SuiteName;

use crate::Failure;

/// Keys accepted in a config file. Flags use the same names with `-` for `_`.
pub const KEYS: &[&str] = &[
    "command",
    "grid",
    "seed",
    "tol",
    "out",
    "suite",
    "pair",
    "count",
    "initial",
    "initial_mode",
    "amplitude",
    "t_end",
    "dt0",
    "thresholds",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Run a group of identity suites.
    Verify,
    /// Closed-form volume-form geodesic between a pair of forms.
    Geodesic,
    /// Intrinsic against extrinsic volume-form distances.
    Distance,
    /// Kähler–Ricci flow on the axisymmetric sphere.
    Flow,
    /// Distance chain between potentials and their metrics.
    Equivalence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Geodesic => "geodesic",
            Command::Distance => "distance",
            Command::Flow => "flow",
            Command::Equivalence => "equivalence",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Command::Verify,
            Command::Geodesic,
            Command::Distance,
            Command::Flow,
            Command::Equivalence,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Random,
    Bump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    Mode(usize),
    Random,
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialData::Mode(l) => write!(f, "mode:{l}"),
            InitialData::Random => f.write_str("random"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub topology: Topology,
    pub resolution: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub suite: SuiteName,
    pub pair: PairKind,
    pub count: usize,
    pub initial: InitialData,
    pub amplitude: f64,
    pub t_end: f64,
    pub dt0: f64,
    pub thresholds: Thresholds,
}

/// Supported resolutions per topology.
pub fn resolution_range(topology: Topology) -> (usize, usize) {
    match topology {
        Topology::Torus2d => (16, 256),
        Topology::Torus4d => (8, 16),
        Topology::SphereAxisym => (64, 1024),
    }
}

/// A raw value and where it came from, for error messages.
#[derive(Debug, Clone)]
pub struct Setting {
    pub value: String,
    pub origin: String,
}

pub type Settings = BTreeMap<String, Setting>;

fn canonical_key(key: &str) -> String {
    let key = key.trim().replace('-', "_");
    if key == "initial_mode" {
        "initial".into()
    } else {
        key
    }
}

/// Parses a config file. Blank lines and `#` comments are skipped; anything
/// else must be `key = value` with a known key.
pub fn parse_file(text: &str, name: &str) -> Result<Settings, Failure> {
    let mut out = Settings::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("{name}:{}", i + 1);
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::Usage(format!("{at}: expected `key = value`, found `{}`", raw.trim())));
        };
        let key = key.trim();
        if !KEYS.contains(&key.replace('-', "_").as_str()) {
            return Err(Failure::Usage(format!("{at}: unknown key `{key}` in `{}`", raw.trim())));
        }
        out.insert(
            canonical_key(key),
            Setting {
                value: value.trim().to_string(),
                origin: at,
            },
        );
    }
    Ok(out)
}

fn bad(s: &Setting, key: &str, why: impl fmt::Display) -> Failure {
    Failure::Usage(format!("{}: invalid {key} `{}`: {why}", s.origin, s.value))
}

fn number<T: std::str::FromStr>(s: &Setting, key: &str) -> Result<T, Failure>
where
    T::Err: fmt::Display,
{
    s.value.parse().map_err(|e| bad(s, key, e))
}

fn positive(s: &Setting, key: &str) -> Result<f64, Failure> {
    let v: f64 = number(s, key)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(s, key, "must be positive and finite"))
    }
}

fn parse_grid(s: &Setting) -> Result<(Topology, usize), Failure> {
    let (name, res) = s
        .value
        .split_once(':')
        .ok_or_else(|| bad(s, "grid", "expected `topology:resolution`, e.g. torus2d:64"))?;
    let topology = Topology::parse(name.trim()).map_err(|e| bad(s, "grid", e))?;
    let resolution: usize = res.trim().parse().map_err(|e| bad(s, "grid", e))?;
    let (lo, hi) = resolution_range(topology);
    if resolution < lo || resolution > hi {
        return Err(bad(s, "grid", format!("{topology} resolution must be in {lo}..={hi}")));
    }
    if topology.is_torus() && resolution % 2 != 0 {
        return Err(bad(s, "grid", "torus resolution must be even"));
    }
    Ok((topology, resolution))
}

fn parse_initial(s: &Setting) -> Result<InitialData, Failure> {
    if s.value == "random" {
        return Ok(InitialData::Random);
    }
    match s.value.split_once(':') {
        Some(("mode", l)) => match l.trim().parse::<usize>() {
            Ok(l) if l >= 1 => Ok(InitialData::Mode(l)),
            _ => Err(bad(s, "initial", "mode degree must be a positive integer")),
        },
        _ => Err(bad(s, "initial", "expected `mode:L` or `random`")),
    }
}

/// `curvature:1e-3,increment:1e-8,tail:1e-6`; omitted entries keep their defaults.
fn parse_thresholds(s: &Setting) -> Result<Thresholds, Failure> {
    let mut th = Thresholds::default();
    for item in s.value.split(',').map(str::trim).filter(|x| !x.is_empty()) {
        let (name, v) = item
            .split_once(':')
            .ok_or_else(|| bad(s, "thresholds", "expected `name:value` entries"))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|e| bad(s, "thresholds", e))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(s, "thresholds", "values must be positive"));
        }
        match name.trim() {
            "curvature" => th.curvature = v,
            "increment" => th.increment = v,
            "tail" => th.tail = v,
            other => return Err(bad(s, "thresholds", format!("unknown threshold `{other}`"))),
        }
    }
    Ok(th)
}

impl RunConfig {
    /// Builds a validated configuration from merged settings.
    pub fn from_settings(settings: &Settings) -> Result<Self, Failure> {
        let get = |k: &str| settings.get(k);
        let command = match get("command") {
            Some(s) => Command::parse(&s.value).ok_or_else(|| bad(s, "command", "expected verify, geodesic, distance, flow or equivalence"))?,
            None => return Err(Failure::Usage("no command given".into())),
        };
        let (topology, resolution) = match get("grid") {
            Some(s) => parse_grid(s)?,
            None if command == Command::Flow => (Topology::SphereAxisym, 256),
            None => (Topology::Torus2d, 64),
        };
        let suite = match get("suite") {
            Some(s) => SuiteName::parse(&s.value).map_err(|e| bad(s, "suite", e))?,
            None => SuiteName::Kahler,
        };
        let pair = match get("pair") {
            Some(s) => match s.value.as_str() {
                "random" => PairKind::Random,
                "bump" => PairKind::Bump,
                _ => return Err(bad(s, "pair", "expected `random` or `bump`")),
            },
            None => PairKind::Random,
        };
        let count = match get("count") {
            Some(s) => match number::<usize>(s, "count")? {
                0 => return Err(bad(s, "count", "must be at least 1")),
                c => c,
            },
            None => 20,
        };
        let cfg = RunConfig {
            command,
            topology,
            resolution,
            seed: get("seed").map(|s| number(s, "seed")).transpose()?.unwrap_or(0),
            tol: get("tol").map(|s| positive(s, "tol")).transpose()?,
            out: get("out").map(|s| PathBuf::from(&s.value)).unwrap_or_else(|| PathBuf::from("kahler-out")),
            suite,
            pair,
            count,
            initial: get("initial").map(parse_initial).transpose()?.unwrap_or(InitialData::Mode(1)),
            amplitude: get("amplitude").map(|s| positive(s, "amplitude")).transpose()?.unwrap_or(0.05),
            t_end: get("t_end").map(|s| positive(s, "t_end")).transpose()?.unwrap_or(30.0),
            dt0: get("dt0").map(|s| positive(s, "dt0")).transpose()?.unwrap_or(1e-3),
            thresholds: get("thresholds").map(parse_thresholds).transpose()?.unwrap_or_default(),
        };
        let needs_sphere = command == Command::Flow || (command == Command::Verify && suite == SuiteName::Flow);
        if needs_sphere && topology != Topology::SphereAxisym {
            return Err(Failure::Usage(format!(
                "the flow runs on the sphere only, got grid {topology}"
            )));
        }
        if command == Command::Flow && cfg.amplitude >= 0.5 {
            return Err(Failure::Usage("flow amplitude must be below 0.5".into()));
        }
        if cfg.dt0 > cfg.t_end {
            return Err(Failure::Usage("dt0 must not exceed t_end".into()));
        }
        Ok(cfg)
    }

    pub fn grid_label(&self) -> String {
        format!("{}:{}", self.topology, self.resolution)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flag(settings: &mut Settings, k: &str, v: &str) {
        settings.insert(
            k.into(),
            Setting {
                value: v.into(),
                origin: format!("--{k}"),
            },
        );
    }

    #[test]
    fn file_values_and_flag_override() {
        let mut s = parse_file("# flow run\ncommand = flow\ninitial_mode = mode:2\nt-end = 5\n\ndt0=0.01\n", "run.cfg").unwrap();
        flag(&mut s, "t_end", "7.5");
        let cfg = RunConfig::from_settings(&s).unwrap();
        assert_eq!(cfg.command, Command::Flow);
        assert_eq!(cfg.initial, InitialData::Mode(2));
        assert_eq!(cfg.t_end, 7.5);
        assert_eq!(cfg.dt0, 0.01);
        assert_eq!((cfg.topology, cfg.resolution), (Topology::SphereAxisym, 256));
    }

    #[test]
    fn unknown_key_names_the_line() {
        let err = parse_file("seed = 1\nseeed = 2\n", "x.cfg").unwrap_err();
        let Failure::Usage(msg) = err else { panic!() };
        assert!(msg.contains("x.cfg:2"), "{msg}");
        assert!(msg.contains("seeed = 2"), "{msg}");
    }

    #[test]
    fn resolution_ranges_enforced() {
        for (grid, ok) in [
            ("torus2d:64", true),
            ("torus2d:8", false),
            ("torus4d:16", true),
            ("torus4d:18", false),
            ("sphere:32", false),
            ("sphere:1024", true),
            ("torus2d:63", false),
        ] {
            let mut s = Settings::new();
            flag(&mut s, "command", "verify");
            flag(&mut s, "grid", grid);
            assert_eq!(RunConfig::from_settings(&s).is_ok(), ok, "{grid}");
        }
    }

    #[test]
    fn thresholds_are_partial() {
        let s = Setting {
            value: "tail:1e-5, curvature:2e-3".into(),
            origin: "t".into(),
        };
        let th = parse_thresholds(&s).unwrap();
        assert_eq!(th.tail, 1e-5);
        assert_eq!(th.curvature, 2e-3);
        assert_eq!(th.increment, Thresholds::default().increment);
    }

    #[test]
    fn flow_needs_the_sphere() {
        let mut s = Settings::new();
        flag(&mut s, "command", "flow");
        flag(&mut s, "grid", "torus2d:64");
        assert!(RunConfig::from_settings(&s).is_err());
    }
}
