//! CSV persistence for fields and metric paths.
//!
//! A field file `name.csv` has one row per node: coordinates, then values.
//! Numbers are written with 17 significant digits, which round-trips every
//! `f64` exactly. The grid is described by a sidecar `name.json`.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ebin::MetricPath;
use crate::error::{CoreError, Result};
use crate::grid::{Grid, GridSpec, ScalarField, Topology};
use crate::tensor::SymTensorField;

pub const CONVENTION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMetadata {
    pub topology: Topology,
    pub resolution: usize,
    pub convention_version: u32,
}

impl FieldMetadata {
    pub fn of(grid: &Grid) -> Self {
        Self {
            topology: grid.topology(),
            resolution: grid.resolution(),
            convention_version: CONVENTION_VERSION,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        if self.convention_version != CONVENTION_VERSION {
            return Err(CoreError::Parse(format!(
                "unsupported convention version {}",
                self.convention_version
            )));
        }
        GridSpec::new(self.topology, self.resolution)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathManifest {
    pub times: Vec<f64>,
    pub grid: FieldMetadata,
    pub generator: String,
}

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| CoreError::Parse(format!("not a number: {s:?}")))
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn coordinate_names(topology: Topology) -> Vec<String> {
    match topology {
        Topology::SphereAxisym => vec!["theta".into()],
        t => (1..=t.coordinate_count()).map(|i| format!("x{i}")).collect(),
    }
}

fn write_rows(path: &Path, grid: &Grid, value_names: &[String], rows: impl Fn(usize) -> Vec<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = coordinate_names(grid.topology());
    header.extend(value_names.iter().cloned());
    w.write_record(&header)?;
    for node in 0..grid.len() {
        let record: Vec<String> = grid
            .coords(node)
            .into_iter()
            .chain(rows(node))
            .map(format_f64)
            .collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    fs::write(
        sidecar_path(path),
        serde_json::to_string_pretty(&FieldMetadata::of(grid))?,
    )?;
    Ok(())
}

/// Reads the sidecar and the value columns (coordinates are skipped).
fn read_rows(path: &Path, value_count: usize) -> Result<(Grid, Vec<Vec<f64>>)> {
    let meta: FieldMetadata = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let grid = meta.grid()?;
    let skip = grid.topology().coordinate_count();
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    if width != skip + value_count {
        return Err(CoreError::Parse(format!(
            "expected {} columns, found {width}",
            skip + value_count
        )));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for rec in r.records() {
        let rec = rec?;
        rows.push(rec.iter().skip(skip).map(parse_f64).collect::<Result<Vec<f64>>>()?);
    }
    if rows.len() != grid.len() {
        return Err(CoreError::Parse(format!(
            "expected {} rows, found {}",
            grid.len(),
            rows.len()
        )));
    }
    Ok((grid, rows))
}

pub fn write_scalar_field(path: &Path, f: &ScalarField) -> Result<()> {
    write_rows(path, f.grid(), &["value".into()], |i| vec![f.values()[i]])
}

pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    let (grid, rows) = read_rows(path, 1)?;
    ScalarField::new(&grid, rows.into_iter().map(|r| r[0]).collect())
}

fn upper_triangle(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect()
}

pub fn write_tensor_field(path: &Path, h: &SymTensorField) -> Result<()> {
    let entries = upper_triangle(h.grid().tensor_dim());
    let names: Vec<String> = entries.iter().map(|(i, j)| format!("g{}{}", i + 1, j + 1)).collect();
    write_rows(path, h.grid(), &names, |node| {
        entries.iter().map(|&(i, j)| h.at(node)[(i, j)]).collect()
    })
}

pub fn read_tensor_field(path: &Path) -> Result<SymTensorField> {
    let meta: FieldMetadata = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let d = meta.grid()?.tensor_dim();
    let entries = upper_triangle(d);
    let (grid, rows) = read_rows(path, entries.len())?;
    let values = rows
        .into_iter()
        .map(|r| {
            let mut m = DMatrix::zeros(d, d);
            for (&(i, j), v) in entries.iter().zip(r) {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
            m
        })
        .collect();
    SymTensorField::new(&grid, values)
}

fn sample_name(j: usize) -> String {
    format!("sample_{j:04}.csv")
}

/// Writes `manifest.json` and one `sample_NNNN.csv` per time into `dir`.
pub fn write_metric_path(dir: &Path, path: &MetricPath) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (j, g) in path.metrics().iter().enumerate() {
        write_tensor_field(&dir.join(sample_name(j)), g)?;
    }
    let manifest = PathManifest {
        times: path.times().to_vec(),
        grid: FieldMetadata::of(path.grid()),
        generator: path.generator().to_string(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_metric_path(dir: &Path) -> Result<MetricPath> {
    let manifest: PathManifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
    let grid = manifest.grid.grid()?;
    let metrics = (0..manifest.times.len())
        .map(|j| {
            let g = read_tensor_field(&dir.join(sample_name(j)))?;
            if g.grid().as_ref() != grid.as_ref() {
                return Err(CoreError::Parse(format!("sample {j} is on a different grid")));
            }
            Ok(g)
        })
        .collect::<Result<Vec<_>>>()?;
    MetricPath::new(manifest.times, metrics, None, manifest.generator)
}

/// Plain numeric table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::sphere(16).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin() / 3.0 + 1e-300);
        let p = dir.path().join("f.csv");
        write_scalar_field(&p, &f).unwrap();
        let back = read_scalar_field(&p).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn tensor_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::torus2d(4).unwrap();
        let h = SymTensorField::identity(&g).scale(1.0 / 7.0);
        let p = dir.path().join("h.csv");
        write_tensor_field(&p, &h).unwrap();
        let back = read_tensor_field(&p).unwrap();
        assert_eq!(back.at(3)[(1, 1)].to_bits(), h.at(3)[(1, 1)].to_bits());
    }

    #[test]
    fn wrong_column_count_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::torus2d(4).unwrap();
        let p = dir.path().join("f.csv");
        write_scalar_field(&p, &ScalarField::zeros(&g)).unwrap();
        assert!(matches!(read_tensor_field(&p), Err(CoreError::Parse(_))));
    }
}
