//! File formats: grid fields as CSV with a JSON sidecar (or a single JSON
//! document), scattered measurement CSV, and JSON manifests.
//!
//! Vector samples are written as local `(r, θ, φ)` components.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::ingest::{to_local, ScatteredDataset, ScatteredRecord};
use crate::quadrature::{EquiangularGrid, FieldData, FieldKind, GridField};

pub const LOCAL_COMPONENTS: &str = "v1=radial,v2=theta(south),v3=phi(east)";
const ANGLE_TOLERANCE_DEG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    Csv,
    Json,
}

impl FieldFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FieldFormat::Csv => "csv",
            FieldFormat::Json => "json",
        }
    }
}

/// Metadata stored next to a grid field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub radius: f64,
    pub declared_degree: u32,
    pub n_lat: usize,
    pub n_lon: usize,
    pub kind: FieldKind,
    pub components: String,
}

impl GridSidecar {
    pub fn of(field: &GridField<f64>) -> Self {
        let g = field.grid();
        Self {
            radius: g.radius(),
            declared_degree: g.declared_degree(),
            n_lat: g.n_lat(),
            n_lon: g.n_lon(),
            kind: field.kind(),
            components: LOCAL_COMPONENTS.to_string(),
        }
    }
}

/// A grid field as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFieldDocument {
    #[serde(flatten)]
    pub meta: GridSidecar,
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
    /// Row-major, latitude outer; one entry of 1 or 3 components per node.
    pub values: Vec<Vec<f64>>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn node_values(field: &GridField<f64>) -> Vec<Vec<f64>> {
    let grid = field.grid();
    match field.data() {
        FieldData::Scalar(v) => v.iter().map(|x| vec![*x]).collect(),
        FieldData::Vector(v) => v
            .iter()
            .enumerate()
            .map(|(i, x)| to_local(&grid.unit(i), x).to_vec())
            .collect(),
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Writes `field` to `path` in `format`; CSV output also writes the sidecar.
pub fn write_grid_field(path: &Path, field: &GridField<f64>, format: FieldFormat) -> Result<()> {
    let grid = field.grid();
    let values = node_values(field);
    let angles = (0..grid.len()).map(|i| {
        let (t, p) = grid.spherical(i);
        (t.to_degrees(), p.to_degrees())
    });
    match format {
        FieldFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            let mut header = vec!["theta_deg", "phi_deg", "v1"];
            if field.kind() == FieldKind::Vector {
                header.extend(["v2", "v3"]);
            }
            w.write_record(&header)?;
            for ((t, p), v) in angles.zip(&values) {
                let mut row = vec![t.to_string(), p.to_string()];
                row.extend(v.iter().map(f64::to_string));
                w.write_record(&row)?;
            }
            w.flush()?;
            write_json(&sidecar_path(path), &GridSidecar::of(field))
        }
        FieldFormat::Json => {
            let (theta_deg, phi_deg) = angles.unzip();
            write_json(
                path,
                &GridFieldDocument { meta: GridSidecar::of(field), theta_deg, phi_deg, values },
            )
        }
    }
}

fn assemble(
    theta: &[f64],
    phi: &[f64],
    values: Vec<Vec<f64>>,
    radius: f64,
) -> Result<GridField<f64>> {
    let total = theta.len();
    if total == 0 {
        return Err(Error::Format("grid field has no rows".into()));
    }
    let n_lon = theta.iter().take_while(|t| (**t - theta[0]).abs() < ANGLE_TOLERANCE_DEG).count();
    if total % n_lon != 0 {
        return Err(Error::Format(format!("{total} rows are not a multiple of {n_lon} longitudes")));
    }
    let grid = Arc::new(EquiangularGrid::new(total / n_lon, n_lon, radius)?);
    for i in 0..total {
        let (t, p) = grid.spherical(i);
        if (t.to_degrees() - theta[i]).abs() > ANGLE_TOLERANCE_DEG
            || (p.to_degrees() - phi[i]).abs() > ANGLE_TOLERANCE_DEG
        {
            return Err(Error::Format(format!(
                "row {i} at ({}, {}) is not node {i} of a {}x{} equiangular grid",
                theta[i],
                phi[i],
                grid.n_lat(),
                n_lon
            )));
        }
    }
    let width = values[0].len();
    if values.iter().any(|v| v.len() != width) {
        return Err(Error::Format("inconsistent number of components".into()));
    }
    match width {
        1 => GridField::scalar(grid, values.into_iter().map(|v| v[0]).collect()),
        3 => {
            let vecs = values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let (er, et, ep) = grid.unit(i).local_frame();
                    er * v[0] + et * v[1] + ep * v[2]
                })
                .collect();
            GridField::vector(grid, vecs)
        }
        w => Err(Error::Format(format!("{w} components per node, expected 1 or 3"))),
    }
}

/// Reads a grid field written by [`write_grid_field`], choosing the format by extension.
///
/// A missing CSV sidecar means radius 1.
pub fn read_grid_field(path: &Path) -> Result<GridField<f64>> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let doc: GridFieldDocument = read_json(path)?;
        let field = assemble(&doc.theta_deg, &doc.phi_deg, doc.values, doc.meta.radius)?;
        check_meta(&field, &doc.meta)?;
        return Ok(field);
    }
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected_scalar = ["theta_deg", "phi_deg", "v1"];
    let expected_vector = ["theta_deg", "phi_deg", "v1", "v2", "v3"];
    if header != expected_scalar && header != expected_vector {
        return Err(Error::Format(format!("unexpected grid header {header:?}")));
    }
    let (mut theta, mut phi, mut values) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        theta.push(nums[0]);
        phi.push(nums[1]);
        values.push(nums[2..].to_vec());
    }
    let side = sidecar_path(path);
    let meta: Option<GridSidecar> = if side.exists() { Some(read_json(&side)?) } else { None };
    let field = assemble(&theta, &phi, values, meta.as_ref().map_or(1.0, |m| m.radius))?;
    if let Some(m) = meta {
        check_meta(&field, &m)?;
    }
    Ok(field)
}

fn check_meta(field: &GridField<f64>, meta: &GridSidecar) -> Result<()> {
    let g = field.grid();
    if g.n_lat() != meta.n_lat || g.n_lon() != meta.n_lon || field.kind() != meta.kind {
        return Err(Error::Format("sidecar disagrees with the field layout".into()));
    }
    Ok(())
}

pub const SCATTERED_HEADER: [&str; 6] = ["colat_deg", "lon_deg", "radius_km", "v1", "v2", "v3"];

pub fn read_scattered(path: &Path) -> Result<ScatteredDataset> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SCATTERED_HEADER {
        return Err(Error::Format(format!("unexpected scattered header {header:?}")));
    }
    let mut records = Vec::new();
    for rec in r.deserialize::<(f64, f64, f64, f64, f64, f64)>() {
        let (c, l, rad, a, b, d) = rec?;
        records.push(ScatteredRecord { colat_deg: c, lon_deg: l, radius_km: rad, value: [a, b, d] });
    }
    ScatteredDataset::new(records)
}

pub fn write_scattered(path: &Path, data: &ScatteredDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SCATTERED_HEADER)?;
    for r in &data.records {
        w.serialize((r.colat_deg, r.lon_deg, r.radius_km, r.value[0], r.value[1], r.value[2]))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Grid,
    Scattered,
    GridJson,
}

/// Classifies an input file by extension and CSV header.
pub fn detect_input(path: &Path) -> Result<InputKind> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        return Ok(InputKind::GridJson);
    }
    let mut line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut line)?;
    match line.split(',').next().map(str::trim) {
        Some("theta_deg") => Ok(InputKind::Grid),
        Some("colat_deg") => Ok(InputKind::Scattered),
        _ => Err(Error::Format(format!("unrecognized header in {}", path.display()))),
    }
}

/// Global Cartesian vector from local `(r, θ, φ)` components at `(θ, φ)` in degrees.
pub fn local_to_global(theta_deg: f64, phi_deg: f64, v: [f64; 3]) -> Vec3<f64> {
    let x = crate::geometry::UnitVector::from_spherical(theta_deg.to_radians(), phi_deg.to_radians());
    let (er, et, ep) = x.local_frame();
    er * v[0] + et * v[1] + ep * v[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{make_field, SyntheticSpec};

    fn field() -> GridField<f64> {
        let mut spec = SyntheticSpec::three_part_example();
        spec.radius = 6821.2;
        let g = Arc::new(EquiangularGrid::new(6, 8, 6821.2).unwrap());
        make_field(&spec, g).unwrap().field
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        let f = field();
        write_grid_field(&p, &f, FieldFormat::Csv).unwrap();
        let head = std::fs::read_to_string(&p).unwrap();
        assert!(head.starts_with("theta_deg,phi_deg,v1,v2,v3\n"));
        let meta: GridSidecar = read_json(&sidecar_path(&p)).unwrap();
        assert_eq!(meta.declared_degree, 5);
        assert_eq!(meta.radius, 6821.2);
        let back = read_grid_field(&p).unwrap();
        assert!(back.sub(&f).unwrap().sup_norm() < 1e-14);
        assert_eq!(detect_input(&p).unwrap(), InputKind::Grid);
    }

    #[test]
    fn json_round_trip_and_scalar_fields() {
        let dir = tempfile::tempdir().unwrap();
        let f = field().radial_component().unwrap();
        let p = dir.path().join("r.json");
        write_grid_field(&p, &f, FieldFormat::Json).unwrap();
        let back = read_grid_field(&p).unwrap();
        assert_eq!(back, f);
        let q = dir.path().join("r.csv");
        write_grid_field(&q, &f, FieldFormat::Csv).unwrap();
        assert_eq!(read_grid_field(&q).unwrap(), f);
    }

    #[test]
    fn malformed_grids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "theta_deg,phi_deg,v1\n10,0,1\n10,90,1\n").unwrap();
        assert!(matches!(read_grid_field(&p), Err(Error::Format(_)) | Err(Error::Config(_))));
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_grid_field(&p), Err(Error::Format(_))));
        assert!(matches!(read_grid_field(&dir.path().join("missing.csv")), Err(Error::Io(_))));
    }

    #[test]
    fn scattered_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let d = ScatteredDataset::new(vec![
            ScatteredRecord { colat_deg: 10.0, lon_deg: 20.0, radius_km: 6821.2, value: [1.0, 2.0, 3.0] },
            ScatteredRecord { colat_deg: 100.5, lon_deg: -20.0, radius_km: 6821.0, value: [-1.0, 0.5, 1e-3] },
        ])
        .unwrap();
        write_scattered(&p, &d).unwrap();
        assert_eq!(read_scattered(&p).unwrap(), d);
        assert_eq!(detect_input(&p).unwrap(), InputKind::Scattered);
    }

    #[test]
    fn local_components_round_trip() {
        let v = local_to_global(30.0, 45.0, [1.0, -2.0, 0.5]);
        let x = crate::geometry::UnitVector::from_spherical(30f64.to_radians(), 45f64.to_radians());
        let l = to_local(&x, &v);
        assert!((l[0] - 1.0).abs() < 1e-15 && (l[1] + 2.0).abs() < 1e-15 && (l[2] - 0.5).abs() < 1e-15);
    }
}
