//! Binning of scattered measurements onto an equiangular grid with Huber M-estimation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{UnitVector, Vec3};
use crate::quadrature::{EquiangularGrid, GridField};

/// Consistency factor making the median absolute deviation estimate σ for Gaussian data.
const MAD_SCALE: f64 = 1.4826;
const MAX_ITERATIONS: usize = 50;
const RELATIVE_TOLERANCE: f64 = 1e-8;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Huber M-estimate of location by iteratively reweighted least squares.
///
/// Starts from the median with scale `σ = 1.4826·MAD`; weights are
/// `min(1, c/|r/σ|)`. For `σ = 0` only samples equal to the current estimate carry weight.
pub fn huber_mean(values: &[f64], c: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("Huber mean of an empty sample".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Config(format!("Huber constant {c} must be positive")));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite sample {bad}")));
    }
    let s = sorted(values);
    let mut m = median(&s);
    let deviations = sorted(&s.iter().map(|v| (v - m).abs()).collect::<Vec<_>>());
    let sigma = MAD_SCALE * median(&deviations);
    for _ in 0..MAX_ITERATIONS {
        let (mut num, mut den) = (0.0, 0.0);
        for &v in values {
            let r = v - m;
            let w = if sigma > 0.0 {
                let z = (r / sigma).abs();
                if z <= c { 1.0 } else { c / z }
            } else if r == 0.0 {
                1.0
            } else {
                0.0
            };
            num += w * v;
            den += w;
        }
        if den == 0.0 {
            break;
        }
        let next = num / den;
        let change = (next - m).abs();
        m = next;
        if change <= RELATIVE_TOLERANCE * m.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(m)
}

/// One scattered measurement; `value` holds local `(r, θ, φ)` components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteredRecord {
    pub colat_deg: f64,
    pub lon_deg: f64,
    pub radius_km: f64,
    pub value: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScatteredDataset {
    pub records: Vec<ScatteredRecord>,
}

impl ScatteredDataset {
    pub fn new(records: Vec<ScatteredRecord>) -> Result<Self> {
        let d = Self { records };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.records.is_empty() {
            return Err(Error::Domain("dataset has no records".into()));
        }
        for (i, r) in self.records.iter().enumerate() {
            if !(0.0..=180.0).contains(&r.colat_deg) || !r.lon_deg.is_finite() {
                return Err(Error::Domain(format!("record {i}: angles out of range")));
            }
            if !(r.radius_km > 0.0 && r.radius_km.is_finite()) {
                return Err(Error::Domain(format!("record {i}: radius must be positive")));
            }
            if r.value.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("record {i}: non-finite sample")));
            }
        }
        Ok(())
    }

    pub fn mean_radius(&self) -> f64 {
        self.records.iter().map(|r| r.radius_km).sum::<f64>() / self.records.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub n_lat: usize,
    pub n_lon: usize,
    /// Edge length of the spherical rectangle around each node, degrees.
    pub bin_deg: f64,
    pub huber_c: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { n_lat: 180, n_lon: 180, bin_deg: 2.5, huber_c: 1.345 }
    }
}

#[derive(Debug, Clone)]
pub struct IngestResult {
    pub field: GridField<f64>,
    /// Records averaged into each node.
    pub counts: Vec<usize>,
    /// Nodes whose cell was empty and whose value was interpolated.
    pub filled: Vec<bool>,
}

impl IngestResult {
    pub fn filled_count(&self) -> usize {
        self.filled.iter().filter(|f| **f).count()
    }
}

fn wrap_deg(d: f64) -> f64 {
    let w = d.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// Averages the records falling into each node's cell, then fills empty cells
/// by inverse-distance weighting from the nearest non-empty nodes.
pub fn ingest(data: &ScatteredDataset, cfg: &IngestConfig) -> Result<IngestResult> {
    data.validate()?;
    if !(cfg.bin_deg > 0.0) {
        return Err(Error::Config(format!("bin diameter {} must be positive", cfg.bin_deg)));
    }
    let grid = Arc::new(EquiangularGrid::new(cfg.n_lat, cfg.n_lon, data.mean_radius())?);
    let half = 0.5 * cfg.bin_deg;
    let colat: Vec<f64> = grid.colatitudes().iter().map(|t| t.to_degrees()).collect();
    let lon: Vec<f64> = grid.longitudes().iter().map(|p| p.to_degrees()).collect();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); grid.len()];
    for (ri, r) in data.records.iter().enumerate() {
        for (j, c) in colat.iter().enumerate() {
            if (c - r.colat_deg).abs() > half {
                continue;
            }
            for (k, l) in lon.iter().enumerate() {
                if wrap_deg(l - r.lon_deg).abs() <= half {
                    members[grid.index(j, k)].push(ri);
                }
            }
        }
    }

    let mut values: Vec<Option<Vec3<f64>>> = vec![None; grid.len()];
    for (node, recs) in members.iter().enumerate() {
        if recs.is_empty() {
            continue;
        }
        let mut local = [0.0; 3];
        for (comp, out) in local.iter_mut().enumerate() {
            let samples: Vec<f64> = recs.iter().map(|&i| data.records[i].value[comp]).collect();
            *out = huber_mean(&samples, cfg.huber_c)?;
        }
        let (er, et, ep) = grid.unit(node).local_frame();
        values[node] = Some(er * local[0] + et * local[1] + ep * local[2]);
    }
    if values.iter().all(Option::is_none) {
        return Err(Error::Domain("no record falls into any grid cell".into()));
    }

    let filled: Vec<bool> = values.iter().map(Option::is_none).collect();
    let out: Vec<Vec3<f64>> = (0..grid.len())
        .map(|i| values[i].unwrap_or_else(|| fill(&grid, &values, i)))
        .collect();
    Ok(IngestResult {
        field: GridField::vector(grid, out)?,
        counts: members.iter().map(Vec::len).collect(),
        filled,
    })
}

/// Inverse-square-distance average over the non-empty nodes of the smallest
/// index window around `node` that contains any.
fn fill(grid: &EquiangularGrid<f64>, values: &[Option<Vec3<f64>>], node: usize) -> Vec3<f64> {
    let (n_lat, n_lon) = (grid.n_lat() as i64, grid.n_lon() as i64);
    let j0 = grid.ring_of(node) as i64;
    let k0 = (node % grid.n_lon()) as i64;
    let x = grid.point(node);
    for radius in 1..=n_lat.max(n_lon) {
        let (mut acc, mut wsum) = (Vec3::zero(), 0.0);
        for j in (j0 - radius).max(0)..=(j0 + radius).min(n_lat - 1) {
            for dk in -radius..=radius {
                if dk.abs() >= n_lon / 2 + 1 {
                    continue;
                }
                let i = grid.index(j as usize, (k0 + dk).rem_euclid(n_lon) as usize);
                if let Some(v) = values[i] {
                    let d2 = (*grid.point(i) - *x).norm_squared();
                    acc += v * d2.recip();
                    wsum += d2.recip();
                }
            }
        }
        if wsum > 0.0 {
            return acc * wsum.recip();
        }
    }
    Vec3::zero()
}

/// Local `(r, θ, φ)` components of `v` at `x`.
pub fn to_local(x: &UnitVector<f64>, v: &Vec3<f64>) -> [f64; 3] {
    let (er, et, ep) = x.local_frame();
    [v.dot(&er), v.dot(&et), v.dot(&ep)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn oracle_values() {
        assert_eq!(huber_mean(&[1.0, 1.0, 1.0, 100.0], 1.345).unwrap(), 1.0);
        assert!((huber_mean(&[1.0, 1.1, 0.9, 1.05, 100.0], 1.345).unwrap() - 1.05).abs() < 1e-9);
        assert_eq!(huber_mean(&[-2.0, 2.0], 1.345).unwrap(), 0.0);
        assert!((huber_mean(&[3.0, 4.0, 5.0, 6.0, 50.0, -20.0], 1.345).unwrap() - 4.5).abs() < 1e-9);
        assert_eq!(huber_mean(&[7.25], 1.345).unwrap(), 7.25);
        assert!(huber_mean(&[], 1.345).is_err());
    }

    proptest! {
        #[test]
        fn estimate_stays_within_sample_range(v in prop::collection::vec(-1e3f64..1e3, 1..40), c in 0.5f64..3.0) {
            let m = huber_mean(&v, c).unwrap();
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m >= lo - 1e-9 && m <= hi + 1e-9);
        }

        #[test]
        fn estimate_is_shift_equivariant(v in prop::collection::vec(-10f64..10.0, 1..20), s in -100f64..100.0) {
            let a = huber_mean(&v, 1.345).unwrap();
            let shifted: Vec<f64> = v.iter().map(|x| x + s).collect();
            let b = huber_mean(&shifted, 1.345).unwrap();
            prop_assert!((a + s - b).abs() < 1e-6 * (1.0 + s.abs()));
        }
    }

    fn record(colat: f64, lon: f64, v: [f64; 3]) -> ScatteredRecord {
        ScatteredRecord { colat_deg: colat, lon_deg: lon, radius_km: 6821.2, value: v }
    }

    #[test]
    fn single_record_per_cell_is_kept() {
        let cfg = IngestConfig { n_lat: 4, n_lon: 4, bin_deg: 10.0, huber_c: 1.345 };
        let grid = EquiangularGrid::<f64>::new(4, 4, 1.0).unwrap();
        let recs: Vec<_> = (0..grid.len())
            .map(|i| {
                let (t, p) = grid.spherical(i);
                record(t.to_degrees() + 1.0, p.to_degrees() - 1.0, [i as f64, 1.0, -2.0])
            })
            .collect();
        let out = ingest(&ScatteredDataset::new(recs).unwrap(), &cfg).unwrap();
        assert_eq!(out.filled_count(), 0);
        assert!((out.field.grid().radius() - 6821.2).abs() < 1e-9);
        for (i, v) in out.field.vectors().unwrap().iter().enumerate() {
            let l = to_local(&grid.unit(i), v);
            assert!((l[0] - i as f64).abs() < 1e-12 && (l[1] - 1.0).abs() < 1e-12 && (l[2] + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn outliers_are_downweighted_and_empty_cells_filled() {
        let cfg = IngestConfig { n_lat: 4, n_lon: 8, bin_deg: 20.0, huber_c: 1.345 };
        let grid = EquiangularGrid::<f64>::new(4, 8, 1.0).unwrap();
        let (t, p) = grid.spherical(grid.index(1, 2));
        let (t, p) = (t.to_degrees(), p.to_degrees());
        let recs = vec![
            record(t, p, [1.0, 0.0, 0.0]),
            record(t + 1.0, p, [1.0, 0.0, 0.0]),
            record(t, p + 1.0, [1.0, 0.0, 0.0]),
            record(t - 1.0, p - 1.0, [100.0, 0.0, 0.0]),
        ];
        let out = ingest(&ScatteredDataset::new(recs).unwrap(), &cfg).unwrap();
        let node = grid.index(1, 2);
        assert_eq!(out.counts[node], 4);
        let l = to_local(&grid.unit(node), &out.field.vectors().unwrap()[node]);
        assert!((l[0] - 1.0).abs() < 0.2);
        assert_eq!(out.filled_count(), grid.len() - 1);
        assert!(out.field.vectors().unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn dataset_validation() {
        assert!(ScatteredDataset::new(vec![]).is_err());
        assert!(ScatteredDataset::new(vec![record(190.0, 0.0, [0.0; 3])]).is_err());
        let far = ScatteredDataset::new(vec![record(10.0, 0.0, [0.0; 3])]).unwrap();
        let cfg = IngestConfig { n_lat: 4, n_lon: 4, bin_deg: 0.5, huber_c: 1.345 };
        assert!(ingest(&far, &cfg).is_err());
    }
}
