//! Synthetic fields with known separations and the brute-force spectral oracle.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::harmonics::{vsh_eval, HarmonicIndex, VshKind};
use crate::kernels::Part;
use crate::quadrature::{EquiangularGrid, GridField};
use crate::scalar::Real;

/// One term `amplitude · ỹ^(kind)_{degree, order}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTerm {
    pub kind: u8,
    pub degree: u32,
    pub order: u32,
    pub amplitude: f64,
}

impl SyntheticTerm {
    pub fn new(kind: u8, degree: u32, order: u32, amplitude: f64) -> Self {
        Self { kind, degree, order, amplitude }
    }

    pub fn part(&self) -> Result<Part> {
        match self.kind {
            1 => Ok(Part::Internal),
            2 => Ok(Part::External),
            3 => Ok(Part::Toroidal),
            i => Err(Error::Domain(format!("kind {i} not in 1..=3"))),
        }
    }

    fn basis(&self) -> Result<(VshKind, HarmonicIndex)> {
        let kind = VshKind::tilde(self.kind)?;
        let idx = HarmonicIndex::new(self.degree, self.order)?;
        if self.degree < kind.min_degree() {
            return Err(Error::Domain(format!(
                "kind {} needs degree ≥ {}",
                self.kind,
                kind.min_degree()
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Domain("non-finite amplitude".into()));
        }
        Ok((kind, idx))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub terms: Vec<SyntheticTerm>,
    pub radius: f64,
}

impl SyntheticSpec {
    pub fn new(terms: Vec<SyntheticTerm>, radius: f64) -> Result<Self> {
        let spec = Self { terms, radius };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config(format!("radius {} must be positive", self.radius)));
        }
        for t in &self.terms {
            t.basis()?;
        }
        Ok(())
    }

    /// `ỹ⁽¹⁾_{2,1} + ỹ⁽²⁾_{3,2} + ỹ⁽³⁾_{4,3}` on the unit sphere.
    pub fn three_part_example() -> Self {
        Self {
            terms: vec![
                SyntheticTerm::new(1, 2, 1, 1.0),
                SyntheticTerm::new(2, 3, 2, 1.0),
                SyntheticTerm::new(3, 4, 3, 1.0),
            ],
            radius: 1.0,
        }
    }

    /// Highest degree among the terms.
    pub fn max_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.degree).max().unwrap_or(0)
    }
}

/// A generated field together with its ground-truth parts.
#[derive(Debug, Clone)]
pub struct SyntheticField<T> {
    pub field: GridField<T>,
    /// Internal, external and toroidal contributions.
    pub truth: [GridField<T>; 3],
}

impl<T: Real> SyntheticField<T> {
    pub fn truth(&self, part: Part) -> &GridField<T> {
        &self.truth[part.index()]
    }
}

/// Samples `Σ amplitude · ỹ^(i)_{n,k}` on the grid nodes.
pub fn make_field<T: Real>(
    spec: &SyntheticSpec,
    grid: Arc<EquiangularGrid<T>>,
) -> Result<SyntheticField<T>> {
    spec.validate()?;
    let r = grid.radius().as_f64();
    if (r - spec.radius).abs() > 1e-12 * spec.radius {
        return Err(Error::Mismatch(format!(
            "grid radius {r} differs from spec radius {}",
            spec.radius
        )));
    }
    let mut parts: [Vec<Vec3<T>>; 3] = std::array::from_fn(|_| vec![Vec3::zero(); grid.len()]);
    for term in &spec.terms {
        let (kind, idx) = term.basis()?;
        let a = T::lit(term.amplitude);
        let target = &mut parts[term.part()?.index()];
        for (i, v) in target.iter_mut().enumerate() {
            *v += vsh_eval(kind, idx, &grid.unit(i))? * a;
        }
    }
    let total: Vec<Vec3<T>> = (0..grid.len())
        .map(|i| parts[0][i] + parts[1][i] + parts[2][i])
        .collect();
    let [p1, p2, p3] = parts;
    Ok(SyntheticField {
        field: GridField::vector(grid.clone(), total)?,
        truth: [
            GridField::vector(grid.clone(), p1)?,
            GridField::vector(grid.clone(), p2)?,
            GridField::vector(grid, p3)?,
        ],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry<T> {
    pub kind: u8,
    pub degree: u32,
    pub order: u32,
    pub value: T,
}

/// Quadrature inner products `∫ f·ỹ^(i)_{n,k} dω` for all `n ≤ Lmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients<T> {
    pub lmax: u32,
    pub entries: Vec<SpectralEntry<T>>,
}

impl<T: Real> SpectralCoefficients<T> {
    pub fn get(&self, kind: u8, degree: u32, order: u32) -> Option<T> {
        self.entries
            .iter()
            .find(|e| e.kind == kind && e.degree == degree && e.order == order)
            .map(|e| e.value)
    }

    /// `Σ c²`.
    pub fn energy(&self) -> T {
        self.entries.iter().map(|e| e.value * e.value).sum()
    }

    /// `Σ_{n,k} c(i,n,k) ỹ^(i)_{n,k}` for each part `i`.
    pub fn reconstruct(&self, grid: &Arc<EquiangularGrid<T>>) -> Result<[GridField<T>; 3]> {
        let mut parts: [Vec<Vec3<T>>; 3] = std::array::from_fn(|_| vec![Vec3::zero(); grid.len()]);
        for (p, out) in parts.iter_mut().enumerate() {
            let kind = VshKind::tilde(p as u8 + 1)?;
            let terms: Vec<(HarmonicIndex, T)> = self
                .entries
                .iter()
                .filter(|e| e.kind as usize == p + 1)
                .map(|e| Ok((HarmonicIndex::new(e.degree, e.order)?, e.value)))
                .collect::<Result<_>>()?;
            out.par_iter_mut().enumerate().try_for_each(|(i, v)| {
                let x = grid.unit(i);
                for (idx, c) in &terms {
                    *v += vsh_eval(kind, *idx, &x)? * *c;
                }
                Ok::<_, Error>(())
            })?;
        }
        let [a, b, c] = parts;
        Ok([
            GridField::vector(grid.clone(), a)?,
            GridField::vector(grid.clone(), b)?,
            GridField::vector(grid.clone(), c)?,
        ])
    }
}

/// Projects `f` onto the orthonormal `ỹ` system up to degree `Lmax`.
pub fn spectral_oracle<T: Real>(f: &GridField<T>, lmax: u32) -> Result<SpectralCoefficients<T>> {
    let grid = f.grid();
    if grid.declared_degree() < 2 * lmax {
        return Err(Error::Resolution(format!(
            "grid exact to degree {} cannot resolve products up to degree {}",
            grid.declared_degree(),
            2 * lmax
        )));
    }
    let values = f.vectors()?;
    let mut basis = Vec::new();
    for i in 1..=3u8 {
        let kind = VshKind::tilde(i)?;
        for idx in HarmonicIndex::all_up_to(lmax).filter(|x| x.degree() >= kind.min_degree()) {
            basis.push((kind, idx));
        }
    }
    let entries = basis
        .par_iter()
        .map(|&(kind, idx)| {
            let mut acc = T::zero();
            for ring in 0..grid.n_lat() {
                let mut s = T::zero();
                for k in 0..grid.n_lon() {
                    let node = grid.index(ring, k);
                    s = s + vsh_eval(kind, idx, &grid.unit(node))?.dot(&values[node]);
                }
                acc = acc + s * grid.ring_weights()[ring];
            }
            Ok(SpectralEntry { kind: kind.i(), degree: idx.degree(), order: idx.order(), value: acc })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralCoefficients { lmax, entries })
}

/// Differences between a multiscale separation and the spectral oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartComparison {
    pub part: Part,
    /// `sup |P b − oracle|`.
    pub multiscale_vs_oracle: f64,
    /// `sup |oracle|`.
    pub oracle_sup: f64,
    /// `sup |P b − truth|`, when ground truth is known.
    pub multiscale_vs_truth: Option<f64>,
    /// `sup |oracle − truth|`, when ground truth is known.
    pub oracle_vs_truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub lmax: u32,
    pub parts: Vec<PartComparison>,
    /// `|Σ c² − ∫|b|² dω|`.
    pub parseval_defect: f64,
}

/// Projects `b` onto the `ỹ` system and compares the per-part reconstructions
/// with the separated parts in `separated`.
pub fn compare_with_oracle<T: Real>(
    b: &GridField<T>,
    separated: &[GridField<T>; 3],
    lmax: u32,
    truth: Option<&[GridField<T>; 3]>,
) -> Result<(OracleComparison, SpectralCoefficients<T>)> {
    let coeffs = spectral_oracle(b, lmax)?;
    let oracle = coeffs.reconstruct(b.grid())?;
    let energy = crate::quadrature::inner_product(b, b)?;
    let mut parts = Vec::with_capacity(3);
    for p in Part::ALL {
        let i = p.index();
        let sup = |a: &GridField<T>, c: &GridField<T>| -> Result<f64> { Ok(a.sub(c)?.sup_norm().as_f64()) };
        parts.push(PartComparison {
            part: p,
            multiscale_vs_oracle: sup(&separated[i], &oracle[i])?,
            oracle_sup: oracle[i].sup_norm().as_f64(),
            multiscale_vs_truth: truth.map(|t| sup(&separated[i], &t[i])).transpose()?,
            oracle_vs_truth: truth.map(|t| sup(&oracle[i], &t[i])).transpose()?,
        });
    }
    Ok((
        OracleComparison { lmax, parts, parseval_defect: (coeffs.energy() - energy).abs().as_f64() },
        coeffs,
    ))
}
