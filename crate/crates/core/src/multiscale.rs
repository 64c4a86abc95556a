//! Helmholtz scalars, scaling and wavelet transforms, and the multiscale
//! separation into internal, external and toroidal parts.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::kernels::{
    KernelOrders, Part, PartKernel, RegularizationConfig, ScalingKernel, WaveletKernel, ZonalProfile,
};
use crate::quadrature::{convolve_tensor, convolve_vector, integrate, EquiangularGrid, GridField};
use crate::scalar::Real;

/// Kernel orders and resolution guard shared by all transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformOptions {
    pub orders: KernelOrders,
    /// Minimum number of grid nodes inside the cap `1 − ξ·η < 2^{-(J−1)}` for scale `J`.
    pub min_cap_nodes: usize,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self { orders: KernelOrders::default(), min_cap_nodes: 9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationConfig {
    pub j0: u32,
    pub jmax: u32,
    pub transform: TransformOptions,
    /// `|∫ ξ·b dω|` must not exceed `radial_mean_factor · ‖b‖_sup · 4π`.
    pub radial_mean_factor: f64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self {
            j0: 2,
            jmax: 9,
            transform: TransformOptions::default(),
            radial_mean_factor: 1e-6,
        }
    }
}

impl SeparationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j0 > self.jmax {
            return Err(Error::Config(format!("J0 = {} exceeds Jmax = {}", self.j0, self.jmax)));
        }
        if self.jmax > 30 {
            return Err(Error::Config(format!("Jmax = {} is out of range", self.jmax)));
        }
        if !(self.radial_mean_factor >= 0.0) {
            return Err(Error::Config("radial mean tolerance must be non-negative".into()));
        }
        self.transform.orders.validate()
    }
}

/// ρ = 2^{-J}.
pub fn rho_of_scale(scale: u32) -> f64 {
    2f64.powi(-(scale as i32))
}

/// Fails with [`Error::UnderResolved`] at the first target whose cap
/// `1 − ξ·η < 2^{-(J−1)}` holds fewer than `required` grid nodes.
pub fn check_resolution<T: Real>(
    grid: &EquiangularGrid<T>,
    targets: &[Vec3<T>],
    scale: u32,
    required: usize,
) -> Result<()> {
    let rho = T::lit(if scale == 0 { 2.0 } else { rho_of_scale(scale - 1).min(2.0) });
    let counts: Vec<usize> = targets
        .par_iter()
        .map(|c| grid.count_in_cap(c, rho))
        .collect();
    match counts.iter().position(|&n| n < required) {
        None => Ok(()),
        Some(target) => {
            let (theta, _) = crate::geometry::UnitVector::new_unchecked(targets[target]).spherical();
            Err(Error::UnderResolved {
                scale,
                target,
                colatitude_deg: theta.as_f64().to_degrees(),
                found: counts[target],
                required,
            })
        }
    }
}

/// Helmholtz scalars `F₁ = ξ·f`, `F₂`, `F₃` of a vector field, with the
/// tangential ones computed from the regularized Green's function.
#[derive(Debug, Clone)]
pub struct HelmholtzScalars<T> {
    pub f1: GridField<T>,
    pub f2: GridField<T>,
    pub f3: GridField<T>,
}

impl<T: Real> HelmholtzScalars<T> {
    /// `(1/4π)∫F₂ dω` and `(1/4π)∫F₃ dω`.
    pub fn tangential_means(&self) -> Result<(T, T)> {
        let s = T::lit(0.25 / PI);
        Ok((integrate(&self.f2)? * s, integrate(&self.f3)? * s))
    }
}

pub fn helmholtz_scalars<T: Real>(
    f: &GridField<T>,
    cfg: RegularizationConfig<T>,
) -> Result<HelmholtzScalars<T>> {
    let grid = f.grid().clone();
    let green = ZonalProfile::green(Some(cfg));
    let slope = |xi: &Vec3<T>, eta: &Vec3<T>| {
        let u = crate::geometry::cap_distance(xi, eta);
        (green.sample_u(u).deriv1, T::one() - u)
    };
    // −∇*_η G^ρ(ξ·η) = −G'(t)(ξ − tη),  −L*_η G^ρ(ξ·η) = −G'(t)(η ∧ ξ)
    let f2 = convolve_vector(
        |xi, eta| {
            let (d1, t) = slope(xi, eta);
            (*xi - *eta * t) * (-d1)
        },
        f,
        grid.points(),
    )?;
    let f3 = convolve_vector(
        |xi, eta| {
            let (d1, _) = slope(xi, eta);
            eta.cross(xi) * (-d1)
        },
        f,
        grid.points(),
    )?;
    Ok(HelmholtzScalars {
        f1: f.radial_component()?,
        f2: GridField::scalar(grid.clone(), f2)?,
        f3: GridField::scalar(grid, f3)?,
    })
}

fn part_field<T: Real>(grid: &Arc<EquiangularGrid<T>>, values: Vec<Vec3<T>>) -> Result<GridField<T>> {
    GridField::vector(grid.clone(), values)
}

/// `P_J^i b(ξ) = ∫ Φ_J^i(ξ, η) b(η) dω(η)` at arbitrary targets.
pub fn scaling_transform_at<T: Real>(
    part: Part,
    scale: u32,
    b: &GridField<T>,
    targets: &[Vec3<T>],
    opts: &TransformOptions,
) -> Result<Vec<Vec3<T>>> {
    check_resolution(b.grid(), targets, scale, opts.min_cap_nodes)?;
    let kernel = PartKernel { kernel: ScalingKernel::at_scale(scale, opts.orders)?, part };
    Ok(convolve_tensor(&kernel, b, targets, false)?.into_iter().map(|[v]| v).collect())
}

/// `P_J^i b` on the grid nodes.
pub fn scaling_transform<T: Real>(
    part: Part,
    scale: u32,
    b: &GridField<T>,
    opts: &TransformOptions,
) -> Result<GridField<T>> {
    let grid = b.grid().clone();
    part_field(&grid, scaling_transform_at(part, scale, b, grid.points(), opts)?)
}

/// `R_J^i b(ξ) = ∫ Ψ_J^i(ξ, η) b(η) dω(η)` at arbitrary targets, summed over the support cap only.
pub fn wavelet_transform_at<T: Real>(
    part: Part,
    scale: u32,
    b: &GridField<T>,
    targets: &[Vec3<T>],
    opts: &TransformOptions,
) -> Result<Vec<Vec3<T>>> {
    check_resolution(b.grid(), targets, scale + 1, opts.min_cap_nodes)?;
    let kernel = PartKernel { kernel: WaveletKernel::new(scale, opts.orders)?, part };
    Ok(convolve_tensor(&kernel, b, targets, true)?.into_iter().map(|[v]| v).collect())
}

/// `R_J^i b` on the grid nodes.
pub fn wavelet_transform<T: Real>(
    part: Part,
    scale: u32,
    b: &GridField<T>,
    opts: &TransformOptions,
) -> Result<GridField<T>> {
    let grid = b.grid().clone();
    part_field(&grid, wavelet_transform_at(part, scale, b, grid.points(), opts)?)
}

/// All three parts of `P_J b` in one pass.
pub fn scaling_transform_all<T: Real>(
    scale: u32,
    b: &GridField<T>,
    opts: &TransformOptions,
) -> Result<[GridField<T>; 3]> {
    let grid = b.grid().clone();
    check_resolution(&grid, grid.points(), scale, opts.min_cap_nodes)?;
    let kernel = ScalingKernel::at_scale(scale, opts.orders)?;
    split_parts(&grid, convolve_tensor(&kernel, b, grid.points(), false)?)
}

/// All three parts of `R_J b` in one pass.
pub fn wavelet_transform_all<T: Real>(
    scale: u32,
    b: &GridField<T>,
    opts: &TransformOptions,
) -> Result<[GridField<T>; 3]> {
    let grid = b.grid().clone();
    check_resolution(&grid, grid.points(), scale + 1, opts.min_cap_nodes)?;
    let kernel = WaveletKernel::new(scale, opts.orders)?;
    split_parts(&grid, convolve_tensor(&kernel, b, grid.points(), true)?)
}

fn split_parts<T: Real>(
    grid: &Arc<EquiangularGrid<T>>,
    raw: Vec<[Vec3<T>; 3]>,
) -> Result<[GridField<T>; 3]> {
    let mut cols: [Vec<Vec3<T>>; 3] = Default::default();
    for r in raw {
        for (c, v) in cols.iter_mut().zip(r) {
            c.push(v);
        }
    }
    let [a, b, c] = cols;
    Ok([part_field(grid, a)?, part_field(grid, b)?, part_field(grid, c)?])
}

fn sum_parts<T: Real>(a: &[GridField<T>; 3], b: &[GridField<T>; 3]) -> Result<[GridField<T>; 3]> {
    Ok([a[0].add(&b[0])?, a[1].add(&b[1])?, a[2].add(&b[2])?])
}

/// `∫ ξ·b(ξ) dω(ξ)` by grid quadrature.
pub fn radial_mean<T: Real>(b: &GridField<T>) -> Result<T> {
    integrate(&b.radial_component()?)
}

/// Output of [`separate`]: trend, per-scale details and the accumulated parts.
#[derive(Debug, Clone)]
pub struct SeparationResult<T> {
    pub j0: u32,
    pub jmax: u32,
    pub orders: KernelOrders,
    /// `P_{J0}^i b` for internal, external, toroidal.
    pub trend: [GridField<T>; 3],
    /// `R_j^i b` for `j = J0, …, Jmax − 1`.
    pub details: Vec<[GridField<T>; 3]>,
    /// `P_{Jmax}^i b = P_{J0}^i b + Σ_j R_j^i b`.
    pub parts: [GridField<T>; 3],
    /// `∫ ξ·b dω` of the input.
    pub radial_mean: T,
}

impl<T: Real> SeparationResult<T> {
    pub fn part(&self, part: Part) -> &GridField<T> {
        &self.parts[part.index()]
    }

    pub fn internal(&self) -> &GridField<T> {
        self.part(Part::Internal)
    }

    pub fn external(&self) -> &GridField<T> {
        self.part(Part::External)
    }

    pub fn toroidal(&self) -> &GridField<T> {
        self.part(Part::Toroidal)
    }

    /// `R_j b`, or `None` outside `J0 ≤ j < Jmax`.
    pub fn detail(&self, scale: u32) -> Option<&[GridField<T>; 3]> {
        scale
            .checked_sub(self.j0)
            .and_then(|k| self.details.get(k as usize))
    }

    /// `P_J b` reassembled from the trend and the details below `J`.
    pub fn partial(&self, scale: u32) -> Result<[GridField<T>; 3]> {
        if scale < self.j0 || scale > self.jmax {
            return Err(Error::Config(format!(
                "scale {scale} outside [{}, {}]",
                self.j0, self.jmax
            )));
        }
        let mut acc = self.trend.clone();
        for d in &self.details[..(scale - self.j0) as usize] {
            acc = sum_parts(&acc, d)?;
        }
        Ok(acc)
    }

    /// `(J, ρ_J)` for `J = J0, …, Jmax`.
    pub fn rho_schedule(&self) -> Vec<(u32, f64)> {
        (self.j0..=self.jmax).map(|j| (j, rho_of_scale(j))).collect()
    }

    /// `b − Σ_i P_{Jmax}^i b`.
    pub fn residual(&self, b: &GridField<T>) -> Result<GridField<T>> {
        b.sub(&self.parts[0].add(&self.parts[1])?.add(&self.parts[2])?)
    }
}

/// Separates `b` into internal, external and toroidal parts with the tree
/// algorithm: a global trend at `J0` followed by locally supported details up to `Jmax`.
pub fn separate<T: Real>(b: &GridField<T>, cfg: &SeparationConfig) -> Result<SeparationResult<T>> {
    cfg.validate()?;
    let grid = b.grid().clone();
    let mean = radial_mean(b)?;
    let tolerance = cfg.radial_mean_factor * b.sup_norm().as_f64() * 4.0 * PI;
    if !(mean.as_f64().abs() <= tolerance) {
        return Err(Error::RadialMean { mean: mean.as_f64(), tolerance });
    }
    check_resolution(&grid, grid.points(), cfg.jmax, cfg.transform.min_cap_nodes)?;

    let opts = &cfg.transform;
    let trend = scaling_transform_all(cfg.j0, b, opts)?;
    let mut parts = trend.clone();
    let mut details = Vec::with_capacity((cfg.jmax - cfg.j0) as usize);
    for j in cfg.j0..cfg.jmax {
        let d = wavelet_transform_all(j, b, opts)?;
        parts = sum_parts(&parts, &d)?;
        details.push(d);
    }
    Ok(SeparationResult {
        j0: cfg.j0,
        jmax: cfg.jmax,
        orders: opts.orders,
        trend,
        details,
        parts,
        radial_mean: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotation_matrix, UnitVector};
    use crate::harmonics::{apply_o, vsh_eval, HarmonicIndex, VshKind};
    use crate::quadrature::build_grid;

    fn grid(n: usize) -> Arc<EquiangularGrid<f64>> {
        Arc::new(build_grid(n, n, 1.0).unwrap())
    }

    fn ytilde(g: &Arc<EquiangularGrid<f64>>, i: u8, n: u32, k: u32) -> GridField<f64> {
        let kind = VshKind::tilde(i).unwrap();
        let idx = HarmonicIndex::new(n, k).unwrap();
        GridField::vector_from_fn(g.clone(), move |x| vsh_eval(kind, idx, x).unwrap())
    }

    fn sup_diff(a: &GridField<f64>, b: &GridField<f64>) -> f64 {
        a.sub(b).unwrap().sup_norm()
    }

    #[test]
    fn helmholtz_scalars_of_radial_field_vanish() {
        let g = grid(32);
        let idx = HarmonicIndex::new(2, 1).unwrap();
        let f = GridField::vector_from_fn(g.clone(), |x| apply_o(1, idx, x).unwrap());
        let h = helmholtz_scalars(&f, RegularizationConfig::from_scale(4, 2).unwrap()).unwrap();
        assert!(h.f2.sup_norm() < 1e-10 && h.f3.sup_norm() < 1e-10);
        let y = GridField::vector_from_fn(g, |x| *x.as_vec() * crate::harmonics::sh_eval(idx, x).unwrap());
        assert!(sup_diff(&h.f1, &y.radial_component().unwrap()) < 1e-14);
    }

    #[test]
    fn helmholtz_scalars_converge_for_tangential_fields() {
        let g = grid(48);
        let idx = HarmonicIndex::new(3, 1).unwrap();
        let y = GridField::scalar_from_fn(g.clone(), |x| crate::harmonics::sh_eval(idx, x).unwrap());
        let grad = GridField::vector_from_fn(g.clone(), |x| apply_o(2, idx, x).unwrap());
        let curl = GridField::vector_from_fn(g.clone(), |x| apply_o(3, idx, x).unwrap());
        let err = |f: &GridField<f64>, j: u32| {
            let h = helmholtz_scalars(f, RegularizationConfig::from_scale(j, 2).unwrap()).unwrap();
            (h, j)
        };
        let (coarse, _) = err(&grad, 4);
        let (fine, _) = err(&grad, 7);
        assert!(sup_diff(&fine.f2, &y) < sup_diff(&coarse.f2, &y));
        assert!(fine.f3.sup_norm() < 1e-10);
        let (means_2, means_3) = fine.tangential_means().unwrap();
        assert!(means_2.abs() < 1e-6 && means_3.abs() < 1e-6);
        let (c, _) = err(&curl, 7);
        assert!(sup_diff(&c.f3, &y) < 0.05);
        assert!(c.f2.sup_norm() < 1e-10);
    }

    #[test]
    fn zero_field_transforms_to_zero() {
        let g = grid(16);
        let z = GridField::vector(g.clone(), vec![Vec3::zero(); g.len()]).unwrap();
        let opts = TransformOptions::default();
        assert_eq!(scaling_transform(Part::Internal, 2, &z, &opts).unwrap().sup_norm(), 0.0);
        assert_eq!(wavelet_transform(Part::Toroidal, 2, &z, &opts).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn wavelet_equals_scaling_difference() {
        let g = grid(24);
        let b = ytilde(&g, 1, 2, 1).add(&ytilde(&g, 3, 3, 2)).unwrap();
        let opts = TransformOptions::default();
        for part in Part::ALL {
            let r = wavelet_transform(part, 3, &b, &opts).unwrap();
            let p4 = scaling_transform(part, 4, &b, &opts).unwrap();
            let p3 = scaling_transform(part, 3, &b, &opts).unwrap();
            assert!(sup_diff(&r, &p4.sub(&p3).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn under_resolution_names_the_cap() {
        let g = grid(16);
        let b = ytilde(&g, 1, 2, 1);
        let cfg = SeparationConfig { jmax: 9, ..Default::default() };
        match separate(&b, &cfg) {
            Err(Error::UnderResolved { scale, target, required, found, .. }) => {
                assert_eq!(scale, 9);
                assert_eq!(required, 9);
                assert!(found < 9);
                assert!(target < g.len());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn radial_mean_precondition() {
        let g = grid(16);
        let b = GridField::vector_from_fn(g, |x| *x.as_vec());
        let cfg = SeparationConfig { jmax: 3, ..Default::default() };
        assert!(matches!(separate(&b, &cfg), Err(Error::RadialMean { .. })));
        assert!(SeparationConfig { j0: 4, jmax: 3, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn separation_is_linear_and_telescopes() {
        let g = grid(24);
        let cfg = SeparationConfig { j0: 2, jmax: 4, ..Default::default() };
        let a = ytilde(&g, 1, 2, 1);
        let c = ytilde(&g, 2, 3, 4);
        let combo = a.axpby(2.0, &c, -0.5).unwrap();
        let sa = separate(&a, &cfg).unwrap();
        let sc = separate(&c, &cfg).unwrap();
        let s = separate(&combo, &cfg).unwrap();
        for p in Part::ALL {
            let lin = sa.part(p).axpby(2.0, sc.part(p), -0.5).unwrap();
            assert!(sup_diff(&lin, s.part(p)) < 1e-12);
        }
        let direct = scaling_transform_all(4, &combo, &cfg.transform).unwrap();
        for p in 0..3 {
            assert!(sup_diff(&direct[p], &s.parts[p]) < 1e-12);
        }
        assert_eq!(s.rho_schedule(), vec![(2, 0.25), (3, 0.125), (4, 0.0625)]);
        assert!(s.detail(3).is_some() && s.detail(4).is_none());
    }

    #[test]
    fn separation_commutes_with_grid_rotations() {
        let n = 24;
        let g = grid(n);
        let idx = [(1u8, 2u32, 2u32), (2, 3, 5), (3, 2, 4)];
        let f = |x: &UnitVector<f64>| {
            idx.iter().fold(Vec3::zero(), |acc, &(i, n, k)| {
                acc + vsh_eval(VshKind::tilde(i).unwrap(), HarmonicIndex::new(n, k).unwrap(), x).unwrap()
            })
        };
        let shift = 5;
        let angle = 2.0 * PI * shift as f64 / n as f64;
        let q = rotation_matrix(&Vec3::new(0.0, 0.0, 1.0), angle);
        let qt = q.transpose();
        let b = GridField::vector_from_fn(g.clone(), f);
        // (Qb)(ξ) = Q b(Qᵀξ)
        let rotated = GridField::vector_from_fn(g.clone(), |x| {
            q.mul_vec(&f(&UnitVector::new_unchecked(qt.mul_vec(x.as_vec()))))
        });
        let cfg = SeparationConfig { j0: 2, jmax: 4, ..Default::default() };
        let s = separate(&b, &cfg).unwrap();
        let sr = separate(&rotated, &cfg).unwrap();
        for p in Part::ALL {
            let plain = s.part(p).vectors().unwrap();
            let turned = sr.part(p).vectors().unwrap();
            for ring in 0..n {
                for k in 0..n {
                    let src = g.index(ring, k);
                    let dst = g.index(ring, (k + shift) % n);
                    assert!((q.mul_vec(&plain[src]) - turned[dst]).max_abs() < 1e-8);
                }
            }
        }
    }
}
