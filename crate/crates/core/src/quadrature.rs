//! Equiangular grids, their quadrature weights, and the convolution engine.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{cap_distance, UnitVector, Vec3};
use crate::harmonics::legendre_values;
use crate::kernels::TensorKernel;
use crate::scalar::Real;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, p_prev) = legendre_pair(n, x);
            dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(T::lit(x));
        weights.push(T::lit(2.0 / ((1.0 - x * x) * dp * dp)));
    }
    (nodes, weights)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Ring weights `w_j` (per node) with `Σ_j w_j · n_lon · P_l(cos θ_j) = 4π δ_{l0}`, `l < n_lat`.
fn ring_weights(colatitudes: &[f64], n_lon: usize) -> Result<Vec<f64>> {
    let n = colatitudes.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (j, theta) in colatitudes.iter().enumerate() {
        let p = legendre_values(n - 1, theta.cos());
        for (l, v) in p.into_iter().enumerate() {
            a[(l, j)] = v;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[0] = 2.0;
    let w = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Resolution("singular quadrature moment system".into()))?;
    let scale = 2.0 * PI / n_lon as f64;
    Ok(w.iter().map(|x| x * scale).collect())
}

/// Equiangular colatitude × longitude grid on a sphere of radius `R`, poles excluded.
///
/// Nodes are stored row-major with latitude as the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct EquiangularGrid<T> {
    n_lat: usize,
    n_lon: usize,
    radius: T,
    colatitudes: Vec<T>,
    longitudes: Vec<T>,
    weights: Vec<T>,
    points: Vec<Vec3<T>>,
}

impl<T: Real> EquiangularGrid<T> {
    pub fn new(n_lat: usize, n_lon: usize, radius: T) -> Result<Self> {
        if n_lat < 2 || n_lon < 4 {
            return Err(Error::Config(format!(
                "degenerate grid {n_lat}x{n_lon}: need n_lat ≥ 2 and n_lon ≥ 4"
            )));
        }
        if !(radius > T::zero() && radius.is_finite()) {
            return Err(Error::Config(format!("radius {} must be positive", radius.as_f64())));
        }
        let theta64: Vec<f64> = (0..n_lat)
            .map(|j| (j as f64 + 0.5) * PI / n_lat as f64)
            .collect();
        let w64 = ring_weights(&theta64, n_lon)?;
        if w64.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Resolution("non-positive quadrature weight".into()));
        }
        let colatitudes: Vec<T> = theta64.iter().map(|t| T::lit(*t)).collect();
        let longitudes: Vec<T> = (0..n_lon)
            .map(|k| T::lit(2.0 * PI * k as f64 / n_lon as f64))
            .collect();
        let mut points = Vec::with_capacity(n_lat * n_lon);
        for &th in &colatitudes {
            for &ph in &longitudes {
                points.push(UnitVector::from_spherical(th, ph).into_vec());
            }
        }
        Ok(Self {
            n_lat,
            n_lon,
            radius,
            colatitudes,
            longitudes,
            weights: w64.into_iter().map(T::lit).collect(),
            points,
        })
    }

    #[inline]
    pub fn n_lat(&self) -> usize {
        self.n_lat
    }

    #[inline]
    pub fn n_lon(&self) -> usize {
        self.n_lon
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_lat * self.n_lon
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn colatitudes(&self) -> &[T] {
        &self.colatitudes
    }

    pub fn longitudes(&self) -> &[T] {
        &self.longitudes
    }

    /// One weight per latitude ring, applied to each node of the ring.
    pub fn ring_weights(&self) -> &[T] {
        &self.weights
    }

    /// Highest degree `L` such that products `Y_{n,k} Y_{m,l}` with `n + m ≤ L` integrate exactly.
    pub fn declared_degree(&self) -> u32 {
        (self.n_lat.min(self.n_lon) - 1) as u32
    }

    #[inline]
    pub fn index(&self, ring: usize, k: usize) -> usize {
        ring * self.n_lon + k
    }

    #[inline]
    pub fn ring_of(&self, idx: usize) -> usize {
        idx / self.n_lon
    }

    #[inline]
    pub fn weight(&self, idx: usize) -> T {
        self.weights[idx / self.n_lon]
    }

    #[inline]
    pub fn point(&self, idx: usize) -> &Vec3<T> {
        &self.points[idx]
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn unit(&self, idx: usize) -> UnitVector<T> {
        UnitVector::new_unchecked(self.points[idx])
    }

    /// `(θ, φ)` of node `idx`.
    pub fn spherical(&self, idx: usize) -> (T, T) {
        (self.colatitudes[idx / self.n_lon], self.longitudes[idx % self.n_lon])
    }

    /// Node index ranges, in storage order, covering every node with `1 − ξ·η < ρ`.
    ///
    /// The ranges may contain a few nodes just outside the cap.
    pub fn cap_ranges(&self, center: &Vec3<T>, rho: T) -> Vec<std::ops::Range<usize>> {
        let one = T::one();
        let half_angle = (one - rho).max(-one).acos();
        let (theta_c, _) = UnitVector::new_unchecked(*center).spherical();
        let dtheta = T::lit(PI / self.n_lat as f64);
        let dphi = T::lit(2.0 * PI / self.n_lon as f64);
        let phi_c = center.y.atan2(center.x);
        let (ct, st) = (theta_c.cos(), theta_c.sin());
        let mut out = Vec::new();
        for (j, &th) in self.colatitudes.iter().enumerate() {
            if (th - theta_c).abs() > half_angle + dtheta {
                continue;
            }
            let denom = st * th.sin();
            let bound = if denom > T::lit(1e-300) {
                (one - rho - ct * th.cos()) / denom
            } else {
                -T::lit(2.0)
            };
            let row = j * self.n_lon;
            if bound <= -one + T::lit(1e-12) {
                out.push(row..row + self.n_lon);
                continue;
            }
            let width = if bound >= one { T::zero() } else { bound.acos() };
            let lo = ((phi_c - width) / dphi).floor().to_i64().unwrap_or(0) - 1;
            let hi = ((phi_c + width) / dphi).ceil().to_i64().unwrap_or(0) + 1;
            if hi - lo + 1 >= self.n_lon as i64 {
                out.push(row..row + self.n_lon);
                continue;
            }
            let n = self.n_lon as i64;
            let (a, b) = (lo.rem_euclid(n) as usize, hi.rem_euclid(n) as usize);
            if a <= b {
                out.push(row + a..row + b + 1);
            } else {
                out.push(row..row + b + 1);
                out.push(row + a..row + self.n_lon);
            }
        }
        out
    }

    /// Number of nodes with `1 − ξ·η < ρ`.
    pub fn count_in_cap(&self, center: &Vec3<T>, rho: T) -> usize {
        self.cap_ranges(center, rho)
            .into_iter()
            .flatten()
            .filter(|&i| cap_distance(center, &self.points[i]) < rho)
            .count()
    }
}

/// Builds an equiangular grid of `n_lat × n_lon` nodes on the sphere of radius `R`.
pub fn build_grid<T: Real>(n_lat: usize, n_lon: usize, radius: T) -> Result<EquiangularGrid<T>> {
    EquiangularGrid::new(n_lat, n_lon, radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData<T> {
    Scalar(Vec<T>),
    /// Cartesian components in the global frame.
    Vector(Vec<Vec3<T>>),
}

/// Samples on every node of an [`EquiangularGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    grid: Arc<EquiangularGrid<T>>,
    data: FieldData<T>,
}

impl<T: Real> GridField<T> {
    pub fn scalar(grid: Arc<EquiangularGrid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "{} scalar samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data: FieldData::Scalar(values) })
    }

    pub fn vector(grid: Arc<EquiangularGrid<T>>, values: Vec<Vec3<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "{} vector samples for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite vector sample at node {i}")));
        }
        Ok(Self { grid, data: FieldData::Vector(values) })
    }

    pub fn scalar_from_fn(grid: Arc<EquiangularGrid<T>>, f: impl Fn(&UnitVector<T>) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.unit(i))).collect();
        Self { grid, data: FieldData::Scalar(values) }
    }

    pub fn vector_from_fn(
        grid: Arc<EquiangularGrid<T>>,
        f: impl Fn(&UnitVector<T>) -> Vec3<T>,
    ) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.unit(i))).collect();
        Self { grid, data: FieldData::Vector(values) }
    }

    pub fn zeros_like(&self) -> Self {
        let data = match &self.data {
            FieldData::Scalar(v) => FieldData::Scalar(vec![T::zero(); v.len()]),
            FieldData::Vector(v) => FieldData::Vector(vec![Vec3::zero(); v.len()]),
        };
        Self { grid: self.grid.clone(), data }
    }

    pub fn grid(&self) -> &Arc<EquiangularGrid<T>> {
        &self.grid
    }

    pub fn data(&self) -> &FieldData<T> {
        &self.data
    }

    pub fn kind(&self) -> FieldKind {
        match self.data {
            FieldData::Scalar(_) => FieldKind::Scalar,
            FieldData::Vector(_) => FieldKind::Vector,
        }
    }

    pub fn scalars(&self) -> Result<&[T]> {
        match &self.data {
            FieldData::Scalar(v) => Ok(v),
            FieldData::Vector(_) => Err(Error::Mismatch("expected a scalar field".into())),
        }
    }

    pub fn vectors(&self) -> Result<&[Vec3<T>]> {
        match &self.data {
            FieldData::Vector(v) => Ok(v),
            FieldData::Scalar(_) => Err(Error::Mismatch("expected a vector field".into())),
        }
    }

    pub fn into_vectors(self) -> Result<Vec<Vec3<T>>> {
        match self.data {
            FieldData::Vector(v) => Ok(v),
            FieldData::Scalar(_) => Err(Error::Mismatch("expected a vector field".into())),
        }
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::Mismatch("fields live on different grids".into()))
        }
    }

    /// `α·self + β·other`.
    pub fn axpby(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        self.check_same_grid(other)?;
        let data = match (&self.data, &other.data) {
            (FieldData::Scalar(a), FieldData::Scalar(b)) => {
                FieldData::Scalar(a.iter().zip(b).map(|(x, y)| alpha * *x + beta * *y).collect())
            }
            (FieldData::Vector(a), FieldData::Vector(b)) => {
                FieldData::Vector(a.iter().zip(b).map(|(x, y)| *x * alpha + *y * beta).collect())
            }
            _ => return Err(Error::Mismatch("scalar and vector fields cannot be combined".into())),
        };
        Ok(Self { grid: self.grid.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpby(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpby(T::one(), other, -T::one())
    }

    /// Largest absolute sample (Euclidean norm for vectors).
    pub fn sup_norm(&self) -> T {
        match &self.data {
            FieldData::Scalar(v) => v.iter().fold(T::zero(), |m, x| m.max(x.abs())),
            FieldData::Vector(v) => v.iter().fold(T::zero(), |m, x| m.max(x.norm())),
        }
    }

    /// `ξ·f(ξ)` at every node.
    pub fn radial_component(&self) -> Result<Self> {
        let v = self.vectors()?;
        let r = v.iter().zip(self.grid.points()).map(|(f, x)| f.dot(x)).collect();
        Self::scalar(self.grid.clone(), r)
    }
}

/// `Σ_nodes w·F` for a scalar field.
pub fn integrate<T: Real>(field: &GridField<T>) -> Result<T> {
    let v = field.scalars()?;
    let g = field.grid();
    Ok(v.chunks(g.n_lon())
        .zip(g.ring_weights())
        .map(|(ring, w)| *w * ring.iter().copied().sum::<T>())
        .sum())
}

/// `∫ f·g dω` by grid quadrature.
pub fn inner_product<T: Real>(f: &GridField<T>, g: &GridField<T>) -> Result<T> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let products: Vec<T> = match (f.data(), g.data()) {
        (FieldData::Scalar(a), FieldData::Scalar(b)) => a.iter().zip(b).map(|(x, y)| *x * *y).collect(),
        (FieldData::Vector(a), FieldData::Vector(b)) => a.iter().zip(b).map(|(x, y)| x.dot(y)).collect(),
        _ => return Err(Error::Mismatch("scalar and vector fields cannot be paired".into())),
    };
    integrate(&GridField::scalar(grid.clone(), products)?)
}

/// Convolves a vector field with an `N`-component tensor kernel:
/// `out_i(ξ) = Σ_η w(η) K_i(ξ, η) b(η)` for every target ξ.
///
/// With `truncate_to_support` only nodes in the kernel's support cap are visited,
/// in the same order as the full sum, so both variants agree exactly.
pub fn convolve_tensor<T, K, const N: usize>(
    kernel: &K,
    field: &GridField<T>,
    targets: &[Vec3<T>],
    truncate_to_support: bool,
) -> Result<Vec<[Vec3<T>; N]>>
where
    T: Real,
    K: TensorKernel<T, N>,
{
    let values = field.vectors()?;
    let grid = field.grid();
    let support = match (truncate_to_support, kernel.support()) {
        (false, _) => None,
        (true, Some(rho)) => Some(rho),
        (true, None) => {
            return Err(Error::Config(
                "truncation requested for a kernel without compact support".into(),
            ))
        }
    };
    let weighted: Vec<Vec3<T>> = values
        .iter()
        .enumerate()
        .map(|(i, b)| *b * grid.weight(i))
        .collect();
    let points = grid.points();

    let accumulate = |xi: &Vec3<T>, range: std::ops::Range<usize>, acc: &mut [Vec3<T>; N]| {
        for i in range {
            let k = kernel.eval(xi, &points[i]);
            for (a, m) in acc.iter_mut().zip(k.iter()) {
                *a += m.mul_vec(&weighted[i]);
            }
        }
    };

    Ok(targets
        .par_iter()
        .map(|xi| {
            let mut acc = [Vec3::zero(); N];
            match support {
                Some(rho) => {
                    for r in grid.cap_ranges(xi, rho) {
                        accumulate(xi, r, &mut acc);
                    }
                }
                None => accumulate(xi, 0..points.len(), &mut acc),
            }
            acc
        })
        .collect())
}

/// `out(ξ) = Σ_η w(η) k(ξ, η)·b(η)` for a vector kernel `k`.
pub fn convolve_vector<T, F>(kernel: F, field: &GridField<T>, targets: &[Vec3<T>]) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&Vec3<T>, &Vec3<T>) -> Vec3<T> + Sync,
{
    let values = field.vectors()?;
    let grid = field.grid();
    let points = grid.points();
    Ok(targets
        .par_iter()
        .map(|xi| {
            values
                .iter()
                .zip(points)
                .enumerate()
                .map(|(i, (b, eta))| kernel(xi, eta).dot(b) * grid.weight(i))
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::{sh_eval, HarmonicIndex};
    use crate::kernels::{KernelOrders, WaveletKernel};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, m: usize) -> Arc<EquiangularGrid<f64>> {
        Arc::new(build_grid(n, m, 1.0).unwrap())
    }

    /// Fejér's first rule, scaled to one node of a ring.
    fn fejer(n_lat: usize, n_lon: usize) -> Vec<f64> {
        (0..n_lat)
            .map(|j| {
                let th = (j as f64 + 0.5) * PI / n_lat as f64;
                let s: f64 = (1..=n_lat / 2)
                    .map(|k| (2.0 * k as f64 * th).cos() / (4.0 * (k * k) as f64 - 1.0))
                    .sum();
                2.0 / n_lat as f64 * (1.0 - 2.0 * s) * 2.0 * PI / n_lon as f64
            })
            .collect()
    }

    #[test]
    fn weights_sum_to_sphere_area() {
        let g = grid(8, 8);
        let total: f64 = g.ring_weights().iter().map(|w| w * 8.0).sum();
        assert_abs_diff_eq!(total, 4.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn weights_match_fejer_rule() {
        for &(n, m) in &[(8, 8), (17, 12), (64, 64), (128, 96)] {
            let g = grid(n, m);
            for (a, b) in g.ring_weights().iter().zip(fejer(n, m)) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn degenerate_grids_rejected() {
        assert!(build_grid::<f64>(1, 8, 1.0).is_err());
        assert!(build_grid::<f64>(8, 3, 1.0).is_err());
        assert!(build_grid::<f64>(8, 8, 0.0).is_err());
    }

    #[test]
    fn integrate_examples() {
        let g = grid(16, 16);
        let one = GridField::scalar_from_fn(g.clone(), |_| 1.0);
        assert_abs_diff_eq!(integrate(&one).unwrap(), 4.0 * PI, epsilon = 1e-12);
        let y = GridField::scalar_from_fn(g.clone(), |x| sh_eval(HarmonicIndex::new(3, 2).unwrap(), x).unwrap());
        assert_abs_diff_eq!(integrate(&y).unwrap(), 0.0, epsilon = 1e-9);
        let z2 = GridField::scalar_from_fn(g, |x| x.as_vec().z * x.as_vec().z);
        assert_abs_diff_eq!(integrate(&z2).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn orthonormality_examples() {
        let g = grid(64, 64);
        let y = |n, k| GridField::scalar_from_fn(g.clone(), move |x| sh_eval(HarmonicIndex::new(n, k).unwrap(), x).unwrap());
        assert_abs_diff_eq!(inner_product(&y(5, 3), &y(5, 3)).unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(inner_product(&y(4, 2), &y(6, 2)).unwrap(), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(inner_product(&y(2, 1), &y(2, 1)).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn exactness_up_to_declared_degree() {
        let g = grid(12, 14);
        let l = g.declared_degree();
        assert_eq!(l, 11);
        let idx: Vec<_> = HarmonicIndex::all_up_to(l).collect();
        let fields: Vec<_> = idx
            .iter()
            .map(|i| GridField::scalar_from_fn(g.clone(), |x| sh_eval(*i, x).unwrap()))
            .collect();
        for (a, ia) in idx.iter().enumerate() {
            for (b, ib) in idx.iter().enumerate().skip(a) {
                if ia.degree() + ib.degree() > l {
                    continue;
                }
                let v = inner_product(&fields[a], &fields[b]).unwrap();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-10, "{ia:?} {ib:?}: {v}");
            }
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(6);
        let s: f64 = w.iter().sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-14);
        let m10: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_abs_diff_eq!(m10, 2.0 / 11.0, epsilon = 1e-14);
    }

    #[test]
    fn cap_ranges_cover_cap() {
        let g = grid(40, 56);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let c = UnitVector::from_spherical(rng.gen_range(0.0..PI), rng.gen_range(-PI..PI)).into_vec();
            let rho = 2f64.powi(-rng.gen_range(0..8));
            let mut covered = vec![false; g.len()];
            for r in g.cap_ranges(&c, rho) {
                for i in r {
                    assert!(!covered[i]);
                    covered[i] = true;
                }
            }
            for i in 0..g.len() {
                if cap_distance(&c, g.point(i)) < rho {
                    assert!(covered[i], "node {i} missed");
                }
            }
        }
    }

    fn random_field(g: &Arc<EquiangularGrid<f64>>, seed: u64) -> GridField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..g.len())
            .map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        GridField::vector(g.clone(), v).unwrap()
    }

    #[test]
    fn truncated_convolution_is_exact() {
        let g = grid(24, 24);
        let f = random_field(&g, 1);
        let w = WaveletKernel::<f64>::new(3, KernelOrders::default()).unwrap();
        let full = convolve_tensor(&w, &f, g.points(), false).unwrap();
        let trunc = convolve_tensor(&w, &f, g.points(), true).unwrap();
        for (a, b) in full.iter().zip(&trunc) {
            for i in 0..3 {
                assert!((a[i] - b[i]).max_abs() <= 1e-13);
            }
        }
    }

    #[test]
    fn truncation_requires_compact_support() {
        let g = grid(8, 8);
        let f = random_field(&g, 2);
        let k = crate::kernels::ScalingKernel::<f64>::at_scale(2, KernelOrders::default()).unwrap();
        assert!(matches!(convolve_tensor(&k, &f, g.points(), true), Err(Error::Config(_))));
    }

    #[test]
    fn convolution_is_linear() {
        let g = grid(16, 16);
        let f = random_field(&g, 3);
        let h = random_field(&g, 4);
        let w = WaveletKernel::<f64>::new(2, KernelOrders::default()).unwrap();
        let combo = f.axpby(0.7, &h, -1.3).unwrap();
        let a = convolve_tensor(&w, &f, g.points(), true).unwrap();
        let b = convolve_tensor(&w, &h, g.points(), true).unwrap();
        let c = convolve_tensor(&w, &combo, g.points(), true).unwrap();
        for i in 0..g.len() {
            for p in 0..3 {
                let lin = a[i][p] * 0.7 + b[i][p] * -1.3;
                assert!((lin - c[i][p]).max_abs() < 1e-12);
            }
        }
        let zero = f.zeros_like();
        let z = convolve_tensor(&w, &zero, g.points(), true).unwrap();
        assert!(z.iter().all(|t| t.iter().all(|v| *v == Vec3::zero())));
    }
}
