//! Small fixed-size vector and tensor types for kernel assembly.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    #[inline]
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// `self ⊗ o = self oᵀ`.
    #[inline]
    pub fn outer(&self, o: &Self) -> Mat3<T> {
        let a = self.to_array();
        let b = o.to_array();
        let mut m = [[T::zero(); 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i] * b[j];
            }
        }
        Mat3 { m }
    }

    pub fn max_abs(&self) -> T {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()), U::lit(self.z.as_f64()))
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Row-major 3×3 tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    #[inline]
    pub fn zero() -> Self {
        Self { m: [[T::zero(); 3]; 3] }
    }

    #[inline]
    pub fn identity() -> Self {
        Self::diagonal(T::one())
    }

    #[inline]
    pub fn diagonal(d: T) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.m[i][i] = d;
        }
        m
    }

    #[inline]
    pub fn from_rows(r0: Vec3<T>, r1: Vec3<T>, r2: Vec3<T>) -> Self {
        Self { m: [r0.to_array(), r1.to_array(), r2.to_array()] }
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        let r = |i: usize| self.m[i][0] * v.x + self.m[i][1] * v.y + self.m[i][2] * v.z;
        Vec3::new(r(0), r(1), r(2))
    }

    /// `vᵀ M`.
    #[inline]
    pub fn left_mul_vec(&self, v: &Vec3<T>) -> Vec3<T> {
        self.transpose().mul_vec(v)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = T::zero();
                for k in 0..3 {
                    s = s + self.m[i][k] * o.m[k][j];
                }
                r.m[i][j] = s;
            }
        }
        r
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        let mut r = *self;
        for row in r.m.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        r
    }

    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().flat_map(|r| r.iter()).all(|v| *v == T::zero())
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = self.m[i][j] + o.m[i][j];
            }
        }
        r
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] = self.m[i][j] - o.m[i][j];
            }
        }
        r
    }
}

impl<T: Real> Neg for Mat3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul<T> for Mat3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

/// A point ξ on the unit sphere Ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector<T>(Vec3<T>);

impl<T: Real> UnitVector<T> {
    /// Accepts `v` if `| |v| - 1 |` is within the scalar's unit tolerance.
    pub fn new(v: Vec3<T>) -> Result<Self> {
        let n = v.norm();
        if !v.is_finite() || (n - T::one()).abs() > T::unit_tolerance() {
            return Err(Error::Domain(format!(
                "expected a unit vector, got |v| = {}",
                n.as_f64()
            )));
        }
        Ok(Self(v))
    }

    /// Wraps `v` without checking its length.
    #[inline]
    pub fn new_unchecked(v: Vec3<T>) -> Self {
        Self(v)
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalize(v: Vec3<T>) -> Result<Self> {
        let n = v.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self(v.scale(n.recip())))
    }

    /// Point with colatitude `theta` and longitude `phi` (radians).
    pub fn from_spherical(theta: T, phi: T) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self(Vec3::new(st * cp, st * sp, ct))
    }

    pub fn north_pole() -> Self {
        Self(Vec3::new(T::zero(), T::zero(), T::one()))
    }

    #[inline]
    pub fn as_vec(&self) -> &Vec3<T> {
        &self.0
    }

    #[inline]
    pub fn into_vec(self) -> Vec3<T> {
        self.0
    }

    /// Colatitude θ ∈ [0, π] and longitude φ ∈ (−π, π]; φ = 0 at the poles.
    pub fn spherical(&self) -> (T, T) {
        let v = &self.0;
        let rho = v.x.hypot(v.y);
        (rho.atan2(v.z), v.y.atan2(v.x))
    }

    /// Local orthonormal frame (e_r, e_θ, e_φ); at the poles the φ = 0 limit.
    pub fn local_frame(&self) -> (Vec3<T>, Vec3<T>, Vec3<T>) {
        let (theta, phi) = self.spherical();
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        (
            self.0,
            Vec3::new(ct * cp, ct * sp, -st),
            Vec3::new(-sp, cp, T::zero()),
        )
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.0.dot(&o.0)
    }
}

/// `1 − ξ·η` evaluated as `|ξ − η|²/2`, accurate for nearby points.
#[inline]
pub fn cap_distance<T: Real>(xi: &Vec3<T>, eta: &Vec3<T>) -> T {
    (*xi - *eta).norm_squared() * T::lit(0.5)
}

/// Rotation by `angle` about the unit axis `axis` (Rodrigues).
pub fn rotation_matrix<T: Real>(axis: &Vec3<T>, angle: T) -> Mat3<T> {
    let (s, c) = angle.sin_cos();
    let k = *axis;
    let kx = Mat3::from_rows(
        Vec3::new(T::zero(), -k.z, k.y),
        Vec3::new(k.z, T::zero(), -k.x),
        Vec3::new(-k.y, k.x, T::zero()),
    );
    Mat3::identity() + kx.scale(s) + kx.matmul(&kx).scale(T::one() - c)
}
