//! Legendre polynomials, real orthonormal spherical harmonics and the two
//! vector spherical harmonic systems `y⁽ⁱ⁾ₙ,ₖ` and `ỹ⁽ⁱ⁾ₙ,ₖ`.
//!
//! Scalar harmonics use the fully normalized real basis without the
//! Condon–Shortley phase. Order index `k ∈ 1..=2n+1` maps to
//! `k = 1 → m = 0`, `k = 2m → cos(mφ)` and `k = 2m + 1 → sin(mφ)`.

use crate::error::{Error, Result};
use crate::geometry::{UnitVector, Vec3};
use crate::scalar::Real;

/// Degree `n` and order `k` of a scalar spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HarmonicIndex {
    degree: u32,
    order: u32,
}

impl HarmonicIndex {
    pub fn new(degree: u32, order: u32) -> Result<Self> {
        if order < 1 || order > 2 * degree + 1 {
            return Err(Error::Domain(format!(
                "order {order} outside 1..={} for degree {degree}",
                2 * degree + 1
            )));
        }
        Ok(Self { degree, order })
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.degree
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Azimuthal wavenumber and whether the φ-dependence is `sin(mφ)`.
    #[inline]
    pub fn azimuthal(&self) -> (u32, bool) {
        match self.order {
            1 => (0, false),
            k if k % 2 == 0 => (k / 2, false),
            k => ((k - 1) / 2, true),
        }
    }

    /// All indices with degree `≤ lmax`, ordered by degree then order.
    pub fn all_up_to(lmax: u32) -> impl Iterator<Item = HarmonicIndex> {
        (0..=lmax).flat_map(|n| (1..=2 * n + 1).map(move |k| HarmonicIndex { degree: n, order: k }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VshBasis {
    /// `y⁽ⁱ⁾ = (μ⁽ⁱ⁾)^{-1/2} o⁽ⁱ⁾ Y`.
    Plain,
    /// `ỹ⁽ⁱ⁾ = (μ̃⁽ⁱ⁾)^{-1/2} õ⁽ⁱ⁾ Y`.
    Tilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VshKind {
    basis: VshBasis,
    i: u8,
}

impl VshKind {
    pub fn new(basis: VshBasis, i: u8) -> Result<Self> {
        if !(1..=3).contains(&i) {
            return Err(Error::Domain(format!("vector harmonic type {i} not in 1..=3")));
        }
        Ok(Self { basis, i })
    }

    pub fn plain(i: u8) -> Result<Self> {
        Self::new(VshBasis::Plain, i)
    }

    pub fn tilde(i: u8) -> Result<Self> {
        Self::new(VshBasis::Tilde, i)
    }

    #[inline]
    pub fn basis(&self) -> VshBasis {
        self.basis
    }

    #[inline]
    pub fn i(&self) -> u8 {
        self.i
    }

    /// Smallest admissible degree: 0 for type 1, 1 otherwise.
    #[inline]
    pub fn min_degree(&self) -> u32 {
        if self.i == 1 {
            0
        } else {
            1
        }
    }
}

/// Normalization constants μ⁽ⁱ⁾ₙ of the plain system.
pub fn mu<T: Real>(i: u8, n: u32) -> T {
    let nf = T::from_u32(n).unwrap();
    match i {
        1 => T::one(),
        _ => nf * (nf + T::one()),
    }
}

/// Normalization constants μ̃⁽ⁱ⁾ₙ of the tilde system.
pub fn mu_tilde<T: Real>(i: u8, n: u32) -> T {
    let nf = T::from_u32(n).unwrap();
    let two = T::lit(2.0);
    match i {
        1 => (nf + T::one()) * (two * nf + T::one()),
        2 => nf * (two * nf + T::one()),
        _ => nf * (nf + T::one()),
    }
}

/// Legendre polynomial `Pₙ(t)` by the three-term recurrence.
pub fn legendre<T: Real>(n: u32, t: T) -> Result<T> {
    if !(t.abs() <= T::one()) {
        return Err(Error::Domain(format!("Legendre argument {} outside [-1, 1]", t.as_f64())));
    }
    Ok(legendre_unchecked(n, t))
}

pub(crate) fn legendre_unchecked<T: Real>(n: u32, t: T) -> T {
    let (mut p0, mut p1) = (T::one(), t);
    if n == 0 {
        return p0;
    }
    for k in 2..=n {
        let kf = T::from_u32(k).unwrap();
        let p2 = ((kf + kf - T::one()) * t * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P₀(t), …, P_nmax(t)`.
pub fn legendre_values<T: Real>(nmax: usize, t: T) -> Vec<T> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(T::one());
    if nmax >= 1 {
        out.push(t);
    }
    for k in 2..=nmax {
        let kf = T::from_usize_exact(k);
        let v = ((kf + kf - T::one()) * t * out[k - 1] - (kf - T::one()) * out[k - 2]) / kf;
        out.push(v);
    }
    out
}

/// Evaluates `Σ cₙ Pₙ(t)` by Clenshaw's recurrence.
pub fn legendre_series<T: Real>(coeffs: &[T], t: T) -> T {
    let mut b1 = T::zero();
    let mut b2 = T::zero();
    for (k, c) in coeffs.iter().enumerate().rev() {
        let kf = T::from_usize_exact(k);
        let alpha = (kf + kf + T::one()) / (kf + T::one()) * t;
        let beta = (kf + T::one()) / (kf + T::lit(2.0));
        let b0 = *c + alpha * b1 - beta * b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}

/// `dPₙ/dt` on the open interval (−1, 1).
pub fn legendre_deriv<T: Real>(n: u32, t: T) -> Result<T> {
    if !(t.abs() < T::one()) {
        return Err(Error::Domain(format!(
            "Legendre derivative needs |t| < 1, got {}",
            t.as_f64()
        )));
    }
    if n == 0 {
        return Ok(T::zero());
    }
    let nf = T::from_u32(n).unwrap();
    let pn = legendre_unchecked(n, t);
    let pm = legendre_unchecked(n - 1, t);
    Ok(nf * (pm - t * pn) / (T::one() - t * t))
}

/// Column of 4π-normalized associated Legendre functions for fixed `m`.
///
/// Returns `(P̄ₙᵐ, ∂θ P̄ₙᵐ, m P̄ₙᵐ / sin θ)` at degree `n`.
fn assoc_legendre<T: Real>(n: u32, m: u32, cos_t: T, sin_t: T) -> (T, T, T) {
    debug_assert!(m <= n);
    let two = T::lit(2.0);
    let ff = |x: u32| T::from_u32(x).unwrap();
    if m == 0 {
        // m = 0: run the zonal recurrence, and the m = 1 column for the derivative.
        let pn = ff(2 * n + 1).sqrt() * legendre_unchecked(n, cos_t);
        if n == 0 {
            return (pn, T::zero(), T::zero());
        }
        let (p1, _, _) = assoc_legendre(n, 1, cos_t, sin_t);
        let d = -(ff(n) * ff(n + 1) / two).sqrt() * p1;
        return (pn, d, T::zero());
    }

    // Q̄ = P̄ / sin θ, regular at the poles.
    let mut q_mm = T::lit(3.0).sqrt();
    for i in 2..=m {
        q_mm = q_mm * (ff(2 * i + 1) / ff(2 * i)).sqrt() * sin_t;
    }
    let mut q_prev = T::zero();
    let mut q_cur = q_mm;
    for k in (m + 1)..=n {
        let (kf, mf) = (ff(k), ff(m));
        let a = ((two * kf - T::one()) * (two * kf + T::one()) / ((kf - mf) * (kf + mf))).sqrt();
        let b = if k == m + 1 {
            T::zero()
        } else {
            ((two * kf + T::one()) * (kf + mf - T::one()) * (kf - mf - T::one())
                / ((kf - mf) * (kf + mf) * (two * kf - T::lit(3.0))))
            .sqrt()
        };
        let q_next = a * cos_t * q_cur - b * q_prev;
        q_prev = q_cur;
        q_cur = q_next;
    }
    let (nf, mf) = (ff(n), ff(m));
    let f = ((nf * nf - mf * mf) * (two * nf + T::one()) / (two * nf - T::one())).sqrt();
    let q_below = if n > m { q_prev } else { T::zero() };
    let d = nf * cos_t * q_cur - f * q_below;
    (q_cur * sin_t, d, mf * q_cur)
}

/// Value and tangential derivatives of `Y_{n,k}` at `xi`.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicSample<T> {
    pub value: T,
    /// Surface gradient `∇*Y`.
    pub grad: Vec3<T>,
    /// Surface curl gradient `L*Y = ξ ∧ ∇*Y`.
    pub curl: Vec3<T>,
}

/// Evaluates `Y_{n,k}`, `∇*Y_{n,k}` and `L*Y_{n,k}` at `xi`.
pub fn sh_sample<T: Real>(idx: HarmonicIndex, xi: &UnitVector<T>) -> HarmonicSample<T> {
    let (theta, phi) = xi.spherical();
    let (sin_t, cos_t) = theta.sin_cos();
    let (m, is_sin) = idx.azimuthal();
    let (p, dp, mq) = assoc_legendre(idx.degree(), m, cos_t, sin_t);
    let mphi = T::from_u32(m).unwrap() * phi;
    let (s, c) = mphi.sin_cos();
    let norm = (T::lit(4.0) * T::PI()).sqrt().recip();
    let (trig, dtrig) = if is_sin { (s, c) } else { (c, -s) };
    let value = p * trig * norm;
    let d_theta = dp * trig * norm;
    // (1/sin θ) ∂φ Y
    let d_phi = mq * dtrig * norm;
    let (_, e_theta, e_phi) = xi.local_frame();
    HarmonicSample {
        value,
        grad: e_theta * d_theta + e_phi * d_phi,
        curl: e_phi * d_theta - e_theta * d_phi,
    }
}

fn check_unit<T: Real>(xi: &UnitVector<T>) -> Result<()> {
    if (xi.as_vec().norm() - T::one()).abs() > T::unit_tolerance() {
        return Err(Error::Domain("point is not on the unit sphere".into()));
    }
    Ok(())
}

/// Real fully normalized spherical harmonic `Y_{n,k}(ξ)`.
pub fn sh_eval<T: Real>(idx: HarmonicIndex, xi: &UnitVector<T>) -> Result<T> {
    check_unit(xi)?;
    Ok(sh_sample(idx, xi).value)
}

/// Applies `o⁽ⁱ⁾` to `Y_{n,k}` at `xi` (no normalization).
pub fn apply_o<T: Real>(i: u8, idx: HarmonicIndex, xi: &UnitVector<T>) -> Result<Vec3<T>> {
    let s = sh_sample(idx, xi);
    match i {
        1 => Ok(*xi.as_vec() * s.value),
        2 => Ok(s.grad),
        3 => Ok(s.curl),
        _ => Err(Error::Domain(format!("operator index {i} not in 1..=3"))),
    }
}

/// Applies `õ⁽ⁱ⁾` to `Y_{n,k}` at `xi`, using `D Y_{n,k} = (n + ½) Y_{n,k}`.
pub fn apply_o_tilde<T: Real>(i: u8, idx: HarmonicIndex, xi: &UnitVector<T>) -> Result<Vec3<T>> {
    let s = sh_sample(idx, xi);
    let n = T::from_u32(idx.degree()).unwrap();
    let half = T::lit(0.5);
    let d = n + half;
    match i {
        1 => Ok(*xi.as_vec() * ((d + half) * s.value) - s.grad),
        2 => Ok(*xi.as_vec() * ((d - half) * s.value) + s.grad),
        3 => Ok(s.curl),
        _ => Err(Error::Domain(format!("operator index {i} not in 1..=3"))),
    }
}

/// Unit-norm vector spherical harmonic of the given kind.
pub fn vsh_eval<T: Real>(kind: VshKind, idx: HarmonicIndex, xi: &UnitVector<T>) -> Result<Vec3<T>> {
    check_unit(xi)?;
    let n = idx.degree();
    if n < kind.min_degree() {
        return Err(Error::Domain(format!(
            "vector harmonic of type {} needs degree ≥ {}, got {n}",
            kind.i(),
            kind.min_degree()
        )));
    }
    let (v, norm) = match kind.basis() {
        VshBasis::Plain => (apply_o(kind.i(), idx, xi)?, mu::<T>(kind.i(), n)),
        VshBasis::Tilde => (apply_o_tilde(kind.i(), idx, xi)?, mu_tilde::<T>(kind.i(), n)),
    };
    Ok(v * norm.sqrt().recip())
}
