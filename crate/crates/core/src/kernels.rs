//! Zonal kernels on the sphere and their space-domain regularizations.
//!
//! All profiles are functions of `t = ξ·η`. Internally they are evaluated in
//! terms of `u = 1 − t`, which callers obtain from [`cap_distance`] to keep
//! nearby points accurate. A regularized profile replaces the kernel inside
//! the cap `u < ρ` by its Taylor polynomial about `t₀ = 1 − ρ`.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{cap_distance, Mat3, UnitVector, Vec3};
use crate::quadrature::gauss_legendre;
use crate::scalar::Real;

/// Scale parameter ρ and Taylor order of a regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationConfig<T> {
    rho: T,
    taylor_order: usize,
    scale: Option<u32>,
}

impl<T: Real> RegularizationConfig<T> {
    pub fn new(rho: T, taylor_order: usize) -> Result<Self> {
        if !(rho > T::zero() && rho <= T::lit(2.0)) {
            return Err(Error::Config(format!("rho = {} outside (0, 2]", rho.as_f64())));
        }
        if taylor_order < 1 {
            return Err(Error::Config("Taylor order must be at least 1".into()));
        }
        Ok(Self { rho, taylor_order, scale: None })
    }

    /// ρ = 2^{-J}.
    pub fn from_scale(scale: u32, taylor_order: usize) -> Result<Self> {
        let rho = T::lit(2f64.powi(-(scale as i32)));
        let mut cfg = Self::new(rho, taylor_order)?;
        cfg.scale = Some(scale);
        Ok(cfg)
    }

    #[inline]
    pub fn rho(&self) -> T {
        self.rho
    }

    #[inline]
    pub fn taylor_order(&self) -> usize {
        self.taylor_order
    }

    #[inline]
    pub fn scale(&self) -> Option<u32> {
        self.scale
    }
}

/// Taylor orders of the two regularized kernels entering the tensor kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct KernelOrders {
    pub green: usize,
    pub single_layer: usize,
}

impl Default for KernelOrders {
    fn default() -> Self {
        Self { green: 2, single_layer: 1 }
    }
}

impl KernelOrders {
    pub fn validate(&self) -> Result<()> {
        if self.green < 2 {
            return Err(Error::Config(
                "Green regularization must be at least C² (order ≥ 2)".into(),
            ));
        }
        if self.single_layer < 1 {
            return Err(Error::Config(
                "single layer regularization must be at least C¹ (order ≥ 1)".into(),
            ));
        }
        Ok(())
    }
}

fn inv_4pi<T: Real>() -> T {
    T::lit(0.25 / PI)
}

fn inv_2pi<T: Real>() -> T {
    T::lit(0.5 / PI)
}

fn check_t<T: Real>(t: T) -> Result<()> {
    if !(t.abs() <= T::one()) {
        return Err(Error::Domain(format!("t = {} outside [-1, 1]", t.as_f64())));
    }
    Ok(())
}

/// k-th t-derivative of G(Δ*; t), as a function of u = 1 − t.
fn green_derivative<T: Real>(k: usize, u: T) -> T {
    if k == 0 {
        return (u.ln() + T::lit(1.0 - LN_2)) * inv_4pi::<T>();
    }
    let fact: f64 = (1..k).map(|i| i as f64).product();
    -T::lit(fact) * inv_4pi::<T>() / u.powi(k as i32)
}

/// k-th t-derivative of S(t) = (1/√2)(1 − t)^{-1/2}, as a function of u.
fn single_layer_derivative<T: Real>(k: usize, u: T) -> T {
    // (1/√2) · (1·3·…·(2k−1)) / 2ᵏ
    let mut c = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..k {
        c *= (2 * j + 1) as f64 / 2.0;
    }
    T::lit(c) * u.powf(-T::lit(0.5 + k as f64))
}

/// Green's function of the Beltrami operator,
/// `G(Δ*; t) = (1/4π) ln(1 − t) + (1/4π)(1 − ln 2)`.
pub fn green_eval<T: Real>(t: T) -> Result<T> {
    check_t(t)?;
    if t >= T::one() {
        return Err(Error::Singularity { t: t.as_f64() });
    }
    Ok(green_derivative(0, T::one() - t))
}

/// Single layer kernel `S(t) = (1/√2)(1 − t)^{-1/2}`.
pub fn single_layer_eval<T: Real>(t: T) -> Result<T> {
    check_t(t)?;
    if t >= T::one() {
        return Err(Error::Singularity { t: t.as_f64() });
    }
    Ok(single_layer_derivative(0, T::one() - t))
}

fn dinv_green_u<T: Real>(u: T) -> T {
    // (1+t)(½ − 1/(1−2S)) = (1+t)/2 + 2√a(1+√a), a = (1−t)/2; finite on all of [−1, 1].
    let a = u * T::lit(0.5);
    let r = a.sqrt();
    let arg = (T::lit(2.0) - u) * T::lit(0.5) + T::lit(2.0) * r * (T::one() + r);
    (arg.ln() - T::one()) * inv_2pi::<T>()
}

/// `D⁻¹_ξ G(Δ*; ξ·η)` in closed form, `D = (−Δ* + ¼)^{1/2}`.
///
/// The closed form is evaluated in an algebraically equivalent shape without
/// the removable `0·∞` at `t = −1`, where it equals `(2 ln 2 − 1)/(2π)`.
pub fn dinv_green_eval<T: Real>(t: T) -> Result<T> {
    check_t(t)?;
    Ok(dinv_green_u(T::one() - t))
}

/// `(1/2π)(½ − S − 1/(2 + 4S))`: t-derivative of the D⁻¹G profile as a function of S.
#[inline]
fn dinv_slope<T: Real>(s: T) -> T {
    (T::lit(0.5) - s - (T::lit(2.0) + T::lit(4.0) * s).recip()) * inv_2pi::<T>()
}

#[inline]
fn dinv_slope_deriv<T: Real>(s: T, ds: T) -> T {
    let den = T::lit(2.0) + T::lit(4.0) * s;
    (-ds + T::lit(4.0) * ds / (den * den)) * inv_2pi::<T>()
}

/// Value and first two t-derivatives of a zonal profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalSample<T> {
    pub value: T,
    pub deriv1: T,
    pub deriv2: T,
}

/// A one-dimensional profile `t ↦ K(t)` with its first two derivatives.
pub trait ZonalFunction<T: Real> {
    fn sample(&self, t: T) -> Result<ZonalSample<T>>;
}

impl<T: Real, F> ZonalFunction<T> for F
where
    F: Fn(T) -> ZonalSample<T>,
{
    fn sample(&self, t: T) -> Result<ZonalSample<T>> {
        check_t(t)?;
        Ok(self(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Green,
    SingleLayer,
    /// `D⁻¹G`; its regularization runs through the regularized single layer kernel.
    DinvGreen,
}

#[derive(Debug, Clone, PartialEq)]
struct Taylor<T> {
    rho: T,
    /// k-th derivative at t₀ divided by k!.
    coeffs: Vec<T>,
}

impl<T: Real> Taylor<T> {
    fn new(rho: T, order: usize, derivative: impl Fn(usize, T) -> T) -> Self {
        let mut fact = 1.0;
        let coeffs = (0..=order)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                derivative(k, rho) / T::lit(fact)
            })
            .collect();
        Self { rho, coeffs }
    }

    /// Value and derivatives at `t = t₀ + d`.
    #[inline]
    fn eval(&self, d: T) -> (T, T, T) {
        let mut v = T::zero();
        let mut d1 = T::zero();
        let mut d2 = T::zero();
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            let kf = T::from_usize_exact(k);
            v = v * d + *c;
            if k >= 1 {
                d1 = d1 * d + kf * *c;
            }
            if k >= 2 {
                d2 = d2 * d + kf * (kf - T::one()) * *c;
            }
        }
        (v, d1, d2)
    }
}

/// A zonal kernel profile, optionally regularized inside the cap `1 − t < ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZonalProfile<T> {
    kind: ProfileKind,
    taylor: Option<Taylor<T>>,
    /// D⁻¹G at t₀, used to integrate the regularized slope inside the cap.
    anchor: T,
}

impl<T: Real> ZonalProfile<T> {
    pub fn new(kind: ProfileKind, reg: Option<RegularizationConfig<T>>) -> Self {
        let taylor = reg.map(|cfg| {
            let n = cfg.taylor_order();
            match kind {
                ProfileKind::Green => Taylor::new(cfg.rho(), n, green_derivative),
                ProfileKind::SingleLayer | ProfileKind::DinvGreen => {
                    Taylor::new(cfg.rho(), n, single_layer_derivative)
                }
            }
        });
        let anchor = match (&taylor, kind) {
            (Some(tay), ProfileKind::DinvGreen) => dinv_green_u(tay.rho),
            _ => T::zero(),
        };
        Self { kind, taylor, anchor }
    }

    pub fn green(reg: Option<RegularizationConfig<T>>) -> Self {
        Self::new(ProfileKind::Green, reg)
    }

    pub fn single_layer(reg: Option<RegularizationConfig<T>>) -> Self {
        Self::new(ProfileKind::SingleLayer, reg)
    }

    pub fn dinv_green(reg: Option<RegularizationConfig<T>>) -> Self {
        Self::new(ProfileKind::DinvGreen, reg)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn rho(&self) -> Option<T> {
        self.taylor.as_ref().map(|t| t.rho)
    }

    #[inline]
    fn in_cap(&self, u: T) -> Option<&Taylor<T>> {
        self.taylor.as_ref().filter(|tay| u < tay.rho)
    }

    /// Single layer value and slope at `u`, regularized when configured.
    #[inline]
    fn single_layer_u(&self, u: T) -> (T, T, T) {
        match self.in_cap(u) {
            Some(tay) => tay.eval(tay.rho - u),
            None => (
                single_layer_derivative(0, u),
                single_layer_derivative(1, u),
                single_layer_derivative(2, u),
            ),
        }
    }

    /// Samples the profile at `u = 1 − t` without domain checks.
    ///
    /// Unregularized singular profiles return non-finite values at `u = 0`.
    #[inline]
    pub fn sample_u(&self, u: T) -> ZonalSample<T> {
        match self.kind {
            ProfileKind::Green => {
                let (value, deriv1, deriv2) = match self.in_cap(u) {
                    Some(tay) => tay.eval(tay.rho - u),
                    None => (
                        green_derivative(0, u),
                        green_derivative(1, u),
                        green_derivative(2, u),
                    ),
                };
                ZonalSample { value, deriv1, deriv2 }
            }
            ProfileKind::SingleLayer => {
                let (value, deriv1, deriv2) = self.single_layer_u(u);
                ZonalSample { value, deriv1, deriv2 }
            }
            ProfileKind::DinvGreen => {
                let (s, ds, _) = self.single_layer_u(u);
                let value = match self.in_cap(u) {
                    Some(tay) => self.anchor + self.integrate_slope(tay.rho, u),
                    None => dinv_green_u(u),
                };
                ZonalSample {
                    value,
                    deriv1: dinv_slope(s),
                    deriv2: dinv_slope_deriv(s, ds),
                }
            }
        }
    }

    /// ∫ slope dt from t₀ = 1 − ρ to t = 1 − u.
    fn integrate_slope(&self, rho: T, u: T) -> T {
        let (nodes, weights) = gauss_legendre::<T>(10);
        let half = (rho - u) * T::lit(0.5);
        let mid = (rho + u) * T::lit(0.5);
        nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| {
                let (s, _, _) = self.single_layer_u(mid - half * *x);
                *w * dinv_slope(s)
            })
            .sum::<T>()
            * half
    }

    /// One-sided limits at the breakpoint `t₀ = 1 − ρ`: `(from below, from above)`.
    ///
    /// `None` for unregularized profiles.
    pub fn breakpoint_limits(&self) -> Option<(ZonalSample<T>, ZonalSample<T>)> {
        let tay = self.taylor.as_ref()?;
        let rho = tay.rho;
        let outer = match self.kind {
            ProfileKind::Green => ZonalSample {
                value: green_derivative(0, rho),
                deriv1: green_derivative(1, rho),
                deriv2: green_derivative(2, rho),
            },
            ProfileKind::SingleLayer => ZonalSample {
                value: single_layer_derivative(0, rho),
                deriv1: single_layer_derivative(1, rho),
                deriv2: single_layer_derivative(2, rho),
            },
            ProfileKind::DinvGreen => {
                let (s, ds) = (single_layer_derivative(0, rho), single_layer_derivative(1, rho));
                ZonalSample {
                    value: dinv_green_u(rho),
                    deriv1: dinv_slope(s),
                    deriv2: dinv_slope_deriv(s, ds),
                }
            }
        };
        let (v, d1, d2) = tay.eval(T::zero());
        let inner = match self.kind {
            ProfileKind::DinvGreen => ZonalSample {
                value: self.anchor,
                deriv1: dinv_slope(v),
                deriv2: dinv_slope_deriv(v, d1),
            },
            _ => ZonalSample { value: v, deriv1: d1, deriv2: d2 },
        };
        Some((outer, inner))
    }

    fn singular_at(&self, t: T) -> bool {
        self.taylor.is_none() && t >= T::one()
    }

    pub fn value(&self, t: T) -> Result<T> {
        self.sample(t).map(|s| s.value)
    }

    pub fn deriv1(&self, t: T) -> Result<T> {
        self.sample(t).map(|s| s.deriv1)
    }

    pub fn deriv2(&self, t: T) -> Result<T> {
        self.sample(t).map(|s| s.deriv2)
    }
}

impl<T: Real> ZonalFunction<T> for ZonalProfile<T> {
    fn sample(&self, t: T) -> Result<ZonalSample<T>> {
        check_t(t)?;
        if self.singular_at(t) {
            return Err(Error::Singularity { t: t.as_f64() });
        }
        Ok(self.sample_u(T::one() - t))
    }
}

/// Regularized Green's function profile of the given order.
pub fn green_reg_profile<T: Real>(cfg: RegularizationConfig<T>) -> ZonalProfile<T> {
    ZonalProfile::green(Some(cfg))
}

/// Regularized single layer profile of the given order.
pub fn single_layer_reg_profile<T: Real>(cfg: RegularizationConfig<T>) -> ZonalProfile<T> {
    ZonalProfile::single_layer(Some(cfg))
}

/// Surface derivatives of a zonal kernel `F(ξ·η)` taken at ξ (and η for the tensors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOps<T> {
    /// `∇*_ξ F`
    pub grad_xi: Vec3<T>,
    /// `L*_ξ F`
    pub curl_xi: Vec3<T>,
    /// `Δ*_ξ F`
    pub lap_xi: T,
    /// `∇*_ξ ⊗ ∇*_η F`
    pub grad_grad: Mat3<T>,
    /// `L*_ξ ⊗ L*_η F`
    pub curl_curl: Mat3<T>,
}

/// `∇*_ξ ⊗ ∇*_η F(ξ·η)` from the profile derivatives.
#[inline]
pub(crate) fn grad_grad<T: Real>(d1: T, d2: T, t: T, xi: &Vec3<T>, eta: &Vec3<T>) -> Mat3<T> {
    let a = *eta - *xi * t;
    let b = *xi - *eta * t;
    let bracket = Mat3::identity() - xi.outer(xi) - a.outer(eta);
    a.outer(&b).scale(d2) + bracket.scale(d1)
}

/// `L*_ξ ⊗ L*_η F(ξ·η)` from the profile derivatives.
#[inline]
pub(crate) fn curl_curl<T: Real>(d1: T, d2: T, t: T, xi: &Vec3<T>, eta: &Vec3<T>) -> Mat3<T> {
    let c = xi.cross(eta);
    // L*_ξ ⊗ (η ∧ ξ) = t I − η ⊗ ξ
    let bracket = Mat3::diagonal(t) - eta.outer(xi);
    c.outer(&(-c)).scale(d2) + bracket.scale(d1)
}

pub(crate) fn surface_ops_from<T: Real>(
    d1: T,
    d2: T,
    t: T,
    xi: &Vec3<T>,
    eta: &Vec3<T>,
) -> SurfaceOps<T> {
    SurfaceOps {
        grad_xi: (*eta - *xi * t) * d1,
        curl_xi: xi.cross(eta) * d1,
        lap_xi: (T::one() - t * t) * d2 - T::lit(2.0) * t * d1,
        grad_grad: grad_grad(d1, d2, t, xi, eta),
        curl_curl: curl_curl(d1, d2, t, xi, eta),
    }
}

/// Applies the zonal differentiation rules to `profile` at `t = ξ·η`.
pub fn zonal_surface_ops<T: Real, F: ZonalFunction<T>>(
    profile: &F,
    xi: &UnitVector<T>,
    eta: &UnitVector<T>,
) -> Result<SurfaceOps<T>> {
    let t = (T::one() - cap_distance(xi.as_vec(), eta.as_vec())).max(-T::one());
    let s = profile.sample(t)?;
    if !(s.deriv1.is_finite() && s.deriv2.is_finite()) {
        return Err(Error::Singularity { t: t.as_f64() });
    }
    Ok(surface_ops_from(s.deriv1, s.deriv2, t, xi.as_vec(), eta.as_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SVector {
    /// `s^ρ_{∇*}`
    Grad,
    /// `s^ρ_{L*}`
    Curl,
}

/// Regularized vector kernels `s^ρ_{∇*}(ξ, η)` and `s^ρ_{L*}(ξ, η)`.
///
/// `cfg` regularizes the single layer kernel.
pub fn s_vector_eval<T: Real>(
    which: SVector,
    cfg: RegularizationConfig<T>,
    xi: &UnitVector<T>,
    eta: &UnitVector<T>,
) -> Vec3<T> {
    let profile = ZonalProfile::dinv_green(Some(cfg));
    let (x, e) = (xi.as_vec(), eta.as_vec());
    let u = cap_distance(x, e);
    let g = profile.sample_u(u).deriv1;
    match which {
        SVector::Grad => (*e - *x * (T::one() - u)) * g,
        SVector::Curl => x.cross(e) * g,
    }
}

/// The three separated parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    /// Sources inside the sphere (`õ⁽¹⁾`).
    Internal,
    /// Sources outside the sphere (`õ⁽²⁾`).
    External,
    /// Currents crossing the sphere (`õ⁽³⁾`).
    Toroidal,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Internal, Part::External, Part::Toroidal];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Part::Internal => "internal",
            Part::External => "external",
            Part::Toroidal => "toroidal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelForm {
    Scaling,
    Wavelet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorKernelId {
    pub part: Part,
    pub form: KernelForm,
    pub scale: u32,
}

/// Tensor kernels evaluated pointwise, as consumed by the convolution engine.
pub trait TensorKernel<T: Real, const N: usize>: Sync {
    fn eval(&self, xi: &Vec3<T>, eta: &Vec3<T>) -> [Mat3<T>; N];

    /// Cap width ρ such that the kernel vanishes identically for `1 − ξ·η ≥ ρ`.
    fn support(&self) -> Option<T> {
        None
    }
}

/// The scaling kernels `Φ_ρ⁽¹⁾`, `Φ_ρ⁽²⁾`, `Φ_ρ⁽³⁾` for one scale.
#[derive(Debug, Clone)]
pub struct ScalingKernel<T> {
    green: ZonalProfile<T>,
    single: ZonalProfile<T>,
    rho: T,
    scale: Option<u32>,
}

impl<T: Real> ScalingKernel<T> {
    pub fn new(rho: T, orders: KernelOrders) -> Result<Self> {
        orders.validate()?;
        let g = RegularizationConfig::new(rho, orders.green)?;
        let s = RegularizationConfig::new(rho, orders.single_layer)?;
        Ok(Self {
            green: ZonalProfile::green(Some(g)),
            single: ZonalProfile::single_layer(Some(s)),
            rho,
            scale: None,
        })
    }

    /// Scaling kernel of scale `J`, ρ = 2^{-J}.
    pub fn at_scale(scale: u32, orders: KernelOrders) -> Result<Self> {
        let rho = RegularizationConfig::<T>::from_scale(scale, 1)?.rho();
        let mut k = Self::new(rho, orders)?;
        k.scale = Some(scale);
        Ok(k)
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn scale(&self) -> Option<u32> {
        self.scale
    }

    /// `[Φ⁽¹⁾, Φ⁽²⁾, Φ⁽³⁾](ξ, η)`.
    #[inline]
    pub fn eval_all(&self, xi: &Vec3<T>, eta: &Vec3<T>) -> [Mat3<T>; 3] {
        let u = cap_distance(xi, eta);
        let t = (T::one() - u).max(-T::one());
        let g = self.green.sample_u(u);
        let (s, ds, _) = self.single.single_layer_u(u);

        let lap = (T::one() - t * t) * g.deriv2 - T::lit(2.0) * t * g.deriv1;
        let gg = grad_grad(g.deriv1, g.deriv2, t, xi, eta);
        let hh = grad_grad(dinv_slope(s), dinv_slope_deriv(s, ds), t, xi, eta);

        let inv4pi = inv_4pi::<T>();
        let quarter = T::lit(0.25);
        let half = T::lit(0.5);
        let a = *eta - *xi * t;
        let b = *xi - *eta * t;
        let radial = xi.outer(eta);
        // ξ ⊗ ∇*_η S^ρ + ∇*_ξ S^ρ ⊗ η
        let mixed = (xi.outer(&b) + a.outer(eta)).scale(ds * inv4pi);
        let common = radial.scale(half * lap) - gg.scale(half);
        let single = radial.scale(s * inv4pi * half) - mixed + hh.scale(quarter);

        let q = -curl_curl(g.deriv1, g.deriv2, t, xi, eta);
        [common + single, common - single, q]
    }

    pub fn eval_part(&self, part: Part, xi: &Vec3<T>, eta: &Vec3<T>) -> Mat3<T> {
        self.eval_all(xi, eta)[part.index()]
    }
}

impl<T: Real> TensorKernel<T, 3> for ScalingKernel<T> {
    #[inline]
    fn eval(&self, xi: &Vec3<T>, eta: &Vec3<T>) -> [Mat3<T>; 3] {
        self.eval_all(xi, eta)
    }
}

/// Wavelet kernels `Ψ_J = Φ_{J+1} − Φ_J`, supported in the cap `1 − ξ·η < 2^{-J}`.
#[derive(Debug, Clone)]
pub struct WaveletKernel<T> {
    fine: ScalingKernel<T>,
    coarse: ScalingKernel<T>,
    scale: u32,
}

impl<T: Real> WaveletKernel<T> {
    pub fn new(scale: u32, orders: KernelOrders) -> Result<Self> {
        Ok(Self {
            fine: ScalingKernel::at_scale(scale + 1, orders)?,
            coarse: ScalingKernel::at_scale(scale, orders)?,
            scale,
        })
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    #[inline]
    pub fn eval_all(&self, xi: &Vec3<T>, eta: &Vec3<T>) -> [Mat3<T>; 3] {
        let f = self.fine.eval_all(xi, eta);
        let c = self.coarse.eval_all(xi, eta);
        [f[0] - c[0], f[1] - c[1], f[2] - c[2]]
    }
}

impl<T: Real> TensorKernel<T, 3> for WaveletKernel<T> {
    #[inline]
    fn eval(&self, xi: &Vec3<T>, eta: &Vec3<T>) -> [Mat3<T>; 3] {
        self.eval_all(xi, eta)
    }

    fn support(&self) -> Option<T> {
        Some(self.coarse.rho())
    }
}

/// Restricts a three-part kernel to one part.
#[derive(Debug, Clone)]
pub struct PartKernel<K> {
    pub kernel: K,
    pub part: Part,
}

impl<T: Real, K: TensorKernel<T, 3>> TensorKernel<T, 1> for PartKernel<K> {
    #[inline]
    fn eval(&self, xi: &Vec3<T>, eta: &Vec3<T>) -> [Mat3<T>; 1] {
        [self.kernel.eval(xi, eta)[self.part.index()]]
    }

    fn support(&self) -> Option<T> {
        self.kernel.support()
    }
}

/// Evaluates the scaling or wavelet tensor kernel named by `id`.
pub fn phi_eval<T: Real>(
    id: TensorKernelId,
    orders: KernelOrders,
    xi: &UnitVector<T>,
    eta: &UnitVector<T>,
) -> Result<Mat3<T>> {
    let (x, e) = (xi.as_vec(), eta.as_vec());
    let m = match id.form {
        KernelForm::Scaling => ScalingKernel::at_scale(id.scale, orders)?.eval_part(id.part, x, e),
        KernelForm::Wavelet => WaveletKernel::new(id.scale, orders)?.eval_all(x, e)[id.part.index()],
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const FOUR_PI: f64 = 4.0 * PI;

    #[test]
    fn green_closed_form_values() {
        assert_abs_diff_eq!(green_eval(0.0).unwrap(), (1.0 - LN_2) / FOUR_PI, epsilon = 1e-16);
        assert_abs_diff_eq!(green_eval(0.0).unwrap(), 0.0244185715, epsilon = 1e-10);
        assert_abs_diff_eq!(green_eval(-1.0).unwrap(), 1.0 / FOUR_PI, epsilon = 1e-16);
        assert!(matches!(green_eval(1.0), Err(Error::Singularity { .. })));
        assert!(matches!(green_eval(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn single_layer_values() {
        assert_abs_diff_eq!(single_layer_eval(-1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(single_layer_eval(0.5).unwrap(), 1.0, epsilon = 1e-15);
        assert!(single_layer_eval(1.0).is_err());
    }

    #[test]
    fn dinv_green_endpoints() {
        let at_antipode = dinv_green_eval(-1.0).unwrap();
        assert_abs_diff_eq!(at_antipode, (2.0 * LN_2 - 1.0) / (2.0 * PI), epsilon = 1e-16);
        assert_abs_diff_eq!(dinv_green_eval(1.0).unwrap(), -1.0 / (2.0 * PI), epsilon = 1e-16);
        assert_abs_diff_eq!(dinv_green_eval(0.0).unwrap(), 0.011077183001, epsilon = 1e-11);
    }

    #[test]
    fn dinv_closed_form_matches_textbook_shape() {
        // ln((1+t)(½ − 1/(1 − 2S))) form, away from t = −1.
        for &t in &[-0.7f64, -0.2, 0.3, 0.8] {
            let s = single_layer_eval(t).unwrap();
            let raw = ((1.0 + t) * (0.5 - 1.0 / (1.0 - 2.0 * s))).ln() / (2.0 * PI) - 1.0 / (2.0 * PI);
            assert_abs_diff_eq!(dinv_green_eval(t).unwrap(), raw, epsilon = 1e-14);
        }
    }

    #[test]
    fn series_coefficient_at_degree_one() {
        // symbol of D⁻¹ times Green coefficient, times the addition-theorem factor
        let c1 = (1.0 / 1.5) * (3.0 / FOUR_PI) * (-1.0 / 2.0);
        assert_abs_diff_eq!(c1, -1.0 / FOUR_PI, epsilon = 1e-16);
    }

    #[test]
    fn regularized_green_outside_cap_is_unchanged() {
        let cfg = RegularizationConfig::<f64>::new(0.5, 2).unwrap();
        let p = green_reg_profile(cfg);
        assert_eq!(p.value(0.3).unwrap(), green_eval(0.3).unwrap());
        assert!(p.value(1.0).unwrap().is_finite());
    }

    #[test]
    fn regularized_green_matches_at_breakpoint() {
        let cfg = RegularizationConfig::<f64>::new(0.5, 2).unwrap();
        let p = green_reg_profile(cfg);
        let inside = p.taylor.as_ref().unwrap().eval(0.0);
        let outside = (green_derivative(0, 0.5), green_derivative(1, 0.5), green_derivative(2, 0.5));
        assert_abs_diff_eq!(inside.0, outside.0, epsilon = 1e-12);
        assert_abs_diff_eq!(inside.1, outside.1, epsilon = 1e-12);
        assert_abs_diff_eq!(inside.2, outside.2, epsilon = 1e-12);
    }

    #[test]
    fn linear_single_layer_regularization() {
        let cfg = RegularizationConfig::<f64>::new(0.25, 1).unwrap();
        let p = single_layer_reg_profile(cfg);
        let s = single_layer_eval(0.75).unwrap();
        let ds = single_layer_derivative(1, 0.25);
        let v = p.value(1.0).unwrap();
        assert_abs_diff_eq!(v, s + 0.25 * ds, epsilon = 1e-14);
        assert!(v >= 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(RegularizationConfig::new(0.0, 2).is_err());
        assert!(RegularizationConfig::new(2.5, 2).is_err());
        assert!(RegularizationConfig::new(0.5, 0).is_err());
        let c = RegularizationConfig::<f64>::from_scale(5, 2).unwrap();
        assert_eq!(c.rho(), 1.0 / 32.0);
        assert_eq!(c.scale(), Some(5));
        assert!(KernelOrders { green: 1, single_layer: 1 }.validate().is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cfg = RegularizationConfig::<f64>::new(0.125, 3).unwrap();
        let profiles = [
            ZonalProfile::green(Some(cfg)),
            ZonalProfile::single_layer(Some(cfg)),
            ZonalProfile::dinv_green(Some(cfg)),
            ZonalProfile::dinv_green(None),
        ];
        let h = 1e-6;
        for p in &profiles {
            for &t in &[-0.6, 0.1, 0.6, 0.8, 0.95] {
                let s = p.sample(t).unwrap();
                let fd1 = (p.value(t + h).unwrap() - p.value(t - h).unwrap()) / (2.0 * h);
                let fd2 = (p.deriv1(t + h).unwrap() - p.deriv1(t - h).unwrap()) / (2.0 * h);
                assert!((fd1 - s.deriv1).abs() <= 1e-5 * s.deriv1.abs().max(1.0), "{:?} d1 at {t}", p.kind());
                assert!((fd2 - s.deriv2).abs() <= 1e-5 * s.deriv2.abs().max(1.0), "{:?} d2 at {t}", p.kind());
            }
        }
    }

    #[test]
    fn regularized_dinv_value_is_continuous() {
        let cfg = RegularizationConfig::<f64>::new(0.1, 1).unwrap();
        let p = ZonalProfile::dinv_green(Some(cfg));
        let t0 = 0.9;
        let left = p.value(t0 - 1e-12).unwrap();
        let right = p.value(t0 + 1e-12).unwrap();
        assert_abs_diff_eq!(left, right, epsilon = 1e-10);
    }

    #[test]
    fn constant_profile_has_no_derivatives() {
        let c = |_t: f64| ZonalSample { value: 3.0, deriv1: 0.0, deriv2: 0.0 };
        let xi = UnitVector::from_spherical(0.3, 0.2);
        let eta = UnitVector::from_spherical(1.3, -0.9);
        let ops = zonal_surface_ops(&c, &xi, &eta).unwrap();
        assert_eq!(ops.lap_xi, 0.0);
        assert!(ops.grad_grad.is_zero() && ops.curl_curl.is_zero());
        assert_eq!(ops.grad_xi, Vec3::zero());
    }

    #[test]
    fn green_laplacian_outside_cap() {
        let cfg = RegularizationConfig::<f64>::new(0.25, 2).unwrap();
        let p = green_reg_profile(cfg);
        let xi = UnitVector::from_spherical(0.3, 0.2);
        for th in [0.9, 1.7, 2.9] {
            let eta = UnitVector::from_spherical(th, 1.1);
            let ops = zonal_surface_ops(&p, &xi, &eta).unwrap();
            assert_abs_diff_eq!(ops.lap_xi, -1.0 / FOUR_PI, epsilon = 1e-13);
        }
    }

    #[test]
    fn singular_profile_rejected_at_coincidence() {
        let p = ZonalProfile::<f64>::green(None);
        let xi = UnitVector::from_spherical(0.3, 0.2);
        assert!(matches!(zonal_surface_ops(&p, &xi, &xi), Err(Error::Singularity { .. })));
    }

    #[test]
    fn s_vector_properties() {
        let cfg = RegularizationConfig::<f64>::new(0.25, 1).unwrap();
        let xi = UnitVector::from_spherical(0.8, 0.4);
        assert_eq!(s_vector_eval(SVector::Grad, cfg, &xi, &xi), Vec3::zero());
        assert_eq!(s_vector_eval(SVector::Curl, cfg, &xi, &xi), Vec3::zero());
        let eta = UnitVector::from_spherical(2.0, -1.0);
        let v = s_vector_eval(SVector::Grad, cfg, &xi, &eta);
        assert!(v.dot(xi.as_vec()).abs() < 1e-15);
        let t = xi.dot(&eta);
        let s = single_layer_eval(t).unwrap();
        let expect = (*eta.as_vec() - *xi.as_vec() * t) * ((0.5 - s - 1.0 / (2.0 + 4.0 * s)) / (2.0 * PI));
        assert!((v - expect).max_abs() < 1e-14);
    }

    #[test]
    fn sum_of_poloidal_kernels_cancels_single_layer_terms() {
        let k = ScalingKernel::<f64>::at_scale(3, KernelOrders::default()).unwrap();
        let xi = UnitVector::from_spherical(0.8, 0.4);
        for eta in [UnitVector::from_spherical(0.85, 0.45), UnitVector::from_spherical(2.0, -1.0)] {
            let [p1, p2, _] = k.eval_all(xi.as_vec(), eta.as_vec());
            let ops = zonal_surface_ops(&k.green, &xi, &eta).unwrap();
            let expect = xi.as_vec().outer(eta.as_vec()).scale(ops.lap_xi) - ops.grad_grad;
            assert!(((p1 + p2) - expect).max_abs() < 1e-12 * expect.max_abs().max(1.0));
        }
    }

    #[test]
    fn wavelet_kernel_vanishes_outside_cap() {
        let w = WaveletKernel::<f64>::new(4, KernelOrders::default()).unwrap();
        let xi = UnitVector::from_spherical(0.8, 0.4);
        let far = UnitVector::from_spherical(1.5, 0.4);
        for m in w.eval_all(xi.as_vec(), far.as_vec()) {
            assert!(m.is_zero());
        }
        let near = UnitVector::from_spherical(0.82, 0.41);
        assert!(!w.eval_all(xi.as_vec(), near.as_vec())[0].is_zero());
    }
}
