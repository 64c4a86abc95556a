//! Randomized invariants of harmonics, kernels and profiles.

use std::f64::consts::PI;

use proptest::prelude::*;

use sphsep::geometry::rotation_matrix;
use sphsep::harmonics::{legendre, mu, mu_tilde, sh_eval, vsh_eval, HarmonicIndex, VshKind};
use sphsep::kernels::{
    green_eval, phi_eval, single_layer_eval, KernelForm, KernelOrders, Part, RegularizationConfig,
    TensorKernelId, ZonalProfile,
};
use sphsep::Point;

fn point() -> impl Strategy<Value = Point> {
    (-1.0f64..1.0, 0.0..2.0 * PI).prop_map(|(z, phi)| Point::from_spherical(z.acos(), phi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn addition_theorem(xi in point(), eta in point(), n in 0u32..=20) {
        let sum: f64 = (1..=2 * n + 1)
            .map(|k| {
                let idx = HarmonicIndex::new(n, k).unwrap();
                sh_eval(idx, &xi).unwrap() * sh_eval(idx, &eta).unwrap()
            })
            .sum();
        let expect = (2 * n + 1) as f64 / (4.0 * PI) * legendre(n, xi.dot(&eta).clamp(-1.0, 1.0)).unwrap();
        prop_assert!((sum - expect).abs() < 1e-11, "n={n}: {sum} vs {expect}");
    }

    #[test]
    fn plain_harmonics_are_normal_or_tangential(xi in point(), n in 1u32..=15, k in 0u32..31) {
        let idx = HarmonicIndex::new(n, k % (2 * n + 1) + 1).unwrap();
        let x = xi.as_vec();
        let y1 = vsh_eval(VshKind::plain(1).unwrap(), idx, &xi).unwrap();
        prop_assert!(y1.cross(x).max_abs() < 1e-12);
        for i in [2u8, 3] {
            let y = vsh_eval(VshKind::plain(i).unwrap(), idx, &xi).unwrap();
            prop_assert!(y.dot(x).abs() < 1e-12);
        }
        let t3 = vsh_eval(VshKind::tilde(3).unwrap(), idx, &xi).unwrap();
        let p3 = vsh_eval(VshKind::plain(3).unwrap(), idx, &xi).unwrap();
        prop_assert!((t3 - p3).max_abs() < 1e-12);
    }

    #[test]
    fn tilde_system_is_combination_of_plain(xi in point(), n in 1u32..=15, k in 0u32..31) {
        let idx = HarmonicIndex::new(n, k % (2 * n + 1) + 1).unwrap();
        let nf = n as f64;
        let p1 = vsh_eval(VshKind::plain(1).unwrap(), idx, &xi).unwrap() * mu::<f64>(1, n).sqrt();
        let p2 = vsh_eval(VshKind::plain(2).unwrap(), idx, &xi).unwrap() * mu::<f64>(2, n).sqrt();
        let t1 = vsh_eval(VshKind::tilde(1).unwrap(), idx, &xi).unwrap() * mu_tilde::<f64>(1, n).sqrt();
        let t2 = vsh_eval(VshKind::tilde(2).unwrap(), idx, &xi).unwrap() * mu_tilde::<f64>(2, n).sqrt();
        let scale = 1.0 + p1.max_abs() + p2.max_abs();
        prop_assert!((t1 - (p1 * (nf + 1.0) - p2)).max_abs() < 1e-11 * scale * (nf + 1.0));
        prop_assert!((t2 - (p1 * nf + p2)).max_abs() < 1e-11 * scale * (nf + 1.0));
    }

    #[test]
    fn tensor_kernels_are_rotation_equivariant(
        xi in point(),
        eta in point(),
        axis in point(),
        angle in 0.0f64..2.0 * PI,
        scale in 2u32..=6,
        wavelet in any::<bool>(),
        part in 0usize..3,
    ) {
        let r = rotation_matrix(axis.as_vec(), angle);
        let rot = |p: &Point| Point::new_unchecked(r.mul_vec(p.as_vec()));
        let id = TensorKernelId {
            part: Part::ALL[part],
            form: if wavelet { KernelForm::Wavelet } else { KernelForm::Scaling },
            scale,
        };
        let orders = KernelOrders::default();
        let base = phi_eval(id, orders, &xi, &eta).unwrap();
        let rotated = phi_eval(id, orders, &rot(&xi), &rot(&eta)).unwrap();
        let expect = r.matmul(&base).matmul(&r.transpose());
        // Cap membership may flip under rounding exactly at the breakpoint.
        prop_assume!((1.0 - xi.dot(&eta) - 2f64.powi(-(scale as i32))).abs() > 1e-9);
        prop_assert!((rotated - expect).max_abs() < 1e-8 * (1.0 + base.max_abs()));
    }

    #[test]
    fn regularized_profiles_match_singular_ones_outside_cap(t in -1.0f64..1.0, j in 2u32..=9, order in 1usize..=3) {
        let rho = 2f64.powi(-(j as i32));
        prop_assume!(t <= 1.0 - rho);
        let g = ZonalProfile::green(Some(RegularizationConfig::from_scale(j, order + 1).unwrap()));
        let s = ZonalProfile::single_layer(Some(RegularizationConfig::from_scale(j, order).unwrap()));
        prop_assert_eq!(g.value(t).unwrap(), green_eval(t).unwrap());
        prop_assert_eq!(s.value(t).unwrap(), single_layer_eval(t).unwrap());
    }

    #[test]
    fn regularized_profiles_are_bounded_inside_cap(j in 2u32..=9, frac in 0.0f64..=1.0) {
        let rho = 2f64.powi(-(j as i32));
        let t = 1.0 - rho * frac;
        let g = ZonalProfile::green(Some(RegularizationConfig::from_scale(j, 2).unwrap()));
        let s = ZonalProfile::single_layer(Some(RegularizationConfig::from_scale(j, 1).unwrap()));
        for v in [g.value(t).unwrap(), g.deriv1(t).unwrap(), g.deriv2(t).unwrap(), s.value(t).unwrap(), s.deriv1(t).unwrap()] {
            prop_assert!(v.is_finite());
        }
    }
}
