mod common;

use std::f64::consts::PI;

use common::*;
use kvshape::fourier;
use kvshape::geometry::{build_curve, Curve, DeformationField, ShapeParams, Vec2};
use kvshape::optimizer::{update_shape, BasisSpec};
use kvshape::potential::{newtonian_kernel, normal_kernel};
use kvshape::shape_calculus::{first_order_jumps, kv_gradient};
use kvshape::transmission::{Conductivity, JumpData};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = ShapeParams> {
    (-0.2..0.2f64, -0.2..0.2f64, 0.5..0.9f64, prop::collection::vec(-0.06..0.06f64, 3), prop::collection::vec(-0.06..0.06f64, 3))
        .prop_map(|(cx, cy, r0, a, b)| ShapeParams { center: [cx, cy], r0, cos_coeffs: a, sin_coeffs: b })
}

fn trig(n: usize, coeffs: &[f64]) -> Vec<f64> {
    fourier::grid(n)
        .iter()
        .map(|t| coeffs.iter().enumerate().map(|(k, c)| c * ((k / 2 + 1) as f64 * t + if k % 2 == 0 { 0.0 } else { PI / 2.0 }).cos()).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frame_and_turning_number(p in shape()) {
        let c = build_curve(&p, 64, None).unwrap();
        for i in 0..c.len() {
            prop_assert!((c.normal()[i].norm() - 1.0).abs() < 1e-12);
            prop_assert!(c.normal()[i].dot(&c.tangent()[i]).abs() < 1e-12);
        }
        prop_assert!((c.integrate(c.curvature()) - 2.0 * PI).abs() < 1e-9);
        prop_assert!(c.area() > 0.0);
    }

    #[test]
    fn exact_derivatives_integrate_to_zero(p in shape(), coeffs in prop::collection::vec(-1.0..1.0f64, 6)) {
        let c = build_curve(&p, 64, None).unwrap();
        let f = trig(64, &coeffs);
        prop_assert!(c.integrate(&c.d_ds(&f)).abs() < 1e-10);
        prop_assert!(c.integrate(&c.laplace_beltrami(&f)).abs() < 1e-9);
    }

    #[test]
    fn kernels_are_symmetric_and_harmonic_like(x in prop::array::uniform2(-1.0..1.0f64), y in prop::array::uniform2(-1.0..1.0f64)) {
        let (x, y) = (Vec2::new(x[0], x[1]), Vec2::new(y[0], y[1]));
        prop_assume!((x - y).norm() > 1e-3);
        prop_assert_eq!(newtonian_kernel(&x, &y).unwrap(), newtonian_kernel(&y, &x).unwrap());
        // Normal derivative in y equals the directional derivative of Γ.
        let n = Vec2::new(0.6, 0.8);
        let e = 1e-6;
        let fd = (newtonian_kernel(&x, &(y + n * e)).unwrap() - newtonian_kernel(&x, &(y - n * e)).unwrap()) / (2.0 * e);
        prop_assert!((normal_kernel(&x, &y, &n).unwrap() - fd).abs() < 1e-6 * fd.abs().max(1.0));
    }

    #[test]
    fn dirichlet_solve_is_linear(a in prop::collection::vec(-1.0..1.0f64, 4), b in prop::collection::vec(-1.0..1.0f64, 4), s in -3.0..3.0f64) {
        let n = 32;
        let outer = Curve::circle([0.0, 0.0], 2.0, n).unwrap();
        let inner = build_curve(&ShapeParams { center: [0.1, 0.0], r0: 0.7, cos_coeffs: vec![0.0, 0.05], sin_coeffs: vec![] }, n, None).unwrap();
        let sv = solver(&outer, inner, 1.0, 3.0);
        let (fa, fb) = (trig(n, &a), trig(n, &b));
        let fab: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x + s * y).collect();
        let z = JumpData::zeros(n);
        let (ua, ub, uab) = (sv.solve_dirichlet(&z, &fa).unwrap(), sv.solve_dirichlet(&z, &fb).unwrap(), sv.solve_dirichlet(&z, &fab).unwrap());
        for i in 0..n {
            prop_assert!((ua.dnu_outer[i] + s * ub.dnu_outer[i] - uab.dnu_outer[i]).abs() < 1e-10);
            prop_assert!((ua.u_plus[i] + s * ub.u_plus[i] - uab.u_plus[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn shape_gradient_sees_only_normal_part(coeffs in prop::collection::vec(-1.0..1.0f64, 6), tang in prop::collection::vec(-1.0..1.0f64, 6)) {
        let s = noncritical_setup(32);
        let b = s.bundle();
        let hn = trig(32, &coeffs);
        let h = DeformationField::new(hn.clone(), trig(32, &tang));
        prop_assert_eq!(kv_gradient(&b, &h), kv_gradient(&b, &DeformationField::normal_only(hn.clone())));
        let j1 = first_order_jumps(b.sigma(), &s.inner, &b.u_d, &h);
        let j2 = first_order_jumps(b.sigma(), &s.inner, &b.u_d, &DeformationField::normal_only(hn));
        prop_assert_eq!(j1, j2);
    }

    #[test]
    fn update_shape_round_trip(p in shape(), dir in prop::collection::vec(-0.05..0.05f64, 9), t in 0.0..1.0f64) {
        let basis = BasisSpec { max_mode: 3, translations: true };
        let q = update_shape(&p, &basis, &dir, t, None).unwrap();
        let back = update_shape(&q, &basis, &dir, -t, None).unwrap();
        prop_assert!((back.r0 - p.r0).abs() < 1e-14);
        for k in 1..=3 {
            prop_assert!((back.cos_coeff(k) - p.cos_coeff(k)).abs() < 1e-14);
            prop_assert!((back.sin_coeff(k) - p.sin_coeff(k)).abs() < 1e-14);
        }
        prop_assert_eq!(update_shape(&p, &basis, &dir, 0.0, None).unwrap().r0, p.r0);
    }

    #[test]
    fn conductivity_requires_positive_values(a in -2.0..2.0f64, b in -2.0..2.0f64) {
        prop_assert_eq!(Conductivity::new(a, b).is_ok(), a > 0.0 && b > 0.0);
    }

    #[test]
    fn ambient_round_trip(p in shape(), hx in prop::collection::vec(-1.0..1.0f64, 4), hy in prop::collection::vec(-1.0..1.0f64, 4)) {
        let c = build_curve(&p, 32, None).unwrap();
        let (x, y) = (trig(32, &hx), trig(32, &hy));
        let amb: Vec<Vec2> = x.iter().zip(&y).map(|(a, b)| Vec2::new(*a, *b)).collect();
        let back = DeformationField::from_ambient(&c, &amb).ambient(&c);
        for (u, v) in amb.iter().zip(&back) {
            prop_assert!((u - v).norm() < 1e-13);
        }
    }
}
