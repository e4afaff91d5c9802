mod common;

use std::f64::consts::PI;

use common::*;
use kvshape::fourier;
use kvshape::geometry::{build_curve, Curve, ShapeParams, Vec2};
use kvshape::potential::{harmonic_eval, Region};
use kvshape::shape_calculus::{kv_value, StateBundle};
use kvshape::transmission::*;
use kvshape::Error;

fn disks(n: usize) -> (Curve, Curve, TransmissionSolver) {
    let outer = Curve::circle([0.0, 0.0], 2.0, n).unwrap();
    let inner = Curve::circle([0.0, 0.0], 0.75, n).unwrap();
    let s = solver(&outer, inner.clone(), 1.0, 5.0);
    (outer, inner, s)
}

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn oracle_constants_match_hand_values() {
    let o = DiskOracle::new(2.0, 0.75, 1.0, 5.0, 1);
    let (a, b, c) = o.coefficients();
    assert!((b - 0.551724).abs() < 1e-6);
    assert!((c + 0.206897).abs() < 1e-6);
    assert!((a - 0.183908).abs() < 1e-6);
    assert!((o.dnu_outer(0.0) - 0.603448).abs() < 1e-6);
}

#[test]
fn dirichlet_matches_concentric_oracle() {
    let n = 128;
    let (_, _, s) = disks(n);
    let t = fourier::grid(n);
    for m in 1..4 {
        let o = DiskOracle::new(2.0, 0.75, 1.0, 5.0, m);
        let f: Vec<f64> = t.iter().map(|&t| o.u_outer(t)).collect();
        let sol = s.solve_dirichlet(&JumpData::zeros(n), &f).unwrap();
        let ui: Vec<f64> = t.iter().map(|&t| o.u_interface(t)).collect();
        assert!(rel_err(&sol.u_plus, &ui) < 1e-10);
        assert!(rel_err(&sol.u_minus, &ui) < 1e-10);
        assert!(rel_err(&sol.dnu_plus, &t.iter().map(|&t| o.dnu_plus(t)).collect::<Vec<_>>()) < 1e-10);
        assert!(rel_err(&sol.dnu_minus, &t.iter().map(|&t| o.dnu_minus(t)).collect::<Vec<_>>()) < 1e-10);
        assert!(rel_err(&sol.dnu_outer, &t.iter().map(|&t| o.dnu_outer(t)).collect::<Vec<_>>()) < 1e-10);
        assert_eq!(sol.u_outer, f);
    }
}

#[test]
fn neumann_matches_concentric_oracle() {
    let n = 128;
    let (_, _, s) = disks(n);
    let t = fourier::grid(n);
    let o = DiskOracle::new(2.0, 0.75, 1.0, 5.0, 1);
    let g1: Vec<f64> = t.iter().map(|&t| o.dnu_outer(t)).collect();
    let sol = s.solve_neumann(&JumpData::zeros(n), &g1, 0.0).unwrap();
    assert!(rel_err(&sol.u_outer, &t.iter().map(|&t| o.u_outer(t)).collect::<Vec<_>>()) < 1e-10);
    assert!(rel_err(&sol.u_plus, &t.iter().map(|&t| o.u_interface(t)).collect::<Vec<_>>()) < 1e-10);
    assert!(rel_err(&sol.dnu_minus, &t.iter().map(|&t| o.dnu_minus(t)).collect::<Vec<_>>()) < 1e-10);
    assert_eq!(sol.dnu_outer, g1);
}

#[test]
fn gauge_row_scaling_does_not_change_solution() {
    let n = 64;
    let outer = Curve::circle([0.0, 0.0], 2.0, n).unwrap();
    let p = ShapeParams { center: [0.1, 0.05], r0: 0.7, cos_coeffs: vec![0.0, 0.05], sin_coeffs: vec![] };
    let inner = build_curve(&p, n, None).unwrap();
    let geom = Geometry::new(outer, inner).unwrap();
    let sig = Conductivity::new(1.0, 5.0).unwrap();
    let a = TransmissionSolver::new(geom.clone(), sig).unwrap();
    let b = TransmissionSolver::with_gauge_scale(geom, sig, 10.0).unwrap();
    let t = fourier::grid(n);
    let g1: Vec<f64> = t.iter().map(|t| (2.0 * t).cos() + t.sin()).collect();
    let sa = a.solve_neumann(&JumpData::zeros(n), &g1, 0.3).unwrap();
    let sb = b.solve_neumann(&JumpData::zeros(n), &g1, 0.3).unwrap();
    for (x, y) in sa.u_outer.iter().zip(&sb.u_outer).chain(sa.u_plus.iter().zip(&sb.u_plus)) {
        assert!((x - y).abs() < 1e-12);
    }
}

fn general_solver(n: usize) -> TransmissionSolver {
    let outer = Curve::circle([0.0, 0.0], 2.0, n).unwrap();
    let p = ShapeParams { center: [0.15, -0.1], r0: 0.7, cos_coeffs: vec![0.02, 0.08], sin_coeffs: vec![0.0, 0.0, 0.03] };
    solver(&outer, build_curve(&p, n, None).unwrap(), 1.0, 4.0)
}

fn jumps(curve: &Curve) -> JumpData {
    let t = fourier::grid(curve.len());
    let beta: Vec<f64> = curve.d_ds(&t.iter().map(|t| (2.0 * t).sin() + 0.3 * t.cos()).collect::<Vec<_>>());
    JumpData { alpha: t.iter().map(|t| 0.2 + 0.5 * (3.0 * t).cos()).collect(), beta }
}

#[test]
fn jump_and_flux_invariants_with_nonzero_data() {
    let n = 128;
    let s = general_solver(n);
    let inner = s.geometry().inner().clone();
    let outer = s.geometry().outer().clone();
    let j = jumps(&inner);
    let t = fourier::grid(n);
    let f: Vec<f64> = t.iter().map(|t| t.cos() - 0.4 * (2.0 * t).sin()).collect();
    let sig = s.conductivity();
    for sol in [
        s.solve_dirichlet(&j, &f).unwrap(),
        s.solve_neumann(&j, &t.iter().map(|t| (2.0 * t).cos()).collect::<Vec<_>>(), 1.0).unwrap(),
    ] {
        for i in 0..n {
            assert!((sol.u_plus[i] - sol.u_minus[i] - j.alpha[i]).abs() < 1e-9);
            assert!((sig.sigma1 * sol.dnu_plus[i] - sig.sigma2 * sol.dnu_minus[i] - j.beta[i]).abs() < 1e-9);
        }
        // Divergence theorem in ω and in the annulus.
        assert!(inner.integrate(&sol.dnu_minus).abs() < 1e-8);
        assert!((outer.integrate(&sol.dnu_outer) - inner.integrate(&sol.dnu_plus)).abs() < 1e-8);
        assert!((sig.sigma1 * inner.integrate(&sol.dnu_plus) - inner.integrate(&j.beta)).abs() < 1e-8);
    }
}

#[test]
fn flux_balance_with_nonzero_mean_beta() {
    let n = 128;
    let s = general_solver(n);
    let inner = s.geometry().inner().clone();
    let outer = s.geometry().outer().clone();
    let j = JumpData { alpha: vec![0.0; n], beta: vec![1.0; n] };
    let g1 = vec![inner.perimeter() / (s.conductivity().sigma1 * outer.perimeter()); n];
    let sol = s.solve_neumann(&j, &g1, 0.0).unwrap();
    assert!(outer.integrate(&sol.u_outer).abs() < 1e-10);
    assert!((s.conductivity().sigma1 * inner.integrate(&sol.dnu_plus) - inner.perimeter()).abs() < 1e-8);
    let mut bad = g1.clone();
    bad[0] += 1.0;
    assert!(matches!(s.solve_neumann(&j, &bad, 0.0), Err(Error::NeumannIncompatible(_))));
}

#[test]
fn superposition() {
    let n = 64;
    let s = general_solver(n);
    let inner = s.geometry().inner().clone();
    let j = jumps(&inner);
    let t = fourier::grid(n);
    let f: Vec<f64> = t.iter().map(|t| (3.0 * t).cos()).collect();
    let a = s.solve_dirichlet(&j, &vec![0.0; n]).unwrap();
    let b = s.solve_dirichlet(&JumpData::zeros(n), &f).unwrap();
    let ab = s.solve_dirichlet(&j, &f).unwrap();
    for i in 0..n {
        assert!((a.u_plus[i] + b.u_plus[i] - ab.u_plus[i]).abs() < 1e-12);
        assert!((a.dnu_plus[i] + b.dnu_plus[i] - ab.dnu_plus[i]).abs() < 1e-12);
        assert!((a.dnu_outer[i] + b.dnu_outer[i] - ab.dnu_outer[i]).abs() < 1e-12);
    }
}

#[test]
fn harmonic_eval_matches_oracle_in_both_regions() {
    let n = 128;
    let (outer, inner, s) = disks(n);
    let t = fourier::grid(n);
    let o = DiskOracle::new(2.0, 0.75, 1.0, 5.0, 2);
    let f: Vec<f64> = t.iter().map(|&t| o.u_outer(t)).collect();
    let sol = s.solve_dirichlet(&JumpData::zeros(n), &f).unwrap();
    let geom = Geometry::new(outer, inner).unwrap();
    let pts: Vec<Vec2> = [0.3, 1.4, 2.9].iter().map(|&a| Vec2::new(1.2 * f64::cos(a), 1.2 * f64::sin(a))).collect();
    let vals = harmonic_eval(&geom, Region::Annulus, &sol, &pts).unwrap();
    for (p, v) in pts.iter().zip(&vals) {
        let (r, th) = polar(p);
        assert!((v - o.value(r, th)).abs() < 1e-8);
    }
    let pts = vec![Vec2::new(0.3, -0.2), Vec2::new(0.0, 0.0)];
    let vals = harmonic_eval(&geom, Region::Inclusion, &sol, &pts).unwrap();
    for (p, v) in pts.iter().zip(&vals) {
        let (r, th) = polar(p);
        assert!((v - o.value(r, th)).abs() < 1e-8);
    }
}

#[test]
fn harmonic_eval_contracts() {
    let n = 128;
    let (outer, inner, s) = disks(n);
    let c = 0.8;
    let sol = s.solve_dirichlet(&JumpData::zeros(n), &vec![c; n]).unwrap();
    let geom = Geometry::new(outer, inner).unwrap();
    let vals = harmonic_eval(&geom, Region::Annulus, &sol, &[Vec2::new(1.3, 0.2), Vec2::new(-1.0, -1.0)]).unwrap();
    for v in &vals { assert!((v - c).abs() < 1e-10, "{v}"); }
    let near = Vec2::new(0.75 + 1e-3, 0.0);
    assert!(matches!(harmonic_eval(&geom, Region::Annulus, &sol, &[near]), Err(Error::NearSingularEvaluation { .. })));
    assert!(matches!(harmonic_eval(&geom, Region::Inclusion, &sol, &[Vec2::new(1.3, 0.0)]), Err(Error::OutsideRegion)));
    assert!(matches!(harmonic_eval(&geom, Region::Annulus, &sol, &[Vec2::new(3.0, 0.0)]), Err(Error::OutsideRegion)));
}

#[test]
fn states_agree_for_consistent_data_and_split_for_inconsistent() {
    let n = 128;
    let outer = Curve::circle([0.0, 0.0], 2.0, n).unwrap();
    let target = ShapeParams { center: [0.2, 0.0], r0: 0.75, cos_coeffs: vec![0.0, 0.08], sin_coeffs: vec![] };
    let t = fourier::grid(n);
    let f: Vec<f64> = t.iter().map(|t| t.cos()).collect();
    let g = synth(&outer, &target, n, 1.0, 5.0, &f);
    let inner = build_curve(&target, n, None).unwrap();
    let b = StateBundle::new(solver(&outer, inner.clone(), 1.0, 5.0), f.clone(), g.clone()).unwrap();
    for i in 0..n {
        assert!((b.u_d.u_plus[i] - b.u_n.u_plus[i]).abs() < 1e-9);
        assert!((b.u_d.u_outer[i] - b.u_n.u_outer[i]).abs() < 1e-9);
    }
    assert!(kv_value(&b).abs() <= 1e-12);

    let g15: Vec<f64> = g.iter().map(|v| 1.5 * v).collect();
    let b = StateBundle::new(solver(&outer, inner, 1.0, 5.0), f, g15).unwrap();
    assert!(b.critical_mismatch() > 1e-3);
    assert!(kv_value(&b) > 1e-4);
}

#[test]
fn states_match_oracle_traces() {
    let n = 128;
    let (outer, _, s) = disks(n);
    let t = fourier::grid(n);
    let o = DiskOracle::new(2.0, 0.75, 1.0, 5.0, 1);
    let f: Vec<f64> = t.iter().map(|&t| o.u_outer(t)).collect();
    let g: Vec<f64> = t.iter().map(|&t| o.sigma1 * o.dnu_outer(t)).collect();
    let (ud, un) = s.solve_states(&f, &g).unwrap();
    for sol in [&ud, &un] {
        assert!(rel_err(&sol.u_plus, &t.iter().map(|&t| o.u_interface(t)).collect::<Vec<_>>()) < 1e-8);
        assert!(rel_err(&sol.dnu_plus, &t.iter().map(|&t| o.dnu_plus(t)).collect::<Vec<_>>()) < 1e-8);
    }
    assert!((outer.integrate(&un.u_outer) - outer.integrate(&f)).abs() < 1e-12);
}

#[test]
fn equal_conductivity_matches_single_phase_dirichlet() {
    // Single-phase disk: u = (r/R)^m cos mθ.
    let n = 64;
    let outer = Curve::circle([0.0, 0.0], 2.0, n).unwrap();
    let p = ShapeParams { center: [0.1, 0.0], r0: 0.6, cos_coeffs: vec![0.0, 0.1], sin_coeffs: vec![] };
    let inner = build_curve(&p, n, None).unwrap();
    let s = solver(&outer, inner.clone(), 2.0, 2.0);
    let t = fourier::grid(n);
    let f: Vec<f64> = t.iter().map(|t| (3.0 * t).cos()).collect();
    let sol = s.solve_dirichlet(&JumpData::zeros(n), &f).unwrap();
    for (i, x) in inner.nodes().iter().enumerate() {
        let (r, th) = polar(x);
        let exact = (r / 2.0).powi(3) * (3.0 * th).cos();
        assert!((sol.u_plus[i] - exact).abs() < 1e-11);
        let grad_r = 3.0 * r * r / 8.0 * (3.0 * th).cos();
        let grad_t = -3.0 * r * r / 8.0 * (3.0 * th).sin();
        let er = Vec2::new(th.cos(), th.sin());
        let et = Vec2::new(-th.sin(), th.cos());
        let grad = er * grad_r + et * grad_t;
        assert!((sol.dnu_plus[i] - grad.dot(&inner.normal()[i])).abs() < 1e-10);
        assert!((sol.dnu_minus[i] - sol.dnu_plus[i]).abs() < 1e-10);
    }
    let _ = PI;
}
