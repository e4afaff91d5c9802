//! Fixtures shared by the benchmarks.

use kvshape::fourier;
use kvshape::{build_curve, Conductivity, Curve, Geometry, JumpData, ShapeParams, StateBundle, TransmissionSolver};

pub fn mild_target() -> ShapeParams {
    ShapeParams { center: [0.2, 0.0], r0: 0.75, cos_coeffs: vec![0.0, 0.08], sin_coeffs: vec![] }
}

pub fn outer(n: usize) -> Curve {
    Curve::circle([0.0, 0.0], 2.0, n).expect("outer circle")
}

pub fn solver(n: usize, shape: &ShapeParams) -> TransmissionSolver {
    let inner = build_curve(shape, n, None).expect("inner curve");
    let geom = Geometry::new(outer(n), inner).expect("geometry");
    TransmissionSolver::new(geom, Conductivity::new(1.0, 5.0).expect("conductivity")).expect("solver")
}

/// Data `cos θ` with its flux from the mild target, evaluated on `shape`.
pub fn bundle(n: usize, shape: &ShapeParams) -> StateBundle {
    let f: Vec<f64> = fourier::grid(n).iter().map(|t| t.cos()).collect();
    let target = solver(n, &mild_target());
    let sol = target.solve_dirichlet(&JumpData::zeros(n), &f).expect("synthetic data");
    let o = outer(n);
    let mean = o.integrate(&sol.dnu_outer) / o.perimeter();
    let g = sol.dnu_outer.iter().map(|v| v - mean).collect();
    StateBundle::new(solver(n, shape), f, g).expect("bundle")
}
