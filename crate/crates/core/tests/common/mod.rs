#![allow(dead_code)]

use kvshape::geometry::{build_curve, Curve, DeformationField, ShapeParams, Vec2};
use kvshape::shape_calculus::StateBundle;
use kvshape::transmission::{Conductivity, Geometry, JumpData, TransmissionSolver};

/// Separation-of-variables solution for concentric circles with outer data
/// `F cos(m(θ − φ))`: `A r^m` inside, `B r^m + C r^{−m}` in the annulus.
#[derive(Debug, Clone, Copy)]
pub struct DiskOracle {
    pub big_r: f64,
    pub rho: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub m: i32,
    pub amp: f64,
    pub phase: f64,
}

impl DiskOracle {
    pub fn new(big_r: f64, rho: f64, sigma1: f64, sigma2: f64, m: i32) -> Self {
        Self { big_r, rho, sigma1, sigma2, m, amp: 1.0, phase: 0.0 }
    }

    pub fn contrast(&self) -> f64 {
        (self.sigma1 - self.sigma2) / (self.sigma1 + self.sigma2)
    }

    pub fn coefficients(&self) -> (f64, f64, f64) {
        let mc = self.contrast();
        let m = self.m;
        let b = self.amp / (self.big_r.powi(m) + mc * self.rho.powi(2 * m) * self.big_r.powi(-m));
        let c = mc * b * self.rho.powi(2 * m);
        let a = (1.0 + mc) * b;
        (a, b, c)
    }

    fn angle(&self, theta: f64) -> f64 {
        (self.m as f64 * (theta - self.phase)).cos()
    }

    pub fn value(&self, r: f64, theta: f64) -> f64 {
        let (a, b, c) = self.coefficients();
        let m = self.m;
        let radial = if r < self.rho { a * r.powi(m) } else { b * r.powi(m) + c * r.powi(-m) };
        radial * self.angle(theta)
    }

    pub fn u_outer(&self, theta: f64) -> f64 {
        self.value(self.big_r, theta)
    }

    pub fn dnu_outer(&self, theta: f64) -> f64 {
        let (_, b, c) = self.coefficients();
        let m = self.m as f64;
        let r = self.big_r;
        m * (b * r.powf(m - 1.0) - c * r.powf(-m - 1.0)) * self.angle(theta)
    }

    pub fn u_interface(&self, theta: f64) -> f64 {
        let (a, _, _) = self.coefficients();
        a * self.rho.powi(self.m) * self.angle(theta)
    }

    pub fn dnu_plus(&self, theta: f64) -> f64 {
        let (_, b, c) = self.coefficients();
        let m = self.m as f64;
        let r = self.rho;
        m * (b * r.powf(m - 1.0) - c * r.powf(-m - 1.0)) * self.angle(theta)
    }

    pub fn dnu_minus(&self, theta: f64) -> f64 {
        let (a, _, _) = self.coefficients();
        let m = self.m as f64;
        m * a * self.rho.powf(m - 1.0) * self.angle(theta)
    }
}

pub fn solver(outer: &Curve, inner: Curve, s1: f64, s2: f64) -> TransmissionSolver {
    let geom = Geometry::new(outer.clone(), inner).expect("geometry");
    TransmissionSolver::new(geom, Conductivity::new(s1, s2).unwrap()).expect("solver")
}

/// Dirichlet data `f` on the outer circle and the matching flux `g = σ1 ∂_n u`
/// produced by `target`.
pub fn synth(outer: &Curve, target: &ShapeParams, n_inner: usize, s1: f64, s2: f64, f: &[f64]) -> Vec<f64> {
    let inner = build_curve(target, n_inner, None).unwrap();
    let s = solver(outer, inner, s1, s2);
    let sol = s.solve_dirichlet(&JumpData::zeros(n_inner), f).unwrap();
    let g: Vec<f64> = sol.dnu_outer.iter().map(|v| s1 * v).collect();
    let mean = outer.integrate(&g) / outer.perimeter();
    g.iter().map(|v| v - mean).collect()
}

pub struct Setup {
    pub outer: Curve,
    pub inner: Curve,
    pub s1: f64,
    pub s2: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl Setup {
    pub fn bundle(&self) -> StateBundle {
        self.bundle_on(self.inner.clone())
    }

    pub fn bundle_on(&self, inner: Curve) -> StateBundle {
        StateBundle::new(solver(&self.outer, inner, self.s1, self.s2), self.f.clone(), self.g.clone()).unwrap()
    }

    pub fn displaced(&self, h: &DeformationField, t: f64) -> Curve {
        self.inner.displaced(h, t).unwrap()
    }
}

/// Non-critical configuration: data from an off-center ellipse-like target,
/// evaluated on a different inclusion.
pub fn noncritical_setup(n: usize) -> Setup {
    let outer = Curve::circle([0.0, 0.0], 2.0, n).unwrap();
    let target = ShapeParams { center: [0.2, 0.0], r0: 0.75, cos_coeffs: vec![0.0, 0.08], sin_coeffs: vec![] };
    let current = ShapeParams { center: [0.05, 0.1], r0: 0.7, cos_coeffs: vec![0.03], sin_coeffs: vec![0.0, 0.04] };
    let (s1, s2) = (1.0, 5.0);
    let f: Vec<f64> = kvshape::fourier::grid(n).iter().map(|t| t.cos() + 0.5 * (2.0 * t).sin()).collect();
    let g = synth(&outer, &target, n, s1, s2, &f);
    let inner = build_curve(&current, n, None).unwrap();
    Setup { outer, inner, s1, s2, f, g }
}

/// Mixed normal/tangential field on `curve`.
pub fn mixed_field(curve: &Curve) -> DeformationField {
    let t = kvshape::fourier::grid(curve.len());
    DeformationField::new(
        t.iter().map(|t| 0.3 * t.cos() + 0.2 * (2.0 * t).sin() + 0.1).collect(),
        t.iter().map(|t| 0.25 * (3.0 * t).cos() - 0.1 * t.sin()).collect(),
    )
}

pub fn mixed_field_b(curve: &Curve) -> DeformationField {
    let t = kvshape::fourier::grid(curve.len());
    DeformationField::new(
        t.iter().map(|t| 0.2 * (3.0 * t).cos() - 0.15 * t.sin()).collect(),
        t.iter().map(|t| 0.1 + 0.2 * (2.0 * t).cos()).collect(),
    )
}

pub const LADDER: [f64; 4] = [1e-2, 5e-3, 2.5e-3, 1.25e-3];

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

pub fn polar(p: &Vec2) -> (f64, f64) {
    (p.norm(), p.y.atan2(p.x))
}
