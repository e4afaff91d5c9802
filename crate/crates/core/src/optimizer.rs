//! Reconstruction of the inclusion by minimizing the Kohn–Vogelius
//! criterion over a finite radial basis.

use std::time::Instant;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier;
use crate::geometry::{build_curve, AdmissibleRegion, Curve, DeformationField, ShapeParams, Vec2};
use crate::shape_calculus::{kv_gradient, kv_hessian, kv_value, solve_derivatives_many, StateBundle};
use crate::transmission::{Conductivity, Geometry, TransmissionSolver};

/// Radial fields `ρ(θ) e_r` with `ρ ∈ {1, cos kθ, sin kθ : 1 ≤ k ≤ K}` and,
/// optionally, the unit translations `e_x`, `e_y`.
///
/// Coordinates are ordered `[1, cos 1θ … cos Kθ, sin 1θ … sin Kθ, e_x, e_y]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub max_mode: usize,
    pub translations: bool,
}

impl BasisSpec {
    pub fn len(&self) -> usize {
        1 + 2 * self.max_mode + if self.translations { 2 } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn labels(&self) -> Vec<String> {
        let mut out = vec!["r0".to_string()];
        out.extend((1..=self.max_mode).map(|k| format!("a{k}")));
        out.extend((1..=self.max_mode).map(|k| format!("b{k}")));
        if self.translations {
            out.push("cx".into());
            out.push("cy".into());
        }
        out
    }

    /// Ambient field of basis element `i` at polar angle `θ`.
    fn ambient(&self, i: usize, theta: f64) -> Vec2 {
        let k = self.max_mode;
        let er = Vec2::new(theta.cos(), theta.sin());
        match i {
            0 => er,
            i if i <= k => er * (i as f64 * theta).cos(),
            i if i <= 2 * k => er * ((i - k) as f64 * theta).sin(),
            i if i == 2 * k + 1 => Vec2::new(1.0, 0.0),
            _ => Vec2::new(0.0, 1.0),
        }
    }

    /// Basis fields decomposed into `(h_n, h_τ)` on a curve built by
    /// [`build_curve`], whose node `j` sits at polar angle `2πj/N`.
    pub fn fields(&self, curve: &Curve) -> Vec<DeformationField> {
        let theta = fourier::grid(curve.len());
        (0..self.len())
            .map(|i| {
                let amb: Vec<Vec2> = theta.iter().map(|&t| self.ambient(i, t)).collect();
                DeformationField::from_ambient(curve, &amb)
            })
            .collect()
    }
}

/// Everything fixed during a reconstruction: outer boundary, conductivities,
/// discretization and the measurement pair.
#[derive(Debug, Clone)]
pub struct InverseProblem {
    pub outer: Curve,
    pub sigma: Conductivity,
    pub n_inner: usize,
    pub d0: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl InverseProblem {
    pub fn region(&self) -> AdmissibleRegion<'_> {
        AdmissibleRegion { outer: &self.outer, d0: self.d0 }
    }

    pub fn curve(&self, params: &ShapeParams) -> Result<Curve> {
        build_curve(params, self.n_inner, Some(self.region()))
    }

    pub fn bundle(&self, params: &ShapeParams) -> Result<StateBundle> {
        let inner = self.curve(params)?;
        let solver = TransmissionSolver::new(Geometry::new(self.outer.clone(), inner)?, self.sigma)?;
        StateBundle::new(solver, self.f.clone(), self.g.clone())
    }
}

/// Gradient `g_i = DJ(h_i)` and Hessian `H_ij = D²J(h_i, h_j)` over a
/// basis. Every entry is computed; the matrix is not symmetrized.
pub fn assemble_gradient_and_hessian(bundle: &StateBundle, basis: &BasisSpec) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let fields = basis.fields(bundle.inner());
    let grad = DVector::from_iterator(fields.len(), fields.iter().map(|h| kv_gradient(bundle, h)));
    let derivs = solve_derivatives_many(bundle, &fields)?;
    let n = fields.len();
    let entries: Vec<f64> = (0..n * n).into_par_iter().map(|ij| kv_hessian(bundle, &derivs[ij / n], &derivs[ij % n])).collect();
    Ok((grad, DMatrix::from_row_slice(n, n, &entries)))
}

pub fn assemble_gradient(bundle: &StateBundle, basis: &BasisSpec) -> DVector<f64> {
    let fields = basis.fields(bundle.inner());
    DVector::from_iterator(fields.len(), fields.iter().map(|h| kv_gradient(bundle, h)))
}

/// `params + t·direction` in basis coordinates, rejected when the new shape
/// is degenerate or leaves the admissible region.
pub fn update_shape(
    params: &ShapeParams,
    basis: &BasisSpec,
    direction: &[f64],
    t: f64,
    region: Option<AdmissibleRegion<'_>>,
) -> Result<ShapeParams> {
    if direction.len() != basis.len() {
        return Err(Error::SizeMismatch { expected: basis.len(), found: direction.len() });
    }
    let k = basis.max_mode;
    let mut out = params.clone();
    let modes = k.max(params.max_mode());
    out.cos_coeffs.resize(modes, 0.0);
    out.sin_coeffs.resize(modes, 0.0);
    out.r0 += t * direction[0];
    for m in 0..k {
        out.cos_coeffs[m] += t * direction[1 + m];
        out.sin_coeffs[m] += t * direction[1 + k + m];
    }
    if basis.translations {
        out.center[0] += t * direction[2 * k + 1];
        out.center[1] += t * direction[2 * k + 2];
    }
    // Validate on the same dense sample used by build_curve.
    let check_nodes = 64.max(4 * modes + 16);
    let check_nodes = check_nodes + check_nodes % 2;
    if let Err(e) = build_curve(&out, check_nodes, region) {
        return Err(Error::StepLeavesAdmissibleSet(Box::new(e)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Descent,
    LevenbergMarquardt,
    FrozenNewton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    pub mode: Mode,
    pub basis: BasisSpec,
    pub max_iter: usize,
    pub tol_grad: f64,
    pub tol_value: f64,
    pub armijo_c: f64,
    pub step0: f64,
    pub min_step: f64,
    pub mu0: f64,
    pub freeze_period: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            mode: Mode::LevenbergMarquardt,
            basis: BasisSpec { max_mode: 4, translations: true },
            max_iter: 50,
            tol_grad: 1e-10,
            tol_value: 1e-14,
            armijo_c: 1e-4,
            step0: 1.0,
            min_step: 1e-8,
            mu0: 1e-3,
            freeze_period: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIter,
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
            Termination::LineSearchFailed => "line_search_failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub params: ShapeParams,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Accepted step length leading to the next iterate (0 on the last).
    pub step: f64,
    pub mu: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub records: Vec<IterationRecord>,
    pub status: Termination,
    pub final_params: ShapeParams,
}

impl RunHistory {
    pub fn initial_value(&self) -> Option<f64> {
        self.records.first().map(|r| r.value)
    }

    pub fn final_value(&self) -> Option<f64> {
        self.records.last().map(|r| r.value)
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }
}

/// Solution of `(H + μI) d = −g`; `None` when the system is singular.
pub fn regularized_direction(h: &DMatrix<f64>, g: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let n = g.len();
    let m = h + DMatrix::<f64>::identity(n, n) * mu;
    m.lu().solve(&(-g))
}

/// Minimizes `J` from `initial`. A failed line search ends the run and is
/// reported through [`RunHistory::status`].
pub fn reconstruct(problem: &InverseProblem, initial: &ShapeParams, opts: &OptimizerOptions) -> Result<RunHistory> {
    let start = Instant::now();
    let basis = opts.basis;
    let mut params = initial.clone();
    let mut bundle = problem.bundle(&params)?;
    let mut value = kv_value(&bundle);
    let mut mu = opts.mu0;
    let mut frozen: Option<DMatrix<f64>> = None;
    let mut records = Vec::new();

    for iter in 0..=opts.max_iter {
        let need_hessian = match opts.mode {
            Mode::Descent => false,
            Mode::LevenbergMarquardt => true,
            Mode::FrozenNewton => frozen.is_none() || iter % opts.freeze_period.max(1) == 0,
        };
        let (grad, hess) = if need_hessian {
            let (g, h) = assemble_gradient_and_hessian(&bundle, &basis)?;
            (g, Some(h))
        } else {
            (assemble_gradient(&bundle, &basis), None)
        };
        if opts.mode == Mode::FrozenNewton && hess.is_some() {
            frozen = hess.clone();
        }
        let hess = if opts.mode == Mode::FrozenNewton { frozen.clone() } else { hess };
        records.push(IterationRecord {
            iter,
            params: params.clone(),
            value,
            gradient: grad.as_slice().to_vec(),
            step: 0.0,
            mu,
            wall_time: start.elapsed().as_secs_f64(),
        });
        let gnorm = grad.amax();
        info!("iter {iter}: J = {value:.6e}, |g| = {gnorm:.3e}, mu = {mu:.2e}");
        if gnorm <= opts.tol_grad || value <= opts.tol_value {
            return Ok(RunHistory { records, status: Termination::Converged, final_params: params });
        }
        if iter == opts.max_iter {
            break;
        }

        let mut accepted = None;
        let attempts = if opts.mode == Mode::Descent { 1 } else { 8 };
        for attempt in 0..attempts {
            let dir = match &hess {
                Some(h) => match regularized_direction(h, &grad, mu) {
                    Some(d) if d.dot(&grad) < 0.0 => d,
                    _ => {
                        mu *= 4.0;
                        continue;
                    }
                },
                None => -grad.clone(),
            };
            let slope = dir.dot(&grad);
            let full_only = hess.is_some() && attempt + 1 < attempts;
            let mut t = opts.step0;
            while t >= opts.min_step {
                let trial = update_shape(&params, &basis, dir.as_slice(), t, Some(problem.region()))
                    .and_then(|p| problem.bundle(&p).map(|b| (p, b)));
                match trial {
                    Ok((p, b)) => {
                        let v = kv_value(&b);
                        if v <= value + opts.armijo_c * t * slope {
                            accepted = Some((p, b, v, t));
                            break;
                        }
                        debug!("rejected t = {t:.3e}: J = {v:.6e}");
                    }
                    Err(e) => debug!("rejected t = {t:.3e}: {e}"),
                }
                if full_only {
                    break;
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            if hess.is_some() {
                mu *= 4.0;
            }
        }
        match accepted {
            Some((p, b, v, t)) => {
                records.last_mut().expect("record").step = t;
                params = p;
                bundle = b;
                value = v;
                if hess.is_some() {
                    mu *= 0.5;
                }
            }
            None => {
                return Ok(RunHistory { records, status: Termination::LineSearchFailed, final_params: params });
            }
        }
    }
    Ok(RunHistory { records, status: Termination::MaxIter, final_params: params })
}

/// Distance from `origin` to the polyline along the ray of angle `theta`.
fn ray_hit(poly: &[Vec2], origin: &Vec2, theta: f64) -> Option<f64> {
    let d = Vec2::new(theta.cos(), theta.sin());
    let n = poly.len();
    let mut best: Option<f64> = None;
    for i in 0..n {
        let a = poly[i] - origin;
        let b = poly[(i + 1) % n] - origin;
        let e = b - a;
        let denom = d.x * e.y - d.y * e.x;
        if denom.abs() < 1e-300 {
            continue;
        }
        let s = (a.x * e.y - a.y * e.x) / denom;
        let u = (a.x * d.y - a.y * d.x) / denom;
        if s > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) {
            best = Some(best.map_or(s, |b: f64| b.max(s)));
        }
    }
    best
}

/// Largest radial gap between two shapes, measured along rays from the
/// center of `reference`.
pub fn radial_deviation(shape: &ShapeParams, reference: &ShapeParams, samples: usize) -> f64 {
    let dense = 4096;
    let poly: Vec<Vec2> = fourier::grid(dense).into_iter().map(|t| shape.point_at(t)).collect();
    let origin = Vec2::new(reference.center[0], reference.center[1]);
    fourier::grid(samples)
        .into_iter()
        .map(|t| match ray_hit(&poly, &origin, t) {
            Some(r) => (r - reference.radius_at(t)).abs(),
            None => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}
