//! Two-phase transmission problems
//!
//! ```text
//!   Δv = 0 in Ω \ ω̄ and in ω,   [v] = α,  [σ ∂_n v] = β on ∂ω,
//! ```
//!
//! with Dirichlet or Neumann data on ∂Ω, solved through block boundary
//! integral systems. Jumps are exterior minus interior, `[q] = q⁺ − q⁻`,
//! the exterior carrying `σ1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::Curve;
use crate::potential::{assemble_double_layer, assemble_single_layer, LayerOperator};

const BLOCK_CONDITION_LIMIT: f64 = 1e12;
const CAPACITY_CONDITION_LIMIT: f64 = 1e8;

/// Piecewise-constant conductivity: `σ1` in the annulus, `σ2` in ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conductivity {
    pub sigma1: f64,
    pub sigma2: f64,
}

impl Conductivity {
    pub fn new(sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) || !sigma1.is_finite() || !sigma2.is_finite() {
            return Err(Error::InvalidInput(format!("conductivities must be positive, got ({sigma1}, {sigma2})")));
        }
        Ok(Self { sigma1, sigma2 })
    }

    /// `[σ] = σ1 − σ2`.
    pub fn jump(&self) -> f64 {
        self.sigma1 - self.sigma2
    }

    /// `μ = [σ] / (σ1 + σ2)`.
    pub fn mu(&self) -> f64 {
        self.jump() / (self.sigma1 + self.sigma2)
    }
}

/// Interface data `[v] = α`, `[σ ∂_n v] = β`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpData {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl JumpData {
    pub fn zeros(n: usize) -> Self {
        Self { alpha: vec![0.0; n], beta: vec![0.0; n] }
    }

    pub fn negated(&self) -> Self {
        Self { alpha: self.alpha.iter().map(|v| -v).collect(), beta: self.beta.iter().map(|v| -v).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// All six traces of a solved transmission problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSolution {
    pub u_plus: Vec<f64>,
    pub u_minus: Vec<f64>,
    pub dnu_plus: Vec<f64>,
    pub dnu_minus: Vec<f64>,
    pub u_outer: Vec<f64>,
    pub dnu_outer: Vec<f64>,
    pub kind: BoundaryKind,
}

impl TransmissionSolution {
    /// Continuous interface trace; `u⁺` is used, which equals `u⁻` for states.
    pub fn interface_trace(&self) -> &[f64] {
        &self.u_plus
    }
}

/// Outer boundary ∂Ω, inclusion boundary ∂ω and every layer operator the
/// block systems need.
#[derive(Debug, Clone)]
pub struct Geometry {
    outer: Curve,
    inner: Curve,
    /// Self operators on ∂Ω.
    pub s_outer: LayerOperator,
    pub k_outer: LayerOperator,
    /// Self operators on ∂ω.
    pub s_inner: LayerOperator,
    pub k_inner: LayerOperator,
    /// Source ∂Ω, target ∂ω.
    pub s_outer_to_inner: LayerOperator,
    pub k_outer_to_inner: LayerOperator,
    /// Source ∂ω, target ∂Ω.
    pub s_inner_to_outer: LayerOperator,
    pub k_inner_to_outer: LayerOperator,
}

impl Geometry {
    pub fn new(outer: Curve, inner: Curve) -> Result<Self> {
        let d = inner.node_distance(&outer);
        if !inner.nodes().iter().all(|p| outer.contains(p)) {
            return Err(Error::BoundariesNotDisjoint(d));
        }
        Ok(Self {
            s_outer: assemble_single_layer(&outer, None)?,
            k_outer: assemble_double_layer(&outer, None, false)?,
            s_inner: assemble_single_layer(&inner, None)?,
            k_inner: assemble_double_layer(&inner, None, false)?,
            s_outer_to_inner: assemble_single_layer(&outer, Some(&inner))?,
            k_outer_to_inner: assemble_double_layer(&outer, Some(&inner), false)?,
            s_inner_to_outer: assemble_single_layer(&inner, Some(&outer))?,
            k_inner_to_outer: assemble_double_layer(&inner, Some(&outer), false)?,
            outer,
            inner,
        })
    }

    pub fn outer(&self) -> &Curve {
        &self.outer
    }

    pub fn inner(&self) -> &Curve {
        &self.inner
    }
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let norm1 = |a: &DMatrix<f64>| a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    match m.clone().lu().try_inverse() {
        Some(inv) => norm1(m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

fn factor(m: DMatrix<f64>, limit: f64, err: fn(f64) -> Error) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    let cond = condition_estimate(&m);
    if !(cond <= limit) {
        return Err(err(cond));
    }
    Ok(m.lu())
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::SizeMismatch { expected: n, found: v.len() });
    }
    Ok(())
}

fn vec_of(v: DVector<f64>) -> Vec<f64> {
    v.as_slice().to_vec()
}

type Lu = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// Factorized Dirichlet and Neumann block systems for one geometry and
/// conductivity pair.
#[derive(Debug, Clone)]
pub struct TransmissionSolver {
    geom: Geometry,
    sigma: Conductivity,
    gauge_row_scale: f64,
    dirichlet: Lu,
    neumann: Lu,
    s_inner: Lu,
}

impl TransmissionSolver {
    pub fn new(geom: Geometry, sigma: Conductivity) -> Result<Self> {
        Self::with_gauge_scale(geom, sigma, 1.0)
    }

    /// As [`TransmissionSolver::new`], with the Neumann gauge row multiplied
    /// by `gauge_row_scale`.
    pub fn with_gauge_scale(geom: Geometry, sigma: Conductivity, gauge_row_scale: f64) -> Result<Self> {
        let ni = geom.inner.len();
        let no = geom.outer.len();
        let mu = sigma.mu();
        let c1 = sigma.sigma1 / (sigma.sigma1 + sigma.sigma2);
        let half_i = DMatrix::<f64>::identity(ni, ni) * 0.5;
        let half_o = DMatrix::<f64>::identity(no, no) * 0.5;

        let a11 = &half_i + &geom.k_inner.matrix * mu;
        let a21 = &geom.k_inner_to_outer.matrix * mu;

        let mut dir = DMatrix::zeros(ni + no, ni + no);
        dir.view_mut((0, 0), (ni, ni)).copy_from(&a11);
        dir.view_mut((0, ni), (ni, no)).copy_from(&(&geom.s_outer_to_inner.matrix * c1));
        dir.view_mut((ni, 0), (no, ni)).copy_from(&a21);
        dir.view_mut((ni, ni), (no, no)).copy_from(&(&geom.s_outer.matrix * c1));

        // Bordered Neumann system: the extra row fixes ∮_{∂Ω} v, the extra
        // column absorbs the one-dimensional cokernel.
        let m = ni + no + 1;
        let mut neu = DMatrix::zeros(m, m);
        neu.view_mut((0, 0), (ni, ni)).copy_from(&a11);
        neu.view_mut((0, ni), (ni, no)).copy_from(&(&geom.k_outer_to_inner.matrix * -c1));
        neu.view_mut((ni, 0), (no, ni)).copy_from(&a21);
        neu.view_mut((ni, ni), (no, no)).copy_from(&((&geom.k_outer.matrix - &half_o) * -c1));
        for (j, w) in geom.outer.weights().iter().enumerate() {
            neu[(ni + no, ni + j)] = gauge_row_scale * w;
        }
        let ones = vec![1.0; no];
        let e_top = geom.s_outer_to_inner.apply(&ones);
        let e_bot = geom.s_outer.apply(&ones);
        for i in 0..ni {
            neu[(i, m - 1)] = e_top[i];
        }
        for i in 0..no {
            neu[(ni + i, m - 1)] = e_bot[i];
        }

        let s_inner = factor(geom.s_inner.matrix.clone(), CAPACITY_CONDITION_LIMIT, Error::CapacityDegeneracy)?;
        let dirichlet = factor(dir, BLOCK_CONDITION_LIMIT, Error::IllConditioned)?;
        let neumann = factor(neu, BLOCK_CONDITION_LIMIT, Error::IllConditioned)?;
        Ok(Self { geom, sigma, gauge_row_scale, dirichlet, neumann, s_inner })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn conductivity(&self) -> Conductivity {
        self.sigma
    }

    pub fn gauge_row_scale(&self) -> f64 {
        self.gauge_row_scale
    }

    /// Contribution of `(α, β)` to both block rows.
    fn jump_rhs(&self, jumps: &JumpData) -> (DVector<f64>, DVector<f64>) {
        let g = &self.geom;
        let (s1, s2) = (self.sigma.sigma1, self.sigma.sigma2);
        let inv = 1.0 / (s1 + s2);
        let alpha = DVector::from_column_slice(&jumps.alpha);
        let beta = DVector::from_column_slice(&jumps.beta);
        let k_alpha = &g.k_inner.matrix * &alpha;
        let top = ((&alpha * 0.5 - k_alpha) * s2 + &g.s_inner.matrix * &beta) * inv;
        let bot = (&g.k_inner_to_outer.matrix * &alpha * (-s2) + &g.s_inner_to_outer.matrix * &beta) * inv;
        (top, bot)
    }

    /// Interface traces from `v⁺` via the single-layer flux equation on ∂ω.
    fn finish(&self, p: Vec<f64>, jumps: &JumpData, u_outer: Vec<f64>, dnu_outer: Vec<f64>, kind: BoundaryKind) -> TransmissionSolution {
        let (s1, s2) = (self.sigma.sigma1, self.sigma.sigma2);
        let u_minus: Vec<f64> = p.iter().zip(&jumps.alpha).map(|(a, b)| a - b).collect();
        let km = self.geom.k_inner.apply(&u_minus);
        let rhs = DVector::from_iterator(u_minus.len(), km.iter().zip(&u_minus).map(|(k, u)| k - 0.5 * u));
        let phi = self.s_inner.solve(&rhs).expect("factorized single layer");
        let dnu_plus: Vec<f64> = phi.iter().zip(&jumps.beta).map(|(f, b)| s2 / s1 * f + b / s1).collect();
        let dnu_minus: Vec<f64> = dnu_plus.iter().zip(&jumps.beta).map(|(d, b)| (s1 * d - b) / s2).collect();
        TransmissionSolution { u_plus: p, u_minus, dnu_plus, dnu_minus, u_outer, dnu_outer, kind }
    }

    /// Transmission problem with `v = f1` on ∂Ω.
    pub fn solve_dirichlet(&self, jumps: &JumpData, f1: &[f64]) -> Result<TransmissionSolution> {
        let (ni, no) = (self.geom.inner.len(), self.geom.outer.len());
        check_len(&jumps.alpha, ni)?;
        check_len(&jumps.beta, ni)?;
        check_len(f1, no)?;
        let c1 = self.sigma.sigma1 / (self.sigma.sigma1 + self.sigma.sigma2);
        let (top, bot) = self.jump_rhs(jumps);
        let f = DVector::from_column_slice(f1);
        let top = top + &self.geom.k_outer_to_inner.matrix * &f * c1;
        let bot = bot + (&self.geom.k_outer.matrix * &f - &f * 0.5) * c1;
        let mut rhs = DVector::zeros(ni + no);
        rhs.rows_mut(0, ni).copy_from(&top);
        rhs.rows_mut(ni, no).copy_from(&bot);
        let x = self.dirichlet.solve(&rhs).ok_or(Error::IllConditioned(f64::INFINITY))?;
        let p = vec_of(x.rows(0, ni).into_owned());
        let q = vec_of(x.rows(ni, no).into_owned());
        Ok(self.finish(p, jumps, f1.to_vec(), q, BoundaryKind::Dirichlet))
    }

    /// Transmission problem with `∂_n v = g1` on ∂Ω, normalized by
    /// `∮_{∂Ω} v ds = gauge_mean`.
    ///
    /// Requires `σ1 ∮_{∂Ω} g1 = ∮_{∂ω} β`.
    pub fn solve_neumann(&self, jumps: &JumpData, g1: &[f64], gauge_mean: f64) -> Result<TransmissionSolution> {
        let (ni, no) = (self.geom.inner.len(), self.geom.outer.len());
        check_len(&jumps.alpha, ni)?;
        check_len(&jumps.beta, ni)?;
        check_len(g1, no)?;
        let outer_flux = self.sigma.sigma1 * self.geom.outer.integrate(g1);
        let inner_flux = self.geom.inner.integrate(&jumps.beta);
        let scale = outer_flux.abs().max(inner_flux.abs()).max(1.0);
        let residual = outer_flux - inner_flux;
        if residual.abs() > 1e-10 * scale {
            return Err(Error::NeumannIncompatible(residual));
        }
        let c1 = self.sigma.sigma1 / (self.sigma.sigma1 + self.sigma.sigma2);
        let (top, bot) = self.jump_rhs(jumps);
        let g = DVector::from_column_slice(g1);
        let top = top - &self.geom.s_outer_to_inner.matrix * &g * c1;
        let bot = bot - &self.geom.s_outer.matrix * &g * c1;
        let mut rhs = DVector::zeros(ni + no + 1);
        rhs.rows_mut(0, ni).copy_from(&top);
        rhs.rows_mut(ni, no).copy_from(&bot);
        rhs[ni + no] = self.gauge_row_scale * gauge_mean;
        let x = self.neumann.solve(&rhs).ok_or(Error::IllConditioned(f64::INFINITY))?;
        let p = vec_of(x.rows(0, ni).into_owned());
        let r = vec_of(x.rows(ni, no).into_owned());
        Ok(self.finish(p, jumps, r, g1.to_vec(), BoundaryKind::Neumann))
    }

    /// State pair for measurements `(f, g)` with `g = σ1 ∂_n u` on ∂Ω:
    /// `u_d` takes `f`, `u_n` takes `g` and the gauge `∮ u_n = ∮ f`.
    pub fn solve_states(&self, f: &[f64], g: &[f64]) -> Result<(TransmissionSolution, TransmissionSolution)> {
        let ni = self.geom.inner.len();
        let zero = JumpData::zeros(ni);
        let u_d = self.solve_dirichlet(&zero, f)?;
        let g1: Vec<f64> = g.iter().map(|v| v / self.sigma.sigma1).collect();
        let u_n = self.solve_neumann(&zero, &g1, self.geom.outer.integrate(f))?;
        Ok((u_d, u_n))
    }
}
