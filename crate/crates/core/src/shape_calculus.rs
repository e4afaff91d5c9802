//! First and second shape derivatives of the states and of the
//! Kohn–Vogelius criterion `J(ω) = ∫_Ω σ |∇(u_d − u_n)|²`.
//!
//! Deformations are given by their traces `(h_n, h_τ)` on ∂ω and vanish
//! near ∂Ω. Every formula is specialized to planar curves: tangential
//! gradients are arclength derivatives and the second fundamental form acts
//! on tangents as multiplication by κ.

use log::warn;
use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{Curve, DeformationField};
use crate::transmission::{BoundaryKind, Conductivity, JumpData, TransmissionSolution, TransmissionSolver};

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Per-side tangential and normal data of a field on ∂ω.
#[derive(Debug, Clone)]
struct SideTraces {
    u_s_plus: Vec<f64>,
    u_s_minus: Vec<f64>,
    dn_plus: Vec<f64>,
    dn_minus: Vec<f64>,
    u_plus: Vec<f64>,
    u_minus: Vec<f64>,
}

impl SideTraces {
    fn new(curve: &Curve, s: &TransmissionSolution) -> Self {
        Self {
            u_s_plus: curve.d_ds(&s.u_plus),
            u_s_minus: curve.d_ds(&s.u_minus),
            dn_plus: s.dnu_plus.clone(),
            dn_minus: s.dnu_minus.clone(),
            u_plus: s.u_plus.clone(),
            u_minus: s.u_minus.clone(),
        }
    }

    fn difference(a: &Self, b: &Self) -> Self {
        let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>();
        Self {
            u_s_plus: d(&a.u_s_plus, &b.u_s_plus),
            u_s_minus: d(&a.u_s_minus, &b.u_s_minus),
            dn_plus: d(&a.dn_plus, &b.dn_plus),
            dn_minus: d(&a.dn_minus, &b.dn_minus),
            u_plus: d(&a.u_plus, &b.u_plus),
            u_minus: d(&a.u_minus, &b.u_minus),
        }
    }
}

/// Solved states `u_d`, `u_n` for one measurement pair, with the interface
/// data of `v = u_d − u_n` cached.
#[derive(Debug, Clone)]
pub struct StateBundle {
    solver: TransmissionSolver,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub u_d: TransmissionSolution,
    pub u_n: TransmissionSolution,
    ud_s: Vec<f64>,
    un_s: Vec<f64>,
    v: SideTraces,
    flip_jump_sign: bool,
}

impl StateBundle {
    pub fn new(solver: TransmissionSolver, f: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        let (u_d, u_n) = solver.solve_states(&f, &g)?;
        let curve = solver.geometry().inner();
        let ud_s = curve.d_ds(&u_d.u_plus);
        let un_s = curve.d_ds(&u_n.u_plus);
        let v = SideTraces::difference(&SideTraces::new(curve, &u_d), &SideTraces::new(curve, &u_n));
        let bundle = Self { solver, f, g, u_d, u_n, ud_s, un_s, v, flip_jump_sign: false };
        for s in [&bundle.u_d, &bundle.u_n] {
            let jump = max_abs(&s.u_plus.iter().zip(&s.u_minus).map(|(a, b)| a - b).collect::<Vec<_>>());
            if jump > 1e-9 {
                warn!("state trace jump {jump:.3e} exceeds tolerance");
            }
        }
        Ok(bundle)
    }

    /// Negates every first-order jump; a negative control for Taylor checks.
    pub fn with_flipped_jump_sign(mut self, flip: bool) -> Self {
        self.flip_jump_sign = flip;
        self
    }

    pub fn solver(&self) -> &TransmissionSolver {
        &self.solver
    }

    pub fn inner(&self) -> &Curve {
        self.solver.geometry().inner()
    }

    pub fn outer(&self) -> &Curve {
        self.solver.geometry().outer()
    }

    pub fn sigma(&self) -> Conductivity {
        self.solver.conductivity()
    }

    pub fn state(&self, kind: BoundaryKind) -> &TransmissionSolution {
        match kind {
            BoundaryKind::Dirichlet => &self.u_d,
            BoundaryKind::Neumann => &self.u_n,
        }
    }

    /// Interface trace of `v = u_d − u_n`.
    pub fn v_trace(&self) -> &[f64] {
        &self.v.u_plus
    }

    /// Exterior normal derivative `∂_n v⁺`.
    pub fn v_flux_plus(&self) -> &[f64] {
        &self.v.dn_plus
    }

    /// Largest interface trace mismatch between the two states.
    pub fn critical_mismatch(&self) -> f64 {
        max_abs(&self.v.u_plus).max(max_abs(&self.v.dn_plus))
    }
}

/// `α = ([σ]/σ2) h_n ∂_n u⁺`, `β = [σ] (h_n u_s)_s`.
pub fn first_order_jumps(sigma: Conductivity, curve: &Curve, state: &TransmissionSolution, h: &DeformationField) -> JumpData {
    let js = sigma.jump();
    let alpha: Vec<f64> = h.normal.iter().zip(&state.dnu_plus).map(|(hn, d)| js / sigma.sigma2 * hn * d).collect();
    let alt: Vec<f64> = h.normal.iter().zip(&state.dnu_minus).map(|(hn, d)| js / sigma.sigma1 * hn * d).collect();
    let gap = max_abs(&alpha.iter().zip(&alt).map(|(a, b)| a - b).collect::<Vec<_>>());
    let scale = max_abs(&alpha).max(1.0);
    if gap > 1e-6 * scale {
        warn!("flux continuity check on α failed by {gap:.3e}");
    }
    let u_s = curve.d_ds(&state.u_plus);
    let beta = curve.d_ds(&mul(&h.normal, &u_s)).into_iter().map(|v| js * v).collect();
    JumpData { alpha, beta }
}

/// Solutions `u_d'` and `u_n'` for one deformation field.
#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub h: DeformationField,
    pub u_d: TransmissionSolution,
    pub u_n: TransmissionSolution,
}

impl DerivativeBundle {
    pub fn get(&self, kind: BoundaryKind) -> &TransmissionSolution {
        match kind {
            BoundaryKind::Dirichlet => &self.u_d,
            BoundaryKind::Neumann => &self.u_n,
        }
    }
}

/// Shape derivative of one state: homogeneous outer data and the jumps of
/// [`first_order_jumps`].
pub fn solve_state_derivative(kind: BoundaryKind, bundle: &StateBundle, h: &DeformationField) -> Result<TransmissionSolution> {
    let mut jumps = first_order_jumps(bundle.sigma(), bundle.inner(), bundle.state(kind), h);
    if bundle.flip_jump_sign {
        jumps = jumps.negated();
    }
    let n_outer = bundle.outer().len();
    let zero = vec![0.0; n_outer];
    match kind {
        BoundaryKind::Dirichlet => bundle.solver.solve_dirichlet(&jumps, &zero),
        BoundaryKind::Neumann => bundle.solver.solve_neumann(&jumps, &zero, 0.0),
    }
}

pub fn solve_derivatives(bundle: &StateBundle, h: &DeformationField) -> Result<DerivativeBundle> {
    Ok(DerivativeBundle {
        h: h.clone(),
        u_d: solve_state_derivative(BoundaryKind::Dirichlet, bundle, h)?,
        u_n: solve_state_derivative(BoundaryKind::Neumann, bundle, h)?,
    })
}

/// Solves derivatives for several fields in parallel, preserving order.
pub fn solve_derivatives_many(bundle: &StateBundle, fields: &[DeformationField]) -> Result<Vec<DerivativeBundle>> {
    fields.par_iter().map(|h| solve_derivatives(bundle, h)).collect()
}

/// `h1_τ (h2_n)_s + h2_τ (h1_n)_s`.
fn cross_term(curve: &Curve, h1: &DeformationField, h2: &DeformationField) -> Vec<f64> {
    let d1 = curve.d_ds(&h1.normal);
    let d2 = curve.d_ds(&h2.normal);
    (0..curve.len()).map(|i| h1.tangential[i] * d2[i] + h2.tangential[i] * d1[i]).collect()
}

/// Jumps `[u'']` and `[σ ∂_n u'']` of the second shape derivative of a
/// state, explicit in `u`, `u'_1`, `u'_2`, `h1`, `h2`.
pub fn second_order_jumps(
    sigma: Conductivity,
    curve: &Curve,
    state: &TransmissionSolution,
    d1: &TransmissionSolution,
    d2: &TransmissionSolution,
    h1: &DeformationField,
    h2: &DeformationField,
) -> JumpData {
    let n = curve.len();
    let (s1, s2) = (sigma.sigma1, sigma.sigma2);
    let k = curve.curvature();
    let cross = cross_term(curve, h1, h2);
    let jump_dn = |s: &TransmissionSolution| -> Vec<f64> { (0..n).map(|i| s.dnu_plus[i] - s.dnu_minus[i]).collect() };
    let flux_s = |s: &TransmissionSolution| -> Vec<f64> {
        let p = curve.d_ds(&s.u_plus);
        let m = curve.d_ds(&s.u_minus);
        (0..n).map(|i| s1 * p[i] - s2 * m[i]).collect()
    };
    let ju = jump_dn(state);
    let j1 = jump_dn(d1);
    let j2 = jump_dn(d2);
    let alpha = (0..n)
        .map(|i| {
            let (h1n, h2n, h1t, h2t) = (h1.normal[i], h2.normal[i], h1.tangential[i], h2.tangential[i]);
            k[i] * (h1n * h2n - h1t * h2t) * ju[i] - (h1n * j2[i] + h2n * j1[i]) + cross[i] * ju[i]
        })
        .collect();
    let a: Vec<f64> = curve.d_ds(&state.u_plus).into_iter().map(|v| sigma.jump() * v).collect();
    let g1 = flux_s(d1);
    let g2 = flux_s(d2);
    let inner: Vec<f64> = (0..n)
        .map(|i| {
            let (h1n, h2n, h1t, h2t) = (h1.normal[i], h2.normal[i], h1.tangential[i], h2.tangential[i]);
            h2n * g1[i] + h1n * g2[i] + k[i] * h1t * h2t * a[i] - cross[i] * a[i] - k[i] * h1n * h2n * a[i]
        })
        .collect();
    JumpData { alpha, beta: curve.d_ds(&inner) }
}

/// `J = ∮_{∂Ω} (f − u_n)(σ1 ∂_n u_d − g) ds`.
pub fn kv_value(bundle: &StateBundle) -> f64 {
    let s1 = bundle.sigma().sigma1;
    let integrand: Vec<f64> = (0..bundle.outer().len())
        .map(|i| (bundle.f[i] - bundle.u_n.u_outer[i]) * (s1 * bundle.u_d.dnu_outer[i] - bundle.g[i]))
        .collect();
    bundle.outer().integrate(&integrand)
}

/// Boundary density `G` with `DJ(h) = ∮_{∂ω} G h_n ds`.
pub fn kv_gradient_density(bundle: &StateBundle) -> Vec<f64> {
    let sigma = bundle.sigma();
    let ratio = sigma.sigma1 / sigma.sigma2;
    (0..bundle.inner().len())
        .map(|i| {
            let (dd, dn) = (bundle.u_d.dnu_plus[i], bundle.u_n.dnu_plus[i]);
            let (td, tn) = (bundle.ud_s[i], bundle.un_s[i]);
            -sigma.jump() * (ratio * (dd * dd - dn * dn) + td * td - tn * tn)
        })
        .collect()
}

/// First shape derivative `DJ(ω)(h)`; depends on `h_n` only.
pub fn kv_gradient(bundle: &StateBundle, h: &DeformationField) -> f64 {
    bundle.inner().integrate(&mul(&kv_gradient_density(bundle), &h.normal))
}

/// `σ1 ∂_n(|∇v|²)⁺ − σ2 ∂_n(|∇v|²)⁻` on ∂ω, reconstructed from boundary
/// traces of the harmonic function `v = u_d − u_n` on each side.
pub fn energy_jump_normal_derivative(bundle: &StateBundle) -> Vec<f64> {
    let curve = bundle.inner();
    let sigma = bundle.sigma();
    let k = curve.curvature();
    let v = &bundle.v;
    let side = |u_s: &[f64], dn: &[f64]| -> Vec<f64> {
        let dn_s = curve.d_ds(dn);
        let u_ss = curve.d_ds(u_s);
        (0..curve.len())
            .map(|i| {
                let d_tn = dn_s[i] - k[i] * u_s[i];
                let d_nn = -u_ss[i] - k[i] * dn[i];
                2.0 * (u_s[i] * d_tn + dn[i] * d_nn)
            })
            .collect()
    };
    let plus = side(&v.u_s_plus, &v.dn_plus);
    let minus = side(&v.u_s_minus, &v.dn_minus);
    plus.iter().zip(&minus).map(|(p, m)| sigma.sigma1 * p - sigma.sigma2 * m).collect()
}

/// `[σ ∇a·∇b]` on ∂ω.
fn sigma_dot_jump(sigma: Conductivity, a: &SideTraces, b: &SideTraces) -> Vec<f64> {
    (0..a.u_plus.len())
        .map(|i| {
            sigma.sigma1 * (a.u_s_plus[i] * b.u_s_plus[i] + a.dn_plus[i] * b.dn_plus[i])
                - sigma.sigma2 * (a.u_s_minus[i] * b.u_s_minus[i] + a.dn_minus[i] * b.dn_minus[i])
        })
        .collect()
}

/// Second shape derivative `D²J(ω)(h1, h2)` from the boundary expression on
/// ∂ω. Uses the explicit second-order jumps, so no second-order solve is
/// needed.
pub fn kv_hessian(bundle: &StateBundle, d1: &DerivativeBundle, d2: &DerivativeBundle) -> f64 {
    kv_hessian_terms(bundle, d1, d2).iter().sum()
}

/// The five boundary integrals whose sum is [`kv_hessian`].
pub fn kv_hessian_terms(bundle: &StateBundle, d1: &DerivativeBundle, d2: &DerivativeBundle) -> [f64; 5] {
    let curve = bundle.inner();
    let sigma = bundle.sigma();
    let n = curve.len();
    let (h1, h2) = (&d1.h, &d2.h);
    let k = curve.curvature();
    let v = &bundle.v;

    let energy = sigma_dot_jump(sigma, v, v);
    let cross = cross_term(curve, h1, h2);
    let t1: Vec<f64> = (0..n).map(|i| energy[i] * (cross[i] - k[i] * h1.tangential[i] * h2.tangential[i])).collect();

    let en = energy_jump_normal_derivative(bundle);
    let t2: Vec<f64> = (0..n).map(|i| -0.5 * en[i] * h1.normal[i] * h2.normal[i]).collect();

    let sd1 = SideTraces::new(curve, &d1.u_d);
    let sn1 = SideTraces::new(curve, &d1.u_n);
    let sd2 = SideTraces::new(curve, &d2.u_d);
    let sn2 = SideTraces::new(curve, &d2.u_n);
    let vp1 = SideTraces::difference(&sd1, &sn1);
    let vp2 = SideTraces::difference(&sd2, &sn2);
    let g1 = sigma_dot_jump(sigma, v, &vp1);
    let g2 = sigma_dot_jump(sigma, v, &vp2);
    let t3: Vec<f64> = (0..n).map(|i| -2.0 * (h1.normal[i] * g2[i] + h2.normal[i] * g1[i])).collect();

    let t4: Vec<f64> = (0..n)
        .map(|i| {
            let plus = sd2.u_plus[i] * vp1.dn_plus[i] + sd1.u_plus[i] * vp2.dn_plus[i]
                - sn2.dn_plus[i] * vp1.u_plus[i]
                - sn1.dn_plus[i] * vp2.u_plus[i];
            let minus = sd2.u_minus[i] * vp1.dn_minus[i] + sd1.u_minus[i] * vp2.dn_minus[i]
                - sn2.dn_minus[i] * vp1.u_minus[i]
                - sn1.dn_minus[i] * vp2.u_minus[i];
            -(sigma.sigma1 * plus - sigma.sigma2 * minus)
        })
        .collect();

    let jd = second_order_jumps(sigma, curve, &bundle.u_d, &d1.u_d, &d2.u_d, h1, h2);
    let jn = second_order_jumps(sigma, curve, &bundle.u_n, &d1.u_n, &d2.u_n, h1, h2);
    let t5: Vec<f64> = (0..n)
        .map(|i| 2.0 * (v.u_plus[i] * jn.beta[i] - sigma.sigma1 * v.dn_plus[i] * jd.alpha[i]))
        .collect();

    [t1, t2, t3, t4, t5].map(|t| curve.integrate(&t))
}

/// Solves the derivative states for `h1`, `h2` and evaluates [`kv_hessian`].
pub fn kv_hessian_fields(bundle: &StateBundle, h1: &DeformationField, h2: &DeformationField) -> Result<f64> {
    let d1 = solve_derivatives(bundle, h1)?;
    let d2 = solve_derivatives(bundle, h2)?;
    Ok(kv_hessian(bundle, &d1, &d2))
}
