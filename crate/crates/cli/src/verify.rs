//! Property battery run by `kvshape verify`.

use std::f64::consts::PI;

use kvshape::diagnostics::{loglog_slope, TAYLOR_STEPS};
use kvshape::fourier;
use kvshape::spectral::fourier_normal_fields;
use kvshape::{
    assemble_double_layer, assemble_single_layer, build_curve, harmonic_eval, hessian_at_critical, kv_gradient, kv_hessian,
    kv_value, second_order_jumps, solve_derivatives, spectrum_report, AdmissibleRegion, BoundaryKind, Curve, DeformationField,
    Geometry, JumpData, Region, ShapeParams, StateBundle, TransmissionSolution, Vec2,
};
use serde::Serialize;

use crate::commands::{critical_bundles, solver_for, synth_flux};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured quantity: an error, a slope, or a ratio.
    pub value: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, value: f64, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, value, detail: detail.into() }
    }

    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value <= limit, value, format!("<= {limit:.1e}"))
    }

    fn slope(name: &str, value: f64, expected: f64, tol: f64) -> Self {
        Self::new(name, (value - expected).abs() <= tol, value, format!("slope {expected} +- {tol}"))
    }

    pub fn line(&self) -> String {
        format!("{} {:<44} {:>12.4e}  {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.value, self.detail)
    }
}

#[derive(Serialize)]
pub struct CheckRow<'a> {
    check: &'a str,
    passed: bool,
    value: f64,
    detail: &'a str,
}

impl<'a> From<&'a Check> for CheckRow<'a> {
    fn from(c: &'a Check) -> Self {
        Self { check: &c.name, passed: c.passed, value: c.value, detail: &c.detail }
    }
}

#[derive(Serialize)]
pub struct VerifyJson<'a> {
    pub config: &'a RunConfig,
    pub flip_jump_sign: bool,
    pub checks: &'a [Check],
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    max_abs(&got.iter().zip(want).map(|(a, b)| a - b).collect::<Vec<_>>()) / max_abs(want).max(f64::MIN_POSITIVE)
}

/// Runs every check; a failing check is reported, not returned as an error.
pub fn verify_suite(cfg: &RunConfig, flip_jump_sign: bool) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    geometry_checks(cfg, &mut out)?;
    potential_checks(cfg, &mut out)?;
    transmission_checks(cfg, &mut out)?;
    if cfg.domain.sigma1 == cfg.domain.sigma2 {
        equal_conductivity_checks(cfg, &mut out)?;
    } else {
        taylor_checks(cfg, flip_jump_sign, &mut out)?;
    }
    critical_checks(cfg, &mut out)?;
    if cfg.domain.sigma1 != cfg.domain.sigma2 {
        spectrum_checks(cfg, flip_jump_sign, &mut out)?;
    }
    Ok(out)
}

fn target_curve(cfg: &RunConfig) -> Result<Curve, CliError> {
    Ok(build_curve(&cfg.target_shape.params(), cfg.discretization.n_inner, None)?)
}

fn geometry_checks(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let c = target_curve(cfg)?;
    out.push(Check::at_most("geometry.turning_number", (c.integrate(c.curvature()) - 2.0 * PI).abs(), 1e-8));
    let frame = (0..c.len())
        .map(|i| (c.normal()[i].norm() - 1.0).abs().max(c.normal()[i].dot(&c.tangent()[i]).abs()))
        .fold(0.0, f64::max);
    out.push(Check::at_most("geometry.orthonormal_frame", frame, 1e-12));
    let t = fourier::grid(c.len());
    let f: Vec<f64> = t.iter().map(|t| (3.0 * t).cos() + t.sin()).collect();
    out.push(Check::at_most("geometry.exact_derivative_mean", c.integrate(&c.d_ds(&f)).abs(), 1e-10));
    let v_tau: Vec<f64> = t.iter().map(|t| (2.0 * t).sin()).collect();
    let v_n: Vec<f64> = t.iter().map(|t| 0.5 + t.cos()).collect();
    // ∮ f_s v_τ + f div_τ V = ∮ κ f v_n.
    let fs = c.d_ds(&f);
    let div = c.tangential_divergence(&v_tau, &v_n);
    let k = c.curvature();
    let lhs: Vec<f64> = (0..c.len()).map(|i| fs[i] * v_tau[i] + f[i] * div[i] - k[i] * f[i] * v_n[i]).collect();
    out.push(Check::at_most("geometry.tangential_integration_by_parts", c.integrate(&lhs).abs(), 1e-10));
    Ok(())
}

fn potential_checks(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let outer = cfg.outer_curve()?;
    let inner = target_curve(cfg)?;
    let mut worst: f64 = 0.0;
    for c in [&outer, &inner] {
        let k = assemble_double_layer(c, None, false)?;
        worst = worst.max(max_abs(&k.apply(&vec![1.0; c.len()]).iter().map(|v| v - 0.5).collect::<Vec<_>>()));
    }
    out.push(Check::at_most("potential.double_layer_of_one", worst, 1e-10));
    let r = cfg.domain.outer_radius;
    let s = assemble_single_layer(&outer, None)?;
    let t = fourier::grid(outer.len());
    let mut worst = max_abs(&s.apply(&vec![1.0; outer.len()]).iter().map(|v| v - r * r.ln()).collect::<Vec<_>>());
    for k in 1..=8 {
        let lam = -r / (2.0 * k as f64);
        for shift in [0.0, 0.5 * PI] {
            let phi: Vec<f64> = t.iter().map(|t| (k as f64 * t - shift).cos()).collect();
            let e = s.apply(&phi).iter().zip(&phi).map(|(a, b)| (a - lam * b).abs()).fold(0.0, f64::max);
            worst = worst.max(e);
        }
    }
    out.push(Check::at_most("potential.single_layer_circle_spectrum", worst, 1e-10));
    Ok(())
}

/// `(A, B, C)` of the concentric solution `A r^m` inside and
/// `B r^m + C r^{−m}` in the annulus for outer data `cos mθ`.
pub fn disk_coefficients(big_r: f64, rho: f64, s1: f64, s2: f64, m: i32) -> (f64, f64, f64) {
    let mc = (s1 - s2) / (s1 + s2);
    let b = 1.0 / (big_r.powi(m) + mc * rho.powi(2 * m) * big_r.powi(-m));
    let c = mc * b * rho.powi(2 * m);
    ((1.0 + mc) * b, b, c)
}

fn transmission_checks(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let (r, s1, s2) = (cfg.domain.outer_radius, cfg.domain.sigma1, cfg.domain.sigma2);
    let rho = cfg.target_shape.r0;
    let outer = cfg.outer_curve()?;
    let n = cfg.discretization.n_inner;
    let disk = Curve::circle([0.0, 0.0], rho, n)?;
    if (AdmissibleRegion { outer: &outer, d0: cfg.domain.d0 }).check(disk.nodes()).is_ok() {
        let solver = solver_for(cfg, &outer, disk)?;
        let to = fourier::grid(outer.len());
        let ti = fourier::grid(n);
        let f: Vec<f64> = to.iter().map(|t| t.cos()).collect();
        let sol = solver.solve_dirichlet(&JumpData::zeros(n), &f)?;
        let (a, b, c) = disk_coefficients(r, rho, s1, s2, 1);
        let cos_i: Vec<f64> = ti.iter().map(|t| t.cos()).collect();
        let scaled = |k: f64| cos_i.iter().map(|v| k * v).collect::<Vec<_>>();
        let err = [
            rel_err(&sol.u_plus, &scaled(a * rho)),
            rel_err(&sol.u_minus, &scaled(a * rho)),
            rel_err(&sol.dnu_plus, &scaled(b - c / (rho * rho))),
            rel_err(&sol.dnu_minus, &scaled(a)),
            rel_err(&sol.u_outer, &f),
            rel_err(&sol.dnu_outer, &to.iter().map(|t| (b - c / (r * r)) * t.cos()).collect::<Vec<_>>()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        out.push(Check::at_most("transmission.concentric_disk_oracle", err, 1e-7));
    } else {
        out.push(Check::new("transmission.concentric_disk_oracle", true, 0.0, "skipped: disk of radius r0 not admissible"));
    }

    let inner = target_curve(cfg)?;
    let solver = solver_for(cfg, &outer, inner.clone())?;
    let f = cfg.data.sample(&fourier::grid(outer.len()));
    let t = fourier::grid(inner.len());
    let jumps = JumpData {
        alpha: t.iter().map(|t| 0.1 * (2.0 * t).cos()).collect(),
        beta: inner.d_ds(&t.iter().map(|t| 0.2 * (3.0 * t).sin()).collect::<Vec<_>>()),
    };
    let sol = solver.solve_dirichlet(&jumps, &f)?;
    let scale = max_abs(&sol.dnu_outer).max(1.0) * outer.perimeter();
    let balance = inner
        .integrate(&sol.dnu_minus)
        .abs()
        .max((outer.integrate(&sol.dnu_outer) - inner.integrate(&sol.dnu_plus)).abs())
        .max((s1 * inner.integrate(&sol.dnu_plus) - inner.integrate(&jumps.beta)).abs());
    out.push(Check::at_most("transmission.flux_balance", balance / scale, 1e-10));
    let jumps_err = (0..n)
        .map(|i| {
            (sol.u_plus[i] - sol.u_minus[i] - jumps.alpha[i])
                .abs()
                .max((s1 * sol.dnu_plus[i] - s2 * sol.dnu_minus[i] - jumps.beta[i]).abs())
        })
        .fold(0.0, f64::max);
    out.push(Check::at_most("transmission.imposed_jumps", jumps_err, 1e-9));
    Ok(())
}

/// Data from the target, evaluated on a nearby shape.
struct Perturbed {
    outer: Curve,
    inner: Curve,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl Perturbed {
    fn bundle_on(&self, cfg: &RunConfig, inner: Curve, flip: bool) -> Result<StateBundle, CliError> {
        Ok(StateBundle::new(solver_for(cfg, &self.outer, inner)?, self.f.clone(), self.g.clone())?.with_flipped_jump_sign(flip))
    }
}

fn perturbed(cfg: &RunConfig) -> Result<Perturbed, CliError> {
    let outer = cfg.outer_curve()?;
    let target = target_curve(cfg)?;
    let f = cfg.data.sample(&fourier::grid(outer.len()));
    let (g, _) = synth_flux(&solver_for(cfg, &outer, target)?, &f)?;
    let t = cfg.target_shape.params();
    let r = cfg.domain.outer_radius;
    let candidates = [
        ShapeParams {
            center: [t.center[0] + 0.02 * r, t.center[1] - 0.015 * r],
            r0: 0.93 * t.r0,
            cos_coeffs: t.cos_coeffs.iter().map(|c| 0.5 * c).chain([0.03 * t.r0]).collect(),
            sin_coeffs: t.sin_coeffs.iter().map(|c| 0.5 * c).chain([0.0, 0.04 * t.r0]).collect(),
        },
        ShapeParams { r0: 0.9 * t.r0, ..t.clone() },
    ];
    for p in candidates {
        if let Ok(inner) = build_curve(&p, cfg.discretization.n_inner, Some(AdmissibleRegion { outer: &outer, d0: cfg.domain.d0 })) {
            return Ok(Perturbed { outer, inner, f, g });
        }
    }
    Err(CliError::Config { key: "target_shape".into(), message: "no admissible perturbation for Taylor checks".into() })
}

fn mixed_field(curve: &Curve, scale: f64) -> DeformationField {
    let t = fourier::grid(curve.len());
    DeformationField::new(
        t.iter().map(|t| scale * (0.3 * t.cos() + 0.2 * (2.0 * t).sin() + 0.1)).collect(),
        t.iter().map(|t| scale * (0.25 * (3.0 * t).cos() - 0.1 * t.sin())).collect(),
    )
}

fn mixed_field_b(curve: &Curve, scale: f64) -> DeformationField {
    let t = fourier::grid(curve.len());
    DeformationField::new(
        t.iter().map(|t| scale * (0.2 * (3.0 * t).cos() - 0.15 * t.sin())).collect(),
        t.iter().map(|t| scale * (0.1 + 0.2 * (2.0 * t).cos())).collect(),
    )
}

/// Points on a circle halfway between the inclusion and ∂Ω.
fn probe_points(outer_radius: f64, inner: &Curve) -> Vec<Vec2> {
    let reach = inner.nodes().iter().map(|p| p.norm()).fold(0.0, f64::max);
    let r = 0.5 * (reach + outer_radius);
    (0..6).map(|k| 1.1 * k as f64).map(|a| Vec2::new(r * a.cos(), r * a.sin())).collect()
}

fn eval(outer: &Curve, inner: &Curve, sol: &TransmissionSolution, pts: &[Vec2]) -> Result<Vec<f64>, CliError> {
    Ok(harmonic_eval(&Geometry::new(outer.clone(), inner.clone())?, Region::Annulus, sol, pts)?)
}

fn taylor_checks(cfg: &RunConfig, flip: bool, out: &mut Vec<Check>) -> Result<(), CliError> {
    let p = perturbed(cfg)?;
    let b = p.bundle_on(cfg, p.inner.clone(), flip)?;
    let h = mixed_field(&p.inner, cfg.target_shape.r0);
    let d = solve_derivatives(&b, &h)?;
    let pts = probe_points(cfg.domain.outer_radius, &p.inner);

    // Interior state values.
    for kind in [BoundaryKind::Dirichlet, BoundaryKind::Neumann] {
        let name = match kind {
            BoundaryKind::Dirichlet => "dirichlet",
            BoundaryKind::Neumann => "neumann",
        };
        let u0 = eval(&p.outer, &p.inner, b.state(kind), &pts)?;
        let u1 = eval(&p.outer, &p.inner, d.get(kind), &pts)?;
        let jumps = second_order_jumps(b.sigma(), &p.inner, b.state(kind), d.get(kind), d.get(kind), &h, &h);
        let zero = vec![0.0; p.outer.len()];
        let sol2 = match kind {
            BoundaryKind::Dirichlet => b.solver().solve_dirichlet(&jumps, &zero)?,
            BoundaryKind::Neumann => b.solver().solve_neumann(&jumps, &zero, 0.0)?,
        };
        let u2 = eval(&p.outer, &p.inner, &sol2, &pts)?;
        let (mut r1, mut r2) = (Vec::new(), Vec::new());
        for &t in &TAYLOR_STEPS {
            let c = p.inner.displaced(&h, t)?;
            let bt = p.bundle_on(cfg, c.clone(), false)?;
            let ut = eval(&p.outer, &c, bt.state(kind), &pts)?;
            let e1: Vec<f64> = (0..ut.len()).map(|i| ut[i] - u0[i] - t * u1[i]).collect();
            let e2: Vec<f64> = (0..ut.len()).map(|i| e1[i] - 0.5 * t * t * u2[i]).collect();
            r1.push(max_abs(&e1));
            r2.push(max_abs(&e2));
        }
        out.push(Check::slope(&format!("taylor.state_{name}_first_order"), loglog_slope(&TAYLOR_STEPS, &r1), 2.0, 0.1));
        out.push(Check::slope(&format!("taylor.state_{name}_second_order"), loglog_slope(&TAYLOR_STEPS, &r2), 3.0, 0.2));
    }

    // Criterion value.
    let j0 = kv_value(&b);
    let dj = kv_gradient(&b, &h);
    let d2j = kv_hessian(&b, &d, &d);
    let (mut r1, mut r2) = (Vec::new(), Vec::new());
    for &t in &TAYLOR_STEPS {
        let jt = kv_value(&p.bundle_on(cfg, p.inner.displaced(&h, t)?, false)?);
        r1.push(jt - j0 - t * dj);
        r2.push(jt - j0 - t * dj - 0.5 * t * t * d2j);
    }
    out.push(Check::slope("taylor.kv_first_order", loglog_slope(&TAYLOR_STEPS, &r1), 2.0, 0.1));
    out.push(Check::slope("taylor.kv_second_order", loglog_slope(&TAYLOR_STEPS, &r2), 3.0, 0.2));

    // Purely tangential fields.
    let tang = DeformationField::tangential_only(h.tangential.clone());
    let g_tang = kv_gradient(&b, &tang);
    out.push(Check::new("structure.tangential_gradient_zero", g_tang == 0.0, g_tang.abs(), "exactly 0"));
    let mut rt = Vec::new();
    for &t in &TAYLOR_STEPS {
        rt.push(kv_value(&p.bundle_on(cfg, p.inner.displaced(&tang, t)?, false)?) - j0);
    }
    let st = loglog_slope(&TAYLOR_STEPS, &rt);
    out.push(Check::new("structure.tangential_value_second_order", st >= 1.9, st, "slope >= 2 (fit tolerance 0.1)"));

    // Symmetry of the general Hessian.
    let h2 = mixed_field_b(&p.inner, cfg.target_shape.r0);
    let d2 = solve_derivatives(&b, &h2)?;
    let (a12, a21) = (kv_hessian(&b, &d, &d2), kv_hessian(&b, &d2, &d));
    let asym = (a12 - a21).abs() / a12.abs().max(a21.abs()).max(f64::MIN_POSITIVE);
    out.push(Check::at_most("hessian.symmetry", asym, 1e-8));
    Ok(())
}

fn equal_conductivity_checks(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let p = perturbed(cfg)?;
    let b = p.bundle_on(cfg, p.inner.clone(), false)?;
    let h = mixed_field(&p.inner, cfg.target_shape.r0);
    let d = solve_derivatives(&b, &h)?;
    let traces = [&d.u_d, &d.u_n]
        .iter()
        .flat_map(|s| [max_abs(&s.u_plus), max_abs(&s.dnu_plus), max_abs(&s.u_outer), max_abs(&s.dnu_outer)])
        .fold(0.0, f64::max);
    out.push(Check::new("derivatives.state_derivatives_zero", traces == 0.0, traces, "exactly 0 when sigma1 = sigma2"));
    let g = kv_gradient(&b, &h);
    out.push(Check::new("derivatives.kv_gradient_zero", g == 0.0, g, "exactly 0 when sigma1 = sigma2"));
    let hh = kv_hessian(&b, &d, &d);
    out.push(Check::new("derivatives.kv_hessian_zero", hh == 0.0, hh, "exactly 0 when sigma1 = sigma2"));
    Ok(())
}

/// `∮ f g ds`, the energy `∫σ|∇u|²` of the measured state; the scale for
/// the criterion value and its gradient.
fn energy_scale(b: &StateBundle) -> f64 {
    let o = b.outer();
    o.integrate(&b.f.iter().zip(&b.g).map(|(f, g)| f * g).collect::<Vec<_>>()).abs().max(f64::MIN_POSITIVE)
}

fn critical_checks(cfg: &RunConfig, out: &mut Vec<Check>) -> Result<(), CliError> {
    let outer = cfg.outer_curve()?;
    let inner = target_curve(cfg)?;
    let solver = solver_for(cfg, &outer, inner.clone())?;
    let f = cfg.data.sample(&fourier::grid(outer.len()));
    let (g, _) = synth_flux(&solver, &f)?;
    let b = StateBundle::new(solver, f, g)?;
    let scale = energy_scale(&b);
    out.push(Check::at_most("critical.value", kv_value(&b).abs() / scale, 1e-12));
    let basis = kvshape::BasisSpec { max_mode: cfg.optimizer.max_modes, translations: true };
    let grad = kvshape::optimizer::assemble_gradient(&b, &basis);
    out.push(Check::at_most("critical.gradient", grad.amax() / scale, 1e-6));
    Ok(())
}

fn spectrum_checks(cfg: &RunConfig, flip: bool, out: &mut Vec<Check>) -> Result<(), CliError> {
    let bundles: Vec<StateBundle> = critical_bundles(cfg)?.into_iter().map(|b| b.with_flipped_jump_sign(flip)).collect();
    let fields = fourier_normal_fields(bundles[0].inner(), cfg.spectrum.modes);
    let m = hessian_at_critical(&bundles, &fields)?;
    let scale = m.amax().max(f64::MIN_POSITIVE);
    out.push(Check::at_most("spectrum.symmetry", (&m - m.transpose()).amax() / scale, 1e-8));

    // Critical formula against the general one, summed over the same bundles.
    let k = fields.len().min(4);
    let mut worst: f64 = 0.0;
    let mut general = vec![0.0; k * k];
    for b in &bundles {
        let d: Vec<_> = fields[..k].iter().map(|h| solve_derivatives(b, h)).collect::<kvshape::Result<_>>()?;
        for i in 0..k {
            for j in 0..k {
                general[i * k + j] += kv_hessian(b, &d[i], &d[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..k {
            let (a, g) = (m[(i, j)], general[i * k + j]);
            let excess = (a - g).abs() - 1e-12 * scale;
            worst = worst.max(excess / a.abs().max(g.abs()).max(1e-12 * scale));
        }
    }
    out.push(Check::at_most("spectrum.critical_vs_general", worst.max(0.0), 1e-6));

    let r = spectrum_report(&m, "fourier_normal");
    out.push(Check::new("spectrum.positive", r.positive, r.min_eigenvalue, "min >= -1e-10 max"));
    let ratio = r.eigenvalues.last().copied().unwrap_or(0.0) / r.eigenvalues[0];
    out.push(Check::new("spectrum.decay", r.decay_slope < 0.0 && ratio < 1.0, r.decay_slope, format!("last/first = {ratio:.3e}")));
    Ok(())
}
