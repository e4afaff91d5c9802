use std::time::Instant;

use kvshape::fourier;
use kvshape::optimizer::radial_deviation;
use kvshape::spectral::fourier_normal_fields;
use kvshape::{
    build_curve, hessian_at_critical, reconstruct, spectrum_report, BasisSpec, Conductivity, Curve, Geometry, InverseProblem,
    JumpData, Mode, OptimizerOptions, ShapeParams, StateBundle, TransmissionSolver,
};
use serde::Serialize;

use crate::config::{OptimizerMode, RunConfig};
use crate::error::CliError;
use crate::report::{self, Artifact, RunReport};
use crate::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Forward,
    Verify,
    Reconstruct,
    Spectrum,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Forward => "forward",
            Command::Verify => "verify",
            Command::Reconstruct => "reconstruct",
            Command::Spectrum => "spectrum",
        }
    }
}

/// Files produced by a command, a human-readable summary, and the names of
/// failed verification checks (empty unless `verify` found problems).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    pub failures: Vec<String>,
}

impl Outcome {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

pub fn run(cmd: Command, cfg: &RunConfig, flip_jump_sign: bool) -> Result<Outcome, CliError> {
    match cmd {
        Command::Synth => run_synth(cfg),
        Command::Forward => run_forward(cfg),
        Command::Verify => run_verify(cfg, flip_jump_sign),
        Command::Reconstruct => run_reconstruct(cfg),
        Command::Spectrum => run_spectrum(cfg),
    }
}

pub fn conductivity(cfg: &RunConfig) -> Result<Conductivity, CliError> {
    Ok(Conductivity::new(cfg.domain.sigma1, cfg.domain.sigma2)?)
}

pub fn solver_for(cfg: &RunConfig, outer: &Curve, inner: Curve) -> Result<TransmissionSolver, CliError> {
    Ok(TransmissionSolver::new(Geometry::new(outer.clone(), inner)?, conductivity(cfg)?)?)
}

/// Synthetic measurements on ∂Ω produced by the target shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub theta: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Quadrature mean removed from `σ1 ∂_n u_d` so that `∮ g ds = 0`.
    pub mean_correction: f64,
}

/// Flux `g = σ1 ∂_n u_d` of data `f` on the target, with its quadrature
/// mean removed; returns `(g, removed mean)`.
pub fn synth_flux(solver: &TransmissionSolver, f: &[f64]) -> Result<(Vec<f64>, f64), CliError> {
    let n_inner = solver.geometry().inner().len();
    let sol = solver.solve_dirichlet(&JumpData::zeros(n_inner), f)?;
    let outer = solver.geometry().outer();
    let s1 = solver.conductivity().sigma1;
    let g: Vec<f64> = sol.dnu_outer.iter().map(|v| s1 * v).collect();
    let mean = outer.integrate(&g) / outer.perimeter();
    Ok((g.iter().map(|v| v - mean).collect(), mean))
}

pub fn synth_measurements(cfg: &RunConfig) -> Result<Measurements, CliError> {
    let outer = cfg.outer_curve()?;
    let inner = build_curve(&cfg.target_shape.params(), cfg.discretization.n_inner, None)?;
    let solver = solver_for(cfg, &outer, inner)?;
    let theta = fourier::grid(outer.len());
    let f = cfg.data.sample(&theta);
    let (g, mean_correction) = synth_flux(&solver, &f)?;
    Ok(Measurements { theta, f, g, mean_correction })
}

#[derive(Serialize)]
struct SynthJson<'a> {
    config: &'a RunConfig,
    rows: usize,
    mean_correction: f64,
    flux_integral: f64,
}

fn svg_artifact(cfg: &RunConfig, shapes: &[(&str, &str, &ShapeParams)]) -> Option<Artifact> {
    cfg.output.emit_svg.then(|| Artifact::new("shapes.svg", report::overlay_svg(cfg.domain.outer_radius, shapes, 256)))
}

fn run_synth(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = synth_measurements(cfg)?;
    let outer = cfg.outer_curve()?;
    let flux_integral = outer.integrate(&m.g);
    let mut artifacts = vec![
        Artifact::new("measurements.csv", report::measurements_csv(&m.theta, &m.f, &m.g)?),
        Artifact::new(
            "synth.json",
            report::json_bytes(&SynthJson { config: cfg, rows: m.theta.len(), mean_correction: m.mean_correction, flux_integral })?,
        ),
    ];
    let target = cfg.target_shape.params();
    artifacts.extend(svg_artifact(cfg, &[("target", "#1f77b4", &target)]));
    let summary = format!("{} measurement rows; flux mean correction {:.3e}", m.theta.len(), m.mean_correction);
    Ok(Outcome { artifacts, summary, failures: vec![] })
}

#[derive(Serialize)]
struct ForwardJson<'a> {
    config: &'a RunConfig,
    outer_flux_integral: f64,
    interface_flux_integral_plus: f64,
    interface_flux_integral_minus: f64,
    max_trace_jump: f64,
}

fn run_forward(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let outer = cfg.outer_curve()?;
    let inner = build_curve(&cfg.target_shape.params(), cfg.discretization.n_inner, None)?;
    let solver = solver_for(cfg, &outer, inner.clone())?;
    let theta_o = fourier::grid(outer.len());
    let theta_i = fourier::grid(inner.len());
    let f = cfg.data.sample(&theta_o);
    let sol = solver.solve_dirichlet(&JumpData::zeros(inner.len()), &f)?;
    let max_trace_jump = sol.u_plus.iter().zip(&sol.u_minus).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let json = ForwardJson {
        config: cfg,
        outer_flux_integral: outer.integrate(&sol.dnu_outer),
        interface_flux_integral_plus: inner.integrate(&sol.dnu_plus),
        interface_flux_integral_minus: inner.integrate(&sol.dnu_minus),
        max_trace_jump,
    };
    let mut artifacts = vec![
        Artifact::new("outer_traces.csv", report::columns_csv(&["theta", "u", "dnu"], &[&theta_o, &sol.u_outer, &sol.dnu_outer])?),
        Artifact::new(
            "interface_traces.csv",
            report::columns_csv(
                &["theta", "u_plus", "u_minus", "dnu_plus", "dnu_minus"],
                &[&theta_i, &sol.u_plus, &sol.u_minus, &sol.dnu_plus, &sol.dnu_minus],
            )?,
        ),
        Artifact::new("forward.json", report::json_bytes(&json)?),
    ];
    let target = cfg.target_shape.params();
    artifacts.extend(svg_artifact(cfg, &[("target", "#1f77b4", &target)]));
    Ok(Outcome { artifacts, summary: format!("forward solve: max trace jump {max_trace_jump:.3e}"), failures: vec![] })
}

fn run_verify(cfg: &RunConfig, flip: bool) -> Result<Outcome, CliError> {
    let checks = verify::verify_suite(cfg, flip)?;
    let failures: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    let mut rows = csv::WriterBuilder::new().from_writer(Vec::new());
    for c in &checks {
        rows.serialize(verify::CheckRow::from(c))?;
    }
    let csv_bytes = rows.into_inner().map_err(|e| CliError::Encode(e.to_string()))?;
    let summary = checks.iter().map(|c| c.line()).collect::<Vec<_>>().join("\n");
    let artifacts = vec![
        Artifact::new("verify.csv", csv_bytes),
        Artifact::new("verify.json", report::json_bytes(&verify::VerifyJson { config: cfg, flip_jump_sign: flip, checks: &checks })?),
    ];
    Ok(Outcome { artifacts, summary, failures })
}

pub fn optimizer_options(cfg: &RunConfig) -> OptimizerOptions {
    let o = &cfg.optimizer;
    OptimizerOptions {
        mode: match o.mode {
            OptimizerMode::Descent => Mode::Descent,
            OptimizerMode::Lm => Mode::LevenbergMarquardt,
            OptimizerMode::Frozen => Mode::FrozenNewton,
        },
        basis: BasisSpec { max_mode: o.max_modes, translations: o.translations },
        max_iter: o.max_iter,
        tol_grad: o.tol_grad,
        tol_value: o.tol_value,
        armijo_c: o.armijo_c,
        step0: o.step0,
        mu0: o.mu0,
        freeze_period: o.freeze_period,
        ..OptimizerOptions::default()
    }
}

pub fn inverse_problem(cfg: &RunConfig) -> Result<InverseProblem, CliError> {
    let m = synth_measurements(cfg)?;
    Ok(InverseProblem {
        outer: cfg.outer_curve()?,
        sigma: conductivity(cfg)?,
        n_inner: cfg.discretization.n_inner,
        d0: cfg.domain.d0,
        f: m.f,
        g: m.g,
    })
}

fn run_reconstruct(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let problem = inverse_problem(cfg)?;
    let initial = cfg.initial();
    let history = reconstruct(&problem, &initial, &optimizer_options(cfg))?;
    let target = cfg.target_shape.params();
    let deviation = radial_deviation(&history.final_params, &target, 512);
    let json = RunReport {
        toolkit: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: "reconstruct",
        config: cfg,
        status: history.status.as_str().to_string(),
        iterations: history.iterations(),
        initial_value: history.initial_value(),
        final_value: history.final_value(),
        final_params: report::shape_of(&history.final_params),
        history: report::history_json(&history),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let theta = fourier::grid(problem.outer.len());
    let mut artifacts = vec![
        Artifact::new("measurements.csv", report::measurements_csv(&theta, &problem.f, &problem.g)?),
        Artifact::new("iterates.csv", report::iterates_csv(&history)?),
        Artifact::new("report.json", report::json_bytes(&json)?),
    ];
    artifacts.extend(svg_artifact(
        cfg,
        &[("target", "#1f77b4", &target), ("initial", "#999999", &initial), ("final", "#d62728", &history.final_params)],
    ));
    let summary = format!(
        "{}: {} iterations, J {:.3e} -> {:.3e}, max radial deviation {deviation:.3e}",
        history.status.as_str(),
        history.iterations(),
        history.initial_value().unwrap_or(f64::NAN),
        history.final_value().unwrap_or(f64::NAN),
    );
    Ok(Outcome { artifacts, summary, failures: vec![] })
}

/// One state bundle per data `cos mθ`, `sin mθ` for each measurement mode,
/// all synthesized on and evaluated at the target shape.
pub fn critical_bundles(cfg: &RunConfig) -> Result<Vec<StateBundle>, CliError> {
    let outer = cfg.outer_curve()?;
    let inner = build_curve(&cfg.target_shape.params(), cfg.discretization.n_inner, None)?;
    let solver = solver_for(cfg, &outer, inner)?;
    let theta = fourier::grid(outer.len());
    let mut out = Vec::new();
    for &m in &cfg.spectrum.measurement_modes {
        for shift in [0.0, 0.5 * std::f64::consts::PI] {
            let f: Vec<f64> = theta.iter().map(|t| (m as f64 * t - shift).cos()).collect();
            let (g, _) = synth_flux(&solver, &f)?;
            out.push(StateBundle::new(solver.clone(), f, g)?);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    config: &'a RunConfig,
    basis: String,
    eigenvalues: &'a [f64],
    /// `M_ii` for `cos kθ`, `sin kθ`, k = 1..modes.
    mode_diagonal: Vec<[f64; 2]>,
    decay_slope: f64,
    decay_intercept: f64,
    min_eigenvalue: f64,
    positive: bool,
}

fn run_spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bundles = critical_bundles(cfg)?;
    let fields = fourier_normal_fields(bundles[0].inner(), cfg.spectrum.modes);
    let m = hessian_at_critical(&bundles, &fields)?;
    let r = spectrum_report(&m, "fourier_normal");
    let json = SpectrumJson {
        config: cfg,
        basis: r.basis.clone(),
        eigenvalues: &r.eigenvalues,
        mode_diagonal: (0..cfg.spectrum.modes).map(|k| [m[(2 * k, 2 * k)], m[(2 * k + 1, 2 * k + 1)]]).collect(),
        decay_slope: r.decay_slope,
        decay_intercept: r.decay_intercept,
        min_eigenvalue: r.min_eigenvalue,
        positive: r.positive,
    };
    let artifacts = vec![
        Artifact::new("eigenvalues.csv", report::eigenvalues_csv(&r.eigenvalues)?),
        Artifact::new("spectrum.json", report::json_bytes(&json)?),
    ];
    let summary = format!(
        "{} eigenvalues, largest {:.3e}, smallest {:.3e}, fitted log slope {:.3}",
        r.eigenvalues.len(),
        r.eigenvalues.first().copied().unwrap_or(f64::NAN),
        r.min_eigenvalue,
        r.decay_slope
    );
    Ok(Outcome { artifacts, summary, failures: vec![] })
}
