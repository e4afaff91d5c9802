//! Run configuration: TOML sections `domain`, `discretization`,
//! `target_shape`, `initial_shape`, `data`, `optimizer`, `spectrum`,
//! `output`. See `config/schema.toml` for every key with its default.

use std::path::{Path, PathBuf};

use kvshape::{build_curve, AdmissibleRegion, Curve, ShapeParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    #[serde(default = "default_outer_radius")]
    pub outer_radius: f64,
    #[serde(default = "one")]
    pub sigma1: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default = "default_d0")]
    pub d0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    #[serde(default = "default_nodes")]
    pub n_outer: usize,
    #[serde(default = "default_nodes")]
    pub n_inner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    #[serde(default)]
    pub center: [f64; 2],
    pub r0: f64,
    #[serde(default)]
    pub cos_coeffs: Vec<f64>,
    #[serde(default)]
    pub sin_coeffs: Vec<f64>,
}

impl Shape {
    pub fn params(&self) -> ShapeParams {
        ShapeParams { center: self.center, r0: self.r0, cos_coeffs: self.cos_coeffs.clone(), sin_coeffs: self.sin_coeffs.clone() }
    }
}

/// Dirichlet data `f(θ) = constant + Σ cos[k−1]·cos kθ + sin[k−1]·sin kθ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Data {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl Default for Data {
    fn default() -> Self {
        Self { constant: 0.0, cos: vec![1.0], sin: vec![] }
    }
}

impl Data {
    pub fn sample(&self, thetas: &[f64]) -> Vec<f64> {
        thetas
            .iter()
            .map(|&t| {
                let c: f64 = self.cos.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * t).cos()).sum();
                let s: f64 = self.sin.iter().enumerate().map(|(k, b)| b * ((k + 1) as f64 * t).sin()).sum();
                self.constant + c + s
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerMode {
    Descent,
    Lm,
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Optimizer {
    #[serde(default = "default_mode")]
    pub mode: OptimizerMode,
    #[serde(default = "default_max_modes")]
    pub max_modes: usize,
    #[serde(default = "yes")]
    pub translations: bool,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol_grad")]
    pub tol_grad: f64,
    #[serde(default = "default_tol_value")]
    pub tol_value: f64,
    #[serde(default = "default_armijo")]
    pub armijo_c: f64,
    #[serde(default = "one")]
    pub step0: f64,
    #[serde(default = "default_mu0")]
    pub mu0: f64,
    #[serde(default = "default_freeze")]
    pub freeze_period: usize,
}

impl Default for Optimizer {
    fn default() -> Self {
        toml::from_str("").expect("optimizer defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrum {
    /// Fourier modes `k = 1..=modes` of `h_n`.
    #[serde(default = "default_spectrum_modes")]
    pub modes: usize,
    /// Data `cos mθ` and `sin mθ` are used for every listed `m`.
    #[serde(default = "default_measurement_modes")]
    pub measurement_modes: Vec<usize>,
}

impl Default for Spectrum {
    fn default() -> Self {
        Self { modes: default_spectrum_modes(), measurement_modes: default_measurement_modes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "yes")]
    pub emit_svg: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self { directory: None, emit_svg: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    #[serde(default = "default_discretization")]
    pub discretization: Discretization,
    pub target_shape: Shape,
    /// Defaults to a circle of radius `target_shape.r0` at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_shape: Option<Shape>,
    #[serde(default)]
    pub data: Data,
    #[serde(default)]
    pub optimizer: Optimizer,
    #[serde(default)]
    pub spectrum: Spectrum,
    #[serde(default)]
    pub output: Output,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_outer_radius() -> f64 {
    2.0
}
fn default_sigma2() -> f64 {
    5.0
}
fn default_d0() -> f64 {
    0.1
}
fn default_nodes() -> usize {
    128
}
fn default_discretization() -> Discretization {
    Discretization { n_outer: 128, n_inner: 128 }
}
fn default_mode() -> OptimizerMode {
    OptimizerMode::Lm
}
fn default_max_modes() -> usize {
    4
}
fn default_max_iter() -> usize {
    50
}
fn default_tol_grad() -> f64 {
    1e-10
}
fn default_tol_value() -> f64 {
    1e-14
}
fn default_armijo() -> f64 {
    1e-4
}
fn default_mu0() -> f64 {
    1e-3
}
fn default_freeze() -> usize {
    5
}
fn default_spectrum_modes() -> usize {
    8
}
fn default_measurement_modes() -> Vec<usize> {
    vec![1]
}

fn invalid(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), message: msg.into() }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be a positive number, got {v}")))
    }
}

fn node_count(key: &str, n: usize) -> Result<(), CliError> {
    if n >= 32 && n % 2 == 0 {
        Ok(())
    } else {
        Err(invalid(key, format!("must be even and at least 32, got {n}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            invalid(&key, e.into_inner().message().trim().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn outer_curve(&self) -> kvshape::Result<Curve> {
        Curve::circle([0.0, 0.0], self.domain.outer_radius, self.discretization.n_outer)
    }

    pub fn initial(&self) -> ShapeParams {
        match &self.initial_shape {
            Some(s) => s.params(),
            None => ShapeParams::circle([0.0, 0.0], self.target_shape.r0),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.domain;
        positive("domain.outer_radius", d.outer_radius)?;
        positive("domain.sigma1", d.sigma1)?;
        positive("domain.sigma2", d.sigma2)?;
        positive("domain.d0", d.d0)?;
        node_count("discretization.n_outer", self.discretization.n_outer)?;
        node_count("discretization.n_inner", self.discretization.n_inner)?;
        let o = &self.optimizer;
        if o.max_modes == 0 {
            return Err(invalid("optimizer.max_modes", "must be at least 1"));
        }
        if !(o.tol_grad >= 0.0) {
            return Err(invalid("optimizer.tol_grad", "must be non-negative"));
        }
        if !(o.tol_value >= 0.0) {
            return Err(invalid("optimizer.tol_value", "must be non-negative"));
        }
        if !(o.armijo_c > 0.0 && o.armijo_c < 1.0) {
            return Err(invalid("optimizer.armijo_c", format!("must lie in (0, 1), got {}", o.armijo_c)));
        }
        positive("optimizer.step0", o.step0)?;
        positive("optimizer.mu0", o.mu0)?;
        if o.freeze_period == 0 {
            return Err(invalid("optimizer.freeze_period", "must be at least 1"));
        }
        if self.spectrum.modes == 0 {
            return Err(invalid("spectrum.modes", "must be at least 1"));
        }
        if self.spectrum.measurement_modes.is_empty() || self.spectrum.measurement_modes.contains(&0) {
            return Err(invalid("spectrum.measurement_modes", "must list modes >= 1"));
        }
        if self.data.constant == 0.0 && self.data.cos.iter().chain(&self.data.sin).all(|c| *c == 0.0) {
            return Err(invalid("data", "Dirichlet data is identically zero"));
        }
        let outer = self.outer_curve().map_err(|e| invalid("domain.outer_radius", e.to_string()))?;
        let region = AdmissibleRegion { outer: &outer, d0: d.d0 };
        self.shape_admissible("target_shape", &self.target_shape.params(), region)?;
        let region = AdmissibleRegion { outer: &outer, d0: d.d0 };
        self.shape_admissible("initial_shape", &self.initial(), region)?;
        Ok(())
    }

    fn shape_admissible(&self, key: &str, p: &ShapeParams, region: AdmissibleRegion<'_>) -> Result<(), CliError> {
        positive(&format!("{key}.r0"), p.r0)?;
        build_curve(p, self.discretization.n_inner, Some(region)).map(|_| ()).map_err(|e| invalid(key, e.to_string()))
    }

    /// Canonical TOML echo; `RunConfig::from_toml` reads it back unchanged.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 12 hex digits of the SHA-256 of [`RunConfig::to_toml`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        format!("{digest:x}")[..12].to_string()
    }

    /// `output.directory` if set, else `runs/<hash>`.
    pub fn output_dir(&self) -> PathBuf {
        self.output.directory.clone().unwrap_or_else(|| Path::new("runs").join(self.hash()))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid("<file>", format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}
