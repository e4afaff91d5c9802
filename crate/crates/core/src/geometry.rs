//! Closed planar curves, their differential geometry, and the tangential
//! operators used on the interface.
//!
//! A [`Curve`] is sampled at `N` equispaced parameter values `t_j = 2πj/N`
//! and every derivative is computed spectrally. Orientation is
//! counter-clockwise, so `n = (τ_y, -τ_x)` is the outward normal and the
//! curvature `κ` is positive on convex curves. With this convention
//! `dτ/ds = -κ n` and `dn/ds = κ τ`.

use std::f64::consts::PI;

use log::debug;
use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::fourier;

pub type Vec2 = Vector2<f64>;

/// Radial trigonometric description of an inclusion about `center`:
/// `r(θ) = r0 + Σ_k a_k cos kθ + b_k sin kθ` (k starts at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeParams {
    pub center: [f64; 2],
    pub r0: f64,
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
}

impl ShapeParams {
    pub fn circle(center: [f64; 2], radius: f64) -> Self {
        Self { center, r0: radius, cos_coeffs: Vec::new(), sin_coeffs: Vec::new() }
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        let mut r = self.r0;
        for (k, a) in self.cos_coeffs.iter().enumerate() {
            r += a * ((k + 1) as f64 * theta).cos();
        }
        for (k, b) in self.sin_coeffs.iter().enumerate() {
            r += b * ((k + 1) as f64 * theta).sin();
        }
        r
    }

    pub fn point_at(&self, theta: f64) -> Vec2 {
        let r = self.radius_at(theta);
        Vec2::new(self.center[0] + r * theta.cos(), self.center[1] + r * theta.sin())
    }

    /// Highest trigonometric mode carried by the parameters.
    pub fn max_mode(&self) -> usize {
        self.cos_coeffs.len().max(self.sin_coeffs.len())
    }

    /// Minimum of `r(θ)` on a dense sample.
    pub fn min_radius(&self, samples: usize) -> f64 {
        fourier::grid(samples).into_iter().map(|t| self.radius_at(t)).fold(f64::INFINITY, f64::min)
    }

    /// Coefficient of `cos kθ` (`k ≥ 1`), zero when not stored.
    pub fn cos_coeff(&self, k: usize) -> f64 {
        self.cos_coeffs.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn sin_coeff(&self, k: usize) -> f64 {
        self.sin_coeffs.get(k - 1).copied().unwrap_or(0.0)
    }
}

/// Admissible region for inclusions: strictly inside `outer` with distance
/// to it greater than `d0`.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibleRegion<'a> {
    pub outer: &'a Curve,
    pub d0: f64,
}

impl AdmissibleRegion<'_> {
    /// Distance from the sampled points to the outer polyline, or an error
    /// if any point lies outside or within `d0`.
    pub fn check(&self, points: &[Vec2]) -> Result<f64> {
        let mut dist = f64::INFINITY;
        for p in points {
            if !self.outer.contains(p) {
                return Err(Error::ViolatesMargin { distance: 0.0, d0: self.d0 });
            }
            dist = dist.min(self.outer.polyline_distance(p));
        }
        if dist <= self.d0 {
            return Err(Error::ViolatesMargin { distance: dist, d0: self.d0 });
        }
        Ok(dist)
    }
}

/// A smooth closed curve sampled at equispaced parameter nodes.
#[derive(Debug, Clone)]
pub struct Curve {
    nodes: Vec<Vec2>,
    d1: Vec<Vec2>,
    d2: Vec<Vec2>,
    speed: Vec<f64>,
    tangent: Vec<Vec2>,
    normal: Vec<Vec2>,
    curvature: Vec<f64>,
    weights: Vec<f64>,
}

impl Curve {
    /// Builds a curve from its node positions at `t_j = 2πj/N`.
    ///
    /// The nodes must describe a simple counter-clockwise curve with
    /// nowhere-vanishing parameter speed.
    pub fn from_nodes(nodes: Vec<Vec2>) -> Result<Self> {
        let n = nodes.len();
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidInput(format!("curve needs an even node count >= 16, got {n}")));
        }
        let xs: Vec<f64> = nodes.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = nodes.iter().map(|p| p.y).collect();
        let (dx, dy) = (fourier::derivative(&xs, 1), fourier::derivative(&ys, 1));
        let (ddx, ddy) = (fourier::derivative(&xs, 2), fourier::derivative(&ys, 2));
        let d1: Vec<Vec2> = dx.iter().zip(&dy).map(|(&a, &b)| Vec2::new(a, b)).collect();
        let d2: Vec<Vec2> = ddx.iter().zip(&ddy).map(|(&a, &b)| Vec2::new(a, b)).collect();

        let speed: Vec<f64> = d1.iter().map(|v| v.norm()).collect();
        if speed.iter().any(|&s| !(s > 1e-12) || !s.is_finite()) {
            return Err(Error::DegenerateShape("vanishing parameter speed".into()));
        }
        let tangent: Vec<Vec2> = d1.iter().zip(&speed).map(|(v, s)| v / *s).collect();
        let normal: Vec<Vec2> = tangent.iter().map(|t| Vec2::new(t.y, -t.x)).collect();
        let curvature: Vec<f64> = d1
            .iter()
            .zip(&d2)
            .zip(&speed)
            .map(|((a, b), s)| (a.x * b.y - a.y * b.x) / (s * s * s))
            .collect();
        let h = 2.0 * PI / n as f64;
        let weights: Vec<f64> = speed.iter().map(|s| s * h).collect();

        let curve = Self { nodes, d1, d2, speed, tangent, normal, curvature, weights };
        let turning = curve.integrate(&curve.curvature);
        if (turning / (2.0 * PI)).round() != 1.0 {
            return Err(Error::DegenerateShape(format!(
                "turning number mismatch: total curvature {turning:.6} (curve must be simple and counter-clockwise)"
            )));
        }
        if (turning - 2.0 * PI).abs() > 1e-6 {
            debug!("total curvature {turning:.9} deviates from 2π; the curve may be under-resolved");
        }
        Ok(curve)
    }

    /// Circle of the given radius, counter-clockwise.
    pub fn circle(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        build_curve(&ShapeParams::circle(center, radius), n, None)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn first_derivative(&self) -> &[Vec2] {
        &self.d1
    }

    pub fn second_derivative(&self) -> &[Vec2] {
        &self.d2
    }

    /// Parameter-to-arclength Jacobian `|x'(t)|`.
    pub fn speed(&self) -> &[f64] {
        &self.speed
    }

    pub fn tangent(&self) -> &[Vec2] {
        &self.tangent
    }

    pub fn normal(&self) -> &[Vec2] {
        &self.normal
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// Arclength quadrature weights `|x'(t_j)| 2π/N`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest distance between consecutive nodes.
    pub fn mesh_width(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| (self.nodes[(i + 1) % n] - self.nodes[i]).norm()).fold(0.0, f64::max)
    }

    /// Signed area enclosed (positive for counter-clockwise curves).
    pub fn area(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| 0.5 * (self.nodes[i].x * self.d1[i].y - self.nodes[i].y * self.d1[i].x))
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64
    }

    fn check_len(&self, f: &[f64]) {
        assert_eq!(f.len(), self.len(), "boundary sample length does not match curve node count");
    }

    /// `df/ds` of a sampled function.
    pub fn d_ds(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f);
        fourier::derivative(f, 1).into_iter().zip(&self.speed).map(|(d, s)| d / s).collect()
    }

    /// Scalar component of `∇_τ f` along `τ`, i.e. `df/ds`.
    pub fn tangential_gradient(&self, f: &[f64]) -> Vec<f64> {
        self.d_ds(f)
    }

    /// `div_τ` of the field `v_τ τ + v_n n`: `d(v_τ)/ds + κ v_n`.
    pub fn tangential_divergence(&self, v_tau: &[f64], v_n: &[f64]) -> Vec<f64> {
        self.check_len(v_n);
        self.d_ds(v_tau).into_iter().zip(v_n).zip(&self.curvature).map(|((d, vn), k)| d + k * vn).collect()
    }

    /// `div_τ` of an ambient vector field sampled at the nodes.
    pub fn tangential_divergence_ambient(&self, field: &[Vec2]) -> Vec<f64> {
        assert_eq!(field.len(), self.len());
        let v_tau: Vec<f64> = field.iter().zip(&self.tangent).map(|(v, t)| v.dot(t)).collect();
        let v_n: Vec<f64> = field.iter().zip(&self.normal).map(|(v, n)| v.dot(n)).collect();
        self.tangential_divergence(&v_tau, &v_n)
    }

    /// Laplace–Beltrami operator `d²f/ds²`.
    pub fn laplace_beltrami(&self, f: &[f64]) -> Vec<f64> {
        self.d_ds(&self.d_ds(f))
    }

    /// Material and shape derivatives of the normal field under `h`:
    /// `ṅ = (-(h_n)_s + κ h_τ) τ` and `n' = -(h_n)_s τ`.
    pub fn normal_derivatives(&self, h: &DeformationField) -> (Vec<Vec2>, Vec<Vec2>) {
        let dhn = self.d_ds(&h.normal);
        let material = (0..self.len())
            .map(|i| self.tangent[i] * (-dhn[i] + self.curvature[i] * h.tangential[i]))
            .collect();
        let shape = (0..self.len()).map(|i| self.tangent[i] * (-dhn[i])).collect();
        (material, shape)
    }

    /// Trapezoidal (spectrally accurate) `∮ f ds`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.check_len(f);
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Alias of [`Curve::integrate`].
    pub fn boundary_integral(&self, f: &[f64]) -> f64 {
        self.integrate(f)
    }

    /// Ray-casting point-in-polygon test on the node polyline.
    pub fn contains(&self, p: &Vec2) -> bool {
        let n = self.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.nodes[i], self.nodes[j]);
            if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    /// Distance from `p` to the node polyline.
    pub fn polyline_distance(&self, p: &Vec2) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| segment_distance(p, &self.nodes[i], &self.nodes[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest node-to-node distance to another curve.
    pub fn node_distance(&self, other: &Curve) -> f64 {
        let mut d = f64::INFINITY;
        for a in &self.nodes {
            for b in &other.nodes {
                d = d.min((a - b).norm());
            }
        }
        d
    }

    /// Same curve with nodes displaced by `t·h`.
    pub fn displaced(&self, h: &DeformationField, t: f64) -> Result<Curve> {
        let amb = h.ambient(self);
        Curve::from_nodes(self.nodes.iter().zip(&amb).map(|(x, v)| x + v * t).collect())
    }
}

fn segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * s)).norm()
}

/// Discretizes a radial shape with `n_nodes` nodes at `θ_j = 2πj/N`.
///
/// When `region` is given, the curve must stay inside it with the `d0`
/// margin.
pub fn build_curve(params: &ShapeParams, n_nodes: usize, region: Option<AdmissibleRegion<'_>>) -> Result<Curve> {
    if n_nodes < 16 || n_nodes % 2 != 0 {
        return Err(Error::InvalidInput(format!("n_nodes must be even and >= 16, got {n_nodes}")));
    }
    let dense = (8 * n_nodes).max(1024);
    let rmin = params.min_radius(dense);
    if !(rmin > 0.0) {
        return Err(Error::DegenerateShape(format!("radius reaches {rmin:.4e}")));
    }
    if let Some(region) = region {
        let pts: Vec<Vec2> = fourier::grid(dense).into_iter().map(|t| params.point_at(t)).collect();
        region.check(&pts)?;
    }
    Curve::from_nodes(fourier::grid(n_nodes).into_iter().map(|t| params.point_at(t)).collect())
}

/// A deformation field given by its traces on a curve:
/// `h = h_n n + h_τ τ` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationField {
    pub normal: Vec<f64>,
    pub tangential: Vec<f64>,
}

impl DeformationField {
    pub fn new(normal: Vec<f64>, tangential: Vec<f64>) -> Self {
        assert_eq!(normal.len(), tangential.len());
        Self { normal, tangential }
    }

    pub fn normal_only(normal: Vec<f64>) -> Self {
        let n = normal.len();
        Self { normal, tangential: vec![0.0; n] }
    }

    pub fn tangential_only(tangential: Vec<f64>) -> Self {
        let n = tangential.len();
        Self { normal: vec![0.0; n], tangential }
    }

    /// Decomposes ambient vectors sampled at the curve nodes.
    pub fn from_ambient(curve: &Curve, field: &[Vec2]) -> Self {
        assert_eq!(field.len(), curve.len());
        let normal = field.iter().zip(curve.normal()).map(|(v, n)| v.dot(n)).collect();
        let tangential = field.iter().zip(curve.tangent()).map(|(v, t)| v.dot(t)).collect();
        Self { normal, tangential }
    }

    pub fn ambient(&self, curve: &Curve) -> Vec<Vec2> {
        (0..curve.len())
            .map(|i| curve.normal()[i] * self.normal[i] + curve.tangent()[i] * self.tangential[i])
            .collect()
    }

    pub fn len(&self) -> usize {
        self.normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normal.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            normal: self.normal.iter().map(|v| v * s).collect(),
            tangential: self.tangential.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            normal: self.normal.iter().zip(&other.normal).map(|(a, b)| a + b).collect(),
            tangential: self.tangential.iter().zip(&other.tangential).map(|(a, b)| a + b).collect(),
        }
    }
}
