//! Nyström discretizations of the logarithmic single- and double-layer
//! operators, and Green representation formulas for interior evaluation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Curve, Vec2};
use crate::transmission::{Geometry, TransmissionSolution};

/// `Γ(x, y) = ln|x − y| / 2π`.
pub fn newtonian_kernel(x: &Vec2, y: &Vec2) -> Result<f64> {
    let r2 = (x - y).norm_squared();
    if r2 == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(r2.ln() / (4.0 * PI))
}

/// `∂_{n(y)} Γ(x, y) = (y − x)·n_y / (2π |x − y|²)`.
pub fn normal_kernel(x: &Vec2, y: &Vec2, n_y: &Vec2) -> Result<f64> {
    let d = y - x;
    let r2 = d.norm_squared();
    if r2 == 0.0 {
        return Err(Error::SingularEvaluation);
    }
    Ok(d.dot(n_y) / (2.0 * PI * r2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Single,
    Double,
    DoubleAdjoint,
}

/// Dense operator mapping densities on a source curve to values on a
/// target curve. Quadrature weights are folded into the matrix.
#[derive(Debug, Clone)]
pub struct LayerOperator {
    pub kind: LayerKind,
    /// True when source and target are the same curve.
    pub self_interaction: bool,
    pub matrix: DMatrix<f64>,
}

impl LayerOperator {
    pub fn apply(&self, density: &[f64]) -> Vec<f64> {
        assert_eq!(density.len(), self.matrix.ncols(), "density length does not match operator");
        (&self.matrix * DVector::from_column_slice(density)).as_slice().to_vec()
    }
}

fn check_disjoint(source: &Curve, target: &Curve) -> Result<()> {
    let d = source.node_distance(target);
    if !(d > 1e-12) {
        return Err(Error::BoundariesNotDisjoint(d));
    }
    let inside = target.nodes().iter().filter(|p| source.contains(p)).count();
    if inside != 0 && inside != target.len() {
        return Err(Error::BoundariesNotDisjoint(d));
    }
    let inside = source.nodes().iter().filter(|p| target.contains(p)).count();
    if inside != 0 && inside != source.len() {
        return Err(Error::BoundariesNotDisjoint(d));
    }
    Ok(())
}

fn from_rows(rows: Vec<Vec<f64>>, ncols: usize) -> DMatrix<f64> {
    let nrows = rows.len();
    DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j])
}

/// Weights of the periodic logarithmic quadrature
/// `∫ ln(4 sin²((t−s)/2)) φ(s) ds ≈ Σ_j r[(i−j) mod N] φ(t_j)`.
fn log_weights(n_nodes: usize) -> Vec<f64> {
    let n = n_nodes / 2;
    let nf = n as f64;
    (0..n_nodes)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n_nodes as f64;
            let mut s = 0.0;
            for m in 1..n {
                s += (m as f64 * t).cos() / m as f64;
            }
            -2.0 * PI / nf * s - PI / (nf * nf) * (nf * t).cos()
        })
        .collect()
}

/// Single layer `S φ(x) = ∮_{source} Γ(x, y) φ(y) ds(y)` evaluated on
/// `target`, or on `source` itself when `target` is `None`.
pub fn assemble_single_layer(source: &Curve, target: Option<&Curve>) -> Result<LayerOperator> {
    let ns = source.len();
    let matrix = match target {
        Some(target) => {
            check_disjoint(source, target)?;
            let rows: Vec<Vec<f64>> = target
                .nodes()
                .par_iter()
                .map(|x| {
                    source
                        .nodes()
                        .iter()
                        .zip(source.weights())
                        .map(|(y, w)| (x - y).norm_squared().ln() / (4.0 * PI) * w)
                        .collect()
                })
                .collect();
            from_rows(rows, ns)
        }
        None => {
            let r = log_weights(ns);
            let h = 2.0 * PI / ns as f64;
            let nodes = source.nodes();
            let speed = source.speed();
            let rows: Vec<Vec<f64>> = (0..ns)
                .into_par_iter()
                .map(|i| {
                    (0..ns)
                        .map(|j| {
                            let smooth = if i == j {
                                (speed[i] * speed[i]).ln()
                            } else {
                                let dt = 2.0 * PI * (i as f64 - j as f64) / ns as f64;
                                let s = (0.5 * dt).sin();
                                ((nodes[i] - nodes[j]).norm_squared() / (4.0 * s * s)).ln()
                            };
                            speed[j] / (4.0 * PI) * (r[(i + ns - j) % ns] + h * smooth)
                        })
                        .collect()
                })
                .collect();
            from_rows(rows, ns)
        }
    };
    Ok(LayerOperator { kind: LayerKind::Single, self_interaction: target.is_none(), matrix })
}

/// Double layer with kernel `∂_{n(y)}Γ`, or its adjoint with kernel
/// `∂_{n(x)}Γ` when `adjoint` is set.
pub fn assemble_double_layer(source: &Curve, target: Option<&Curve>, adjoint: bool) -> Result<LayerOperator> {
    let ns = source.len();
    let kind = if adjoint { LayerKind::DoubleAdjoint } else { LayerKind::Double };
    let self_interaction = target.is_none();
    let tgt = match target {
        Some(t) => {
            check_disjoint(source, t)?;
            t
        }
        None => source,
    };
    let rows: Vec<Vec<f64>> = (0..tgt.len())
        .into_par_iter()
        .map(|i| {
            let x = tgt.nodes()[i];
            let nx = tgt.normal()[i];
            (0..ns)
                .map(|j| {
                    let w = source.weights()[j];
                    if self_interaction && i == j {
                        return source.curvature()[i] / (4.0 * PI) * w;
                    }
                    let d = source.nodes()[j] - x;
                    let r2 = d.norm_squared();
                    let num = if adjoint { -d.dot(&nx) } else { d.dot(&source.normal()[j]) };
                    num / (2.0 * PI * r2) * w
                })
                .collect()
        })
        .collect();
    Ok(LayerOperator { kind, self_interaction, matrix: from_rows(rows, ns) })
}

/// Region where [`harmonic_eval`] is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `Ω \ ω̄`, conductivity `σ1`.
    Annulus,
    /// `ω`, conductivity `σ2`.
    Inclusion,
}

fn layer_sum(curve: &Curve, x: &Vec2, value: &[f64], flux: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..curve.len() {
        let y = curve.nodes()[j];
        let d = y - x;
        let r2 = d.norm_squared();
        let dn_gamma = d.dot(&curve.normal()[j]) / (2.0 * PI * r2);
        let gamma = r2.ln() / (4.0 * PI);
        acc += (value[j] * dn_gamma - gamma * flux[j]) * curve.weights()[j];
    }
    acc
}

/// Evaluates the solution inside `region` from its boundary traces by the
/// Green representation formula.
pub fn harmonic_eval(geom: &Geometry, region: Region, sol: &TransmissionSolution, points: &[Vec2]) -> Result<Vec<f64>> {
    let outer = geom.outer();
    let inner = geom.inner();
    for p in points {
        let in_outer = outer.contains(p);
        let in_inner = inner.contains(p);
        let ok = match region {
            Region::Annulus => in_outer && !in_inner,
            Region::Inclusion => in_inner,
        };
        if !ok {
            return Err(Error::OutsideRegion);
        }
        let d_inner = inner.polyline_distance(p);
        if d_inner <= inner.mesh_width() {
            return Err(Error::NearSingularEvaluation { distance: d_inner, mesh: inner.mesh_width() });
        }
        if region == Region::Annulus {
            let d_outer = outer.polyline_distance(p);
            if d_outer <= outer.mesh_width() {
                return Err(Error::NearSingularEvaluation { distance: d_outer, mesh: outer.mesh_width() });
            }
        }
    }
    Ok(points
        .par_iter()
        .map(|x| match region {
            Region::Annulus => {
                layer_sum(outer, x, &sol.u_outer, &sol.dnu_outer) - layer_sum(inner, x, &sol.u_plus, &sol.dnu_plus)
            }
            Region::Inclusion => layer_sum(inner, x, &sol.u_minus, &sol.dnu_minus),
        })
        .collect())
}
