//! Artifact encoders: CSV series, JSON reports, SVG overlays.
//!
//! CSV and SVG output depend only on their inputs. JSON reports also carry
//! wall-clock timings.

use std::fmt::Write as _;
use std::path::Path;

use kvshape::{RunHistory, ShapeParams};
use serde::Serialize;

use crate::config::Shape;
use crate::error::CliError;

/// A named output file held in memory until written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: &str, bytes: impl Into<Vec<u8>>) -> Self {
        Self { name: name.to_string(), bytes: bytes.into() }
    }

    pub fn is_csv(&self) -> bool {
        self.name.ends_with(".csv")
    }
}

pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for a in artifacts {
        std::fs::write(dir.join(&a.name), &a.bytes)?;
    }
    Ok(())
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Encode(e.to_string()))
}

pub fn measurements_csv(theta: &[f64], f: &[f64], g: &[f64]) -> Result<Vec<u8>, CliError> {
    csv_bytes(&["theta", "f", "g"], (0..theta.len()).map(|i| (theta[i], f[i], g[i])))
}

pub fn eigenvalues_csv(eigenvalues: &[f64]) -> Result<Vec<u8>, CliError> {
    csv_bytes(&["index", "lambda"], eigenvalues.iter().enumerate().map(|(i, l)| (i + 1, *l)))
}

pub fn grad_norm(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn iterates_csv(history: &RunHistory) -> Result<Vec<u8>, CliError> {
    csv_bytes(&["iter", "J", "grad_norm", "step"], history.records.iter().map(|r| (r.iter, r.value, grad_norm(&r.gradient), r.step)))
}

/// CSV with a header row and one row per entry of equal-length columns.
pub fn columns_csv(header: &[&str], columns: &[&[f64]]) -> Result<Vec<u8>, CliError> {
    let n = columns.first().map_or(0, |c| c.len());
    csv_bytes(header, (0..n).map(|i| columns.iter().map(|c| c[i]).collect::<Vec<_>>()))
}

pub fn shape_of(p: &ShapeParams) -> Shape {
    Shape { center: p.center, r0: p.r0, cos_coeffs: p.cos_coeffs.clone(), sin_coeffs: p.sin_coeffs.clone() }
}

#[derive(Debug, Serialize)]
pub struct IterationJson {
    pub iter: usize,
    #[serde(rename = "J")]
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub mu: f64,
    pub wall_time: f64,
    pub params: Shape,
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a, C: Serialize> {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub status: String,
    pub iterations: usize,
    pub initial_value: Option<f64>,
    pub final_value: Option<f64>,
    pub final_params: Shape,
    pub history: Vec<IterationJson>,
    pub total_seconds: f64,
}

pub fn history_json(history: &RunHistory) -> Vec<IterationJson> {
    history
        .records
        .iter()
        .map(|r| IterationJson {
            iter: r.iter,
            value: r.value,
            grad_norm: grad_norm(&r.gradient),
            step: r.step,
            mu: r.mu,
            wall_time: r.wall_time,
            params: shape_of(&r.params),
        })
        .collect()
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Closed polylines of the outer circle and the given shapes, in a square
/// view box around the outer circle.
pub fn overlay_svg(outer_radius: f64, shapes: &[(&str, &str, &ShapeParams)], samples: usize) -> String {
    let size = 480.0;
    let scale = 0.45 * size / outer_radius;
    let map = |x: f64, y: f64| (0.5 * size + scale * x, 0.5 * size - scale * y);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (cx, cy) = map(0.0, 0.0);
    let _ = writeln!(s, r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="black" stroke-width="1.5"/>"#, scale * outer_radius);
    for (i, (label, color, p)) in shapes.iter().enumerate() {
        let pts: Vec<String> = (0..samples)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
                let q = p.point_at(t);
                let (x, y) = map(q.x, q.y);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(s, r#"<polygon points="{}" fill="none" stroke="{color}" stroke-width="1.5"><title>{label}</title></polygon>"#, pts.join(" "));
        let _ = writeln!(s, r#"<text x="10" y="{}" font-family="monospace" font-size="12" fill="{color}">{label}</text>"#, 18 + 16 * i);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use kvshape::Termination;

    #[test]
    fn csv_headers_are_exact() {
        let m = measurements_csv(&[0.0, 1.0], &[1.0, 2.0], &[0.5, -0.5]).unwrap();
        let text = String::from_utf8(m).unwrap();
        assert_eq!(text.lines().next(), Some("theta,f,g"));
        assert_eq!(text.lines().count(), 3);
        let e = String::from_utf8(eigenvalues_csv(&[3.0, 2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(e.lines().collect::<Vec<_>>(), vec!["index,lambda", "1,3.0", "2,2.0", "3,1.0"]);
    }

    #[test]
    fn floats_round_trip_through_csv() {
        let v = [0.1 + 0.2, 1e-300, -std::f64::consts::PI];
        let text = String::from_utf8(eigenvalues_csv(&v).unwrap()).unwrap();
        let back: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(back, v);
    }

    #[test]
    fn empty_history_encodes() {
        let p = ShapeParams::circle([0.0, 0.0], 0.75);
        let h = RunHistory { records: vec![], status: Termination::MaxIter, final_params: p.clone() };
        let text = String::from_utf8(iterates_csv(&h).unwrap()).unwrap();
        assert_eq!(text, "iter,J,grad_norm,step\n");
        assert!(history_json(&h).is_empty());
        let svg = overlay_svg(2.0, &[("initial", "gray", &p)], 64);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polygon").count(), 1);
    }
}
