//! Shape Hessian at the global minimizer and its eigenvalue decay.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier;
use crate::geometry::{Curve, DeformationField};
use crate::shape_calculus::{solve_derivatives_many, DerivativeBundle, StateBundle};

/// Relative trace mismatch accepted as `u_d = u_n`.
pub const CRITICAL_TOLERANCE: f64 = 1e-8;

/// Normal fields `cos kθ, sin kθ` (k = 1..=K, interleaved) on a curve whose
/// node `j` sits at parameter `2πj/N`.
pub fn fourier_normal_fields(curve: &Curve, max_mode: usize) -> Vec<DeformationField> {
    let t = fourier::grid(curve.len());
    let mut out = Vec::with_capacity(2 * max_mode);
    for k in 1..=max_mode {
        let kf = k as f64;
        out.push(DeformationField::normal_only(t.iter().map(|t| (kf * t).cos()).collect()));
        out.push(DeformationField::normal_only(t.iter().map(|t| (kf * t).sin()).collect()));
    }
    out
}

fn check_critical(bundle: &StateBundle) -> Result<()> {
    let scale = bundle.u_d.u_plus.iter().chain(&bundle.u_d.dnu_plus).fold(1.0f64, |m, v| m.max(v.abs()));
    let mismatch = bundle.critical_mismatch();
    if mismatch > CRITICAL_TOLERANCE * scale {
        return Err(Error::NotCritical(mismatch));
    }
    Ok(())
}

/// `M_ij = 2[σ]( ⟨v'_j, (h_{i,n} u_s)_s⟩ − (σ1/σ2)⟨∂_n u⁺ h_{i,n}, ∂_n v'_j⁺⟩ )`
/// with `v' = u_d' − u_n'`, valid when `u_d = u_n`.
fn critical_entry(bundle: &StateBundle, hi: &DeformationField, dj: &DerivativeBundle) -> f64 {
    let curve = bundle.inner();
    let sigma = bundle.sigma();
    let u = &bundle.u_d;
    let u_s = curve.d_ds(&u.u_plus);
    let t1 = curve.d_ds(&hi.normal.iter().zip(&u_s).map(|(h, d)| h * d).collect::<Vec<_>>());
    let n = curve.len();
    let integrand: Vec<f64> = (0..n)
        .map(|k| {
            let vp = dj.u_d.u_plus[k] - dj.u_n.u_plus[k];
            let dvp = dj.u_d.dnu_plus[k] - dj.u_n.dnu_plus[k];
            vp * t1[k] - sigma.sigma1 / sigma.sigma2 * u.dnu_plus[k] * hi.normal[k] * dvp
        })
        .collect();
    2.0 * sigma.jump() * curve.integrate(&integrand)
}

/// Critical-point Hessian over `fields`, summed over all measurement
/// bundles. Every bundle must satisfy `u_d = u_n`.
pub fn hessian_at_critical(bundles: &[StateBundle], fields: &[DeformationField]) -> Result<DMatrix<f64>> {
    let n = fields.len();
    let mut total = DMatrix::zeros(n, n);
    for bundle in bundles {
        check_critical(bundle)?;
        let derivs = solve_derivatives_many(bundle, fields)?;
        let entries: Vec<f64> =
            (0..n * n).into_par_iter().map(|ij| critical_entry(bundle, &fields[ij / n], &derivs[ij % n])).collect();
        total += DMatrix::from_row_slice(n, n, &entries);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub basis: String,
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Least-squares fit `ln λ_k ≈ intercept + slope·k` over positive λ.
    pub decay_slope: f64,
    pub decay_intercept: f64,
    pub min_eigenvalue: f64,
    /// `min λ ≥ −1e−10·λ_max`.
    pub positive: bool,
}

pub fn spectrum_report(matrix: &DMatrix<f64>, basis: &str) -> SpectrumReport {
    let eig = SymmetricEigen::new(matrix.clone());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, &l) in ev.iter().enumerate() {
        if l > 0.0 {
            xs.push((k + 1) as f64);
            ys.push(l.ln());
        }
    }
    let (decay_slope, decay_intercept) = linear_fit(&xs, &ys);
    let lmax = ev.first().copied().unwrap_or(0.0);
    let lmin = ev.last().copied().unwrap_or(0.0);
    SpectrumReport {
        basis: basis.to_string(),
        positive: lmin >= -1e-10 * lmax.abs(),
        min_eigenvalue: lmin,
        eigenvalues: ev,
        decay_slope,
        decay_intercept,
    }
}

/// Least-squares line `y ≈ b + a x`, returned as `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return (0.0, ys.first().copied().unwrap_or(0.0));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (a, my - a * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let r = spectrum_report(&DMatrix::identity(6, 6), "id");
        assert!(r.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-14));
        assert!(r.decay_slope.abs() < 1e-12);
        assert!(r.positive);
    }

    #[test]
    fn geometric_diagonal_spectrum() {
        let q: f64 = 0.3;
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(6, (0..6).map(|k| q.powi(k))));
        let r = spectrum_report(&m, "diag");
        assert!((r.decay_slope - q.ln()).abs() < 1e-10);
        assert_eq!(r.eigenvalues.len(), 6);
    }

    #[test]
    fn negative_eigenvalue_is_flagged() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        assert!(!spectrum_report(&m, "x").positive);
    }
}
