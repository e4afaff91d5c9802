//! Trigonometric (spectral) differentiation and interpolation of periodic
//! samples on the equispaced grid `t_j = 2πj/N`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(&mut buf));
    buf
}

fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Signed wavenumber of FFT bin `j` for an even-length grid.
fn wavenumber(j: usize, n: usize) -> f64 {
    if j <= n / 2 {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// `order`-th derivative with respect to the grid parameter.
///
/// The Nyquist mode is dropped for odd orders so that real data stays real.
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 2 && n % 2 == 0, "spectral differentiation needs an even grid");
    if order == 0 {
        return values.to_vec();
    }
    let mut coeffs = forward(values);
    for (j, c) in coeffs.iter_mut().enumerate() {
        let k = wavenumber(j, n);
        if j == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        *c *= Complex64::new(0.0, k).powu(order);
    }
    inverse_real(coeffs)
}

/// Evaluates the trigonometric interpolant of `values` at parameters `ts`.
pub fn interpolate(values: &[f64], ts: &[f64]) -> Vec<f64> {
    let n = values.len();
    let coeffs = forward(values);
    let half = n / 2;
    ts.iter()
        .map(|&t| {
            let mut acc = coeffs[0].re;
            for (k, c) in coeffs.iter().enumerate().take(half).skip(1) {
                let (s, co) = (k as f64 * t).sin_cos();
                acc += 2.0 * (c.re * co - c.im * s);
            }
            // Nyquist term, split evenly between ±N/2.
            acc += coeffs[half].re * (half as f64 * t).cos();
            acc / n as f64
        })
        .collect()
}

/// Equispaced parameter grid `2πj/N`.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn derivative_of_trig_modes() {
        let t = grid(32);
        let f: Vec<f64> = t.iter().map(|&t| (3.0 * t).sin() + 0.5 * (5.0 * t).cos()).collect();
        let d1 = derivative(&f, 1);
        let d2 = derivative(&f, 2);
        for (i, &ti) in t.iter().enumerate() {
            assert_abs_diff_eq!(d1[i], 3.0 * (3.0 * ti).cos() - 2.5 * (5.0 * ti).sin(), epsilon = 1e-12);
            assert_abs_diff_eq!(d2[i], -9.0 * (3.0 * ti).sin() - 12.5 * (5.0 * ti).cos(), epsilon = 1e-11);
        }
    }

    #[test]
    fn interpolation_reproduces_band_limited_data() {
        let t = grid(16);
        let f: Vec<f64> = t.iter().map(|&t| 1.0 + (2.0 * t).cos() - (3.0 * t).sin()).collect();
        let probe = [0.1, 1.7, 4.2];
        let vals = interpolate(&f, &probe);
        for (v, &p) in vals.iter().zip(&probe) {
            assert_abs_diff_eq!(*v, 1.0 + (2.0 * p).cos() - (3.0 * p).sin(), epsilon = 1e-13);
        }
    }
}
