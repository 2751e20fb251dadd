//! Angular Fourier transforms on rings of `n_theta` equispaced samples.
//!
//! The first derivative drops the Nyquist mode (its derivative is not
//! representable by a real sample sequence); the second derivative keeps it with
//! multiplier `-(n/2)^2`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Signed wavenumber of FFT bin `k` for length `n`.
#[inline]
pub fn wavenumber(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Forward transform of every ring (unnormalized).
pub fn forward_rings(values: &[f64], nt: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(nt, false).process(&mut buf);
    buf
}

/// Inverse transform of every ring, including the `1/n` normalization; keeps the real part.
pub fn inverse_rings(mut spec: Vec<Complex64>, nt: usize) -> Vec<f64> {
    plan(nt, true).process(&mut spec);
    let s = 1.0 / nt as f64;
    spec.iter().map(|c| c.re * s).collect()
}

fn apply_multiplier(values: &[f64], nt: usize, mult: impl Fn(usize) -> Complex64) -> Vec<f64> {
    let mut spec = forward_rings(values, nt);
    for row in spec.chunks_mut(nt) {
        for (k, c) in row.iter_mut().enumerate() {
            *c *= mult(k);
        }
    }
    inverse_rings(spec, nt)
}

/// `d/dtheta` on every ring.
pub fn d_theta(values: &[f64], nt: usize) -> Vec<f64> {
    apply_multiplier(values, nt, |k| {
        if 2 * k == nt {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, wavenumber(k, nt))
        }
    })
}

/// `d^2/dtheta^2` on every ring.
pub fn d_theta2(values: &[f64], nt: usize) -> Vec<f64> {
    apply_multiplier(values, nt, |k| {
        let m = wavenumber(k, nt);
        Complex64::new(-m * m, 0.0)
    })
}

/// Antiderivative with zero mean (the mean of the input is ignored).
pub fn integrate_theta(values: &[f64], nt: usize) -> Vec<f64> {
    apply_multiplier(values, nt, |k| {
        if k == 0 || 2 * k == nt {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / wavenumber(k, nt))
        }
    })
}

/// Dense matrix (row-major) of an angular operator, obtained by applying it to unit vectors.
fn dense(nt: usize, op: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut m = vec![0.0; nt * nt];
    let mut e = vec![0.0; nt];
    for col in 0..nt {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[col] = 1.0;
        let out = op(&e);
        for row in 0..nt {
            m[row * nt + col] = out[row];
        }
    }
    m
}

pub fn d_theta_matrix(nt: usize) -> Vec<f64> {
    dense(nt, |v| d_theta(v, nt))
}

pub fn d_theta2_matrix(nt: usize) -> Vec<f64> {
    dense(nt, |v| d_theta2(v, nt))
}

/// Trigonometric interpolation of one ring at angle `theta`.
pub fn trig_interpolate(ring: &[f64], theta: f64) -> f64 {
    let n = ring.len();
    let spec = forward_rings(ring, n);
    let mut acc = spec[0].re;
    for (k, c) in spec.iter().enumerate().take(n / 2).skip(1) {
        let (s, co) = (k as f64 * theta).sin_cos();
        acc += 2.0 * (c.re * co - c.im * s);
    }
    if n.is_multiple_of(2) {
        acc += spec[n / 2].re * (0.5 * n as f64 * theta).cos();
    }
    acc / n as f64
}

/// Equispaced angles of a ring.
pub fn angles(nt: usize) -> Vec<f64> {
    (0..nt).map(|j| 2.0 * PI * j as f64 / nt as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_trig_polynomials() {
        let nt = 16;
        let th = angles(nt);
        let f: Vec<f64> = th.iter().map(|t| (3.0 * t).sin() + 0.5 * (2.0 * t).cos()).collect();
        let d = d_theta(&f, nt);
        let d2 = d_theta2(&f, nt);
        for (j, t) in th.iter().enumerate() {
            let e1 = 3.0 * (3.0 * t).cos() - (2.0 * t).sin();
            let e2 = -9.0 * (3.0 * t).sin() - 2.0 * (2.0 * t).cos();
            assert!((d[j] - e1).abs() < 1e-12);
            assert!((d2[j] - e2).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_matrix_matches_transform() {
        let nt = 10;
        let m = d_theta_matrix(nt);
        let f: Vec<f64> = angles(nt).iter().map(|t| t.cos() + (2.0 * t).sin()).collect();
        let fast = d_theta(&f, nt);
        for r in 0..nt {
            let slow: f64 = (0..nt).map(|c| m[r * nt + c] * f[c]).sum();
            assert!((slow - fast[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_is_exact_for_band_limited_data() {
        let nt = 12;
        let f: Vec<f64> = angles(nt).iter().map(|t| 1.0 + (2.0 * t).cos() - (5.0 * t).sin()).collect();
        let t: f64 = 0.377;
        let exact = 1.0 + (2.0 * t).cos() - (5.0 * t).sin();
        assert!((trig_interpolate(&f, t) - exact).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let nt = 16;
        let f: Vec<f64> = angles(nt).iter().map(|t| t.sin() + (4.0 * t).cos()).collect();
        let g = d_theta(&integrate_theta(&f, nt), nt);
        for j in 0..nt {
            assert!((g[j] - f[j]).abs() < 1e-12);
        }
    }
}
