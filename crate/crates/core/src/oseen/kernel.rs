//! Fundamental solution of the Oseen system
//! `-lap E + lambda d_1 E + grad e = delta I`, `div E = 0`.
//!
//! With `k = lambda / 2`, `G = ln r / 2 pi` and `Psi = e^{k x} K_0(k r) / 2 pi`
//! (so `lap G = delta` and `(-lap + lambda d_1) Psi = delta`), the tensor is
//! `E = delta_ij Psi - d_i d_j Phi` with `lambda d_1 Phi = G + Psi`:
//!
//! ```text
//! E_11 = Psi - d_1 S / lambda,  E_12 = E_21 = -d_2 S / lambda,  E_22 = d_1 S / lambda,
//! ```
//!
//! where `S = G + Psi`, and the pressure vector is `e = grad G`. The
//! logarithmic singularities of `G` and `Psi` cancel in `S`, leaving the
//! Stokes-like `ln r` behaviour at the origin; the wake sits along `+x`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::bessel::k0_k1_scaled;
use crate::error::{Error, Result};

/// Radius below which the kernel is not evaluated.
pub const SINGULAR_RADIUS: f64 = 1e-10;

/// Value, gradient and pressure of the Oseen tensor at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OseenKernelSample {
    pub z: [f64; 2],
    pub tensor: [[f64; 2]; 2],
    /// `gradient[l][i][j] = d_l E_ij`.
    pub gradient: [[[f64; 2]; 2]; 2],
    pub pressure: [f64; 2],
}

impl OseenKernelSample {
    /// Frobenius norm of the gradient.
    pub fn gradient_norm(&self) -> f64 {
        self.gradient.iter().flatten().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `Psi`, its gradient and Hessian, and the gradient and Hessian of `G`.
struct Potentials {
    psi: f64,
    d_psi: [f64; 2],
    dd_psi: [[f64; 2]; 2],
    d_g: [f64; 2],
    dd_g: [[f64; 2]; 2],
}

fn potentials(z: [f64; 2], lambda: f64) -> Potentials {
    let k = 0.5 * lambda;
    let r2 = z[0] * z[0] + z[1] * z[1];
    let r = r2.sqrt();
    let s = k * r;
    let (k0s, k1s) = k0_k1_scaled(s);
    // e^{k x} K_nu(k r) = e^{k (x - r)} e^{k r} K_nu(k r)
    let ex = (k * (z[0] - r)).exp() / (2.0 * PI);
    let psi = k0s * ex;
    // radial derivatives of K_0(k r) / 2 pi, times e^{k x}
    let a = -k * k1s * ex;
    let b = k * k * (k0s + k1s / s) * ex;
    let n = [z[0] / r, z[1] / r];
    let mut d_psi = [a * n[0], a * n[1]];
    d_psi[0] += k * psi;
    let mut dd_psi = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            let mut v = b * n[i] * n[j] + a * (delta - n[i] * n[j]) / r;
            if i == 0 {
                v += k * a * n[j];
            }
            if j == 0 {
                v += k * a * n[i];
            }
            if i == 0 && j == 0 {
                v += k * k * psi;
            }
            dd_psi[i][j] = v;
        }
    }
    let c = 1.0 / (2.0 * PI * r2);
    let d_g = [z[0] * c, z[1] * c];
    let mut dd_g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            dd_g[i][j] = c * (delta - 2.0 * n[i] * n[j]);
        }
    }
    Potentials { psi, d_psi, dd_psi, d_g, dd_g }
}

fn check_point(z: [f64; 2], lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("the Oseen tensor needs lambda > 0, got {lambda}")));
    }
    if !(z[0].hypot(z[1]) >= SINGULAR_RADIUS) {
        return Err(Error::Singularity(format!("|z| = {:.3e} < {SINGULAR_RADIUS:e}", z[0].hypot(z[1]))));
    }
    Ok(())
}

/// Tensor, gradient and pressure vector at `z != 0`.
pub fn oseen_tensor(z: [f64; 2], lambda: f64) -> Result<OseenKernelSample> {
    check_point(z, lambda)?;
    let p = potentials(z, lambda);
    let ds = [p.d_g[0] + p.d_psi[0], p.d_g[1] + p.d_psi[1]];
    let e11 = p.psi - ds[0] / lambda;
    let e12 = -ds[1] / lambda;
    let e22 = ds[0] / lambda;
    let mut gradient = [[[0.0; 2]; 2]; 2];
    for l in 0..2 {
        let dds0 = p.dd_g[l][0] + p.dd_psi[l][0];
        let dds1 = p.dd_g[l][1] + p.dd_psi[l][1];
        gradient[l][0][0] = p.d_psi[l] - dds0 / lambda;
        gradient[l][0][1] = -dds1 / lambda;
        gradient[l][1][0] = -dds1 / lambda;
        gradient[l][1][1] = dds0 / lambda;
    }
    Ok(OseenKernelSample { z, tensor: [[e11, e12], [e12, e22]], gradient, pressure: p.d_g })
}

/// Components `(E_11, E_12, E_22)` only.
pub fn oseen_values(z: [f64; 2], lambda: f64) -> [f64; 3] {
    let p = potentials(z, lambda);
    let ds = [p.d_g[0] + p.d_psi[0], p.d_g[1] + p.d_psi[1]];
    [p.psi - ds[0] / lambda, -ds[1] / lambda, ds[0] / lambda]
}

/// Gradient components `(d_1 E_11, d_2 E_11, d_1 E_12, d_2 E_12, d_1 E_22, d_2 E_22)`.
pub fn oseen_gradient(z: [f64; 2], lambda: f64) -> [f64; 6] {
    let p = potentials(z, lambda);
    let mut out = [0.0; 6];
    for l in 0..2 {
        let dds0 = p.dd_g[l][0] + p.dd_psi[l][0];
        let dds1 = p.dd_g[l][1] + p.dd_psi[l][1];
        out[l] = p.d_psi[l] - dds0 / lambda;
        out[2 + l] = -dds1 / lambda;
        out[4 + l] = dds0 / lambda;
    }
    out
}

/// Residual of the Oseen system at one point, by fourth-order central
/// differences of sampled values with step `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResidual {
    /// `max_ij |-lap E_ij + lambda d_1 E_ij + d_i e_j|`.
    pub momentum: f64,
    /// `max_j |d_i E_ij|`.
    pub divergence: f64,
    /// Size of the largest term in the momentum balance.
    pub scale: f64,
}

fn d1_4(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h)
}

fn d2_4(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(-2.0 * h) + 16.0 * f(-h) - 30.0 * f(0.0) + 16.0 * f(h) - f(2.0 * h)) / (12.0 * h * h)
}

/// Discrete residual at `z`; the stencil must stay away from the origin.
pub fn kernel_residual(z: [f64; 2], lambda: f64, delta: f64) -> Result<KernelResidual> {
    check_point(z, lambda)?;
    if z[0].hypot(z[1]) <= 2.0 * std::f64::consts::SQRT_2 * delta {
        return Err(Error::Range("difference stencil reaches the origin".into()));
    }
    let e = |dx: f64, dy: f64| -> [[f64; 2]; 2] {
        let v = oseen_values([z[0] + dx, z[1] + dy], lambda);
        [[v[0], v[1]], [v[1], v[2]]]
    };
    let pr = |dx: f64, dy: f64| -> [f64; 2] {
        let (x, y) = (z[0] + dx, z[1] + dy);
        let c = 1.0 / (2.0 * PI * (x * x + y * y));
        [x * c, y * c]
    };
    let mut momentum = 0.0f64;
    let mut divergence = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let lap = d2_4(|s| e(s, 0.0)[i][j], delta) + d2_4(|s| e(0.0, s)[i][j], delta);
            let adv = lambda * d1_4(|s| e(s, 0.0)[i][j], delta);
            let grad_p = if i == 0 { d1_4(|s| pr(s, 0.0)[j], delta) } else { d1_4(|s| pr(0.0, s)[j], delta) };
            momentum = momentum.max((-lap + adv + grad_p).abs());
            scale = scale.max(lap.abs()).max(adv.abs()).max(grad_p.abs());
        }
    }
    for j in 0..2 {
        let div = d1_4(|s| e(s, 0.0)[0][j], delta) + d1_4(|s| e(0.0, s)[1][j], delta);
        divergence = divergence.max(div.abs());
    }
    Ok(KernelResidual { momentum, divergence, scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_symmetry() {
        // y -> -y flips the sign of E_12 and keeps E_11, E_22
        for &(x, y) in &[(0.3, 0.7), (-2.0, 1.5), (5.0, 0.4)] {
            let a = oseen_tensor([x, y], 1.0).unwrap().tensor;
            let b = oseen_tensor([x, -y], 1.0).unwrap().tensor;
            assert!((a[0][0] - b[0][0]).abs() < 1e-15 * a[0][0].abs().max(1.0));
            assert!((a[1][1] - b[1][1]).abs() < 1e-15 * a[1][1].abs().max(1.0));
            assert!((a[0][1] + b[0][1]).abs() < 1e-15 * a[0][1].abs().max(1.0));
        }
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let z = [0.7, -0.4];
        let s = oseen_tensor(z, 1.3).unwrap();
        let h = 1e-5;
        for l in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[l] += h;
            zm[l] -= h;
            let (a, b) = (oseen_tensor(zp, 1.3).unwrap().tensor, oseen_tensor(zm, 1.3).unwrap().tensor);
            for i in 0..2 {
                for j in 0..2 {
                    let fd = (a[i][j] - b[i][j]) / (2.0 * h);
                    assert!((fd - s.gradient[l][i][j]).abs() < 1e-8, "d_{l} E_{i}{j}");
                }
            }
        }
    }

    #[test]
    fn satisfies_the_oseen_system_away_from_the_origin() {
        for &(x, y) in &[(0.5, 0.5), (-1.0, 0.2), (3.0, 0.1), (0.0, -4.0), (8.0, 2.0)] {
            let res = kernel_residual([x, y], 1.0, 1e-3).unwrap();
            assert!(res.momentum < 1e-6 * res.scale.max(1e-3), "{x},{y}: {res:?}");
            assert!(res.divergence < 1e-6 * res.scale.max(1e-3), "{x},{y}: {res:?}");
        }
    }

    #[test]
    fn near_field_is_stokes_like() {
        // for |z| << 1/lambda, E_11 - E_22 is governed by -ln r / 2 pi up to bounded terms
        let a = oseen_tensor([1e-4, 0.0], 1.0).unwrap().tensor;
        let b = oseen_tensor([1e-5, 0.0], 1.0).unwrap().tensor;
        let slope = (a[0][0] - b[0][0]) / 10f64.ln();
        assert!((slope + 1.0 / (4.0 * PI)).abs() < 1e-3, "{slope}");
    }

    #[test]
    fn singular_point_and_zero_speed_are_rejected() {
        assert!(matches!(oseen_tensor([0.0, 0.0], 1.0), Err(Error::Singularity(_))));
        assert!(matches!(oseen_tensor([1.0, 0.0], 0.0), Err(Error::Config(_))));
    }
}
