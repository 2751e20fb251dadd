//! The discrete streamfunction–vorticity system on one disk.
//!
//! Unknowns are stored ring by ring; ring `i` holds `[psi_i(0..nt), omega_i(0..nt)]`,
//! so every operator couples only neighbouring rings and the Jacobian is block
//! tridiagonal with blocks of size `2 nt`.
//!
//! Rows, for interior rings `i < n - 1`:
//!
//! * `L psi - omega = 0` (conservative Laplacian),
//! * `-L omega + (d_theta psi / r) d_r omega - (d_r psi / r) d_theta omega = curl f`.
//!
//! On the outer ring, `psi = psi_b` and the boundary vorticity is the
//! half-cell Laplacian of `psi` with the prescribed flux `d_r psi = -w_theta`.
//! On a uniform grid this is Thom's formula
//! `omega_b = 2 (psi_{b-1} - psi_b + h g) / h^2 + ...`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::PolarGrid;
use crate::linalg::BlockTridiagonal;
use crate::operators::{d_r, d_r4, radial_weights, CompactCoefficients};

/// Outer-circle data: `psi` and its radial derivative `-w_theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub psi: Vec<f64>,
    pub dpsi_dr: Vec<f64>,
}

impl BoundaryTrace {
    /// Trace of the uniform stream `lambda e_1`: `psi = lambda r_out sin(theta)`.
    pub fn uniform_stream(grid: &PolarGrid, lambda: f64) -> Self {
        let r = grid.r_out;
        let psi = (0..grid.n_theta).map(|j| lambda * r * grid.theta(j).sin()).collect();
        let dpsi_dr = (0..grid.n_theta).map(|j| lambda * grid.theta(j).sin()).collect();
        Self { psi, dpsi_dr }
    }

    /// Trace of a Cartesian velocity on the outer circle. `psi` is the
    /// zero-mean angular antiderivative of `r_out * w_r`; the net outflux of
    /// `w` must vanish.
    pub fn from_velocity(grid: &PolarGrid, w: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        let r = grid.r_out;
        let nt = grid.n_theta;
        let mut flux = Vec::with_capacity(nt);
        let mut dpsi = Vec::with_capacity(nt);
        for j in 0..nt {
            let (s, c) = grid.theta(j).sin_cos();
            let (wx, wy) = w(r * c, r * s);
            flux.push(r * (c * wx + s * wy));
            dpsi.push(-(-s * wx + c * wy));
        }
        let net: f64 = flux.iter().sum::<f64>() / nt as f64;
        let scale = flux.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if net.abs() > 1e-9 * scale.max(1e-300) {
            return Err(Error::Precondition(format!("boundary velocity has net outflux {net:.3e}")));
        }
        Ok(Self { psi: fourier::integrate_theta(&flux, nt), dpsi_dr: dpsi })
    }
}

/// Discrete problem data and operators.
pub struct DiskSystem {
    pub grid: Arc<PolarGrid>,
    pub coeffs: CompactCoefficients,
    weights: Vec<[f64; 3]>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    /// `curl f` at the nodes.
    pub curl_f: Vec<f64>,
    pub trace: BoundaryTrace,
}

/// Split a state vector into `(psi, omega)` node arrays.
pub fn split(grid: &PolarGrid, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nt = grid.n_theta;
    let mut psi = Vec::with_capacity(grid.len());
    let mut om = Vec::with_capacity(grid.len());
    for block in x.chunks(2 * nt) {
        psi.extend_from_slice(&block[..nt]);
        om.extend_from_slice(&block[nt..]);
    }
    (psi, om)
}

/// Inverse of [`split`].
pub fn merge(grid: &PolarGrid, psi: &[f64], omega: &[f64]) -> Vec<f64> {
    let nt = grid.n_theta;
    let mut x = Vec::with_capacity(2 * grid.len());
    for i in 0..grid.n_r {
        x.extend_from_slice(&psi[i * nt..(i + 1) * nt]);
        x.extend_from_slice(&omega[i * nt..(i + 1) * nt]);
    }
    x
}

impl DiskSystem {
    pub fn new(grid: Arc<PolarGrid>, curl_f: Vec<f64>, trace: BoundaryTrace) -> Result<Self> {
        if grid.n_r < 4 {
            return Err(Error::Config("the disk solver needs at least 4 rings".into()));
        }
        if grid.n_theta < 4 || !grid.n_theta.is_multiple_of(2) {
            return Err(Error::Config("the disk solver needs an even n_theta >= 4".into()));
        }
        if curl_f.len() != grid.len() || trace.psi.len() != grid.n_theta || trace.dpsi_dr.len() != grid.n_theta {
            return Err(Error::Config("source or trace size does not match the grid".into()));
        }
        let nt = grid.n_theta;
        Ok(Self {
            coeffs: CompactCoefficients::new(&grid),
            weights: radial_weights(&grid),
            d1: fourier::d_theta_matrix(nt),
            d2: fourier::d_theta2_matrix(nt),
            curl_f,
            trace,
            grid,
        })
    }

    pub fn size(&self) -> usize {
        2 * self.grid.len()
    }

    /// Deterministic cold start: `psi` is the boundary data scaled by `r / r_out`, `omega = 0`.
    /// For the uniform stream this is the exact force-free solution.
    pub fn cold_state(&self) -> Vec<f64> {
        let g = &self.grid;
        let nt = g.n_theta;
        let mut psi = vec![0.0; g.len()];
        for i in 0..g.n_r {
            let s = g.radii[i] / g.r_out;
            for j in 0..nt {
                psi[i * nt + j] = s * self.trace.psi[j];
            }
        }
        merge(g, &psi, &vec![0.0; g.len()])
    }

    /// Interior conservative Laplacian (rows `i < n - 1`); boundary row left at zero.
    fn interior_laplacian(&self, v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (n, nt) = (g.n_r, g.n_theta);
        let c = &self.coeffs;
        let d2 = fourier::d_theta2(v, nt);
        let mut out = vec![0.0; n * nt];
        for i in 0..n - 1 {
            for j in 0..nt {
                let k = i * nt + j;
                let mut s = c.diag[i] * v[k] + c.upper[i] * v[k + nt] + c.ang[i] * d2[k];
                if i > 0 {
                    s += c.lower[i] * v[k - nt];
                }
                out[k] = s;
            }
        }
        out
    }

    /// Linear part of the residual (no constants).
    fn linear(&self, psi: &[f64], om: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let (n, nt) = (g.n_r, g.n_theta);
        let c = &self.coeffs;
        let mut rp = self.interior_laplacian(psi);
        let mut ro: Vec<f64> = self.interior_laplacian(om).iter().map(|v| -v).collect();
        for k in 0..(n - 1) * nt {
            rp[k] -= om[k];
        }
        let b = n - 1;
        let d2 = fourier::d_theta2(&psi[b * nt..], nt);
        for j in 0..nt {
            let k = b * nt + j;
            rp[k] = psi[k];
            ro[k] = om[k] + c.lower[b] * (psi[k] - psi[k - nt]) - c.ang[b] * d2[j];
        }
        (rp, ro)
    }

    /// Advection `(d_theta a / r) d_r b - (d_r a / r) d_theta b` on interior rows.
    fn bilinear(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (n, nt) = (g.n_r, g.n_theta);
        let ar = d_r(g, a, 1.0);
        let at = fourier::d_theta(a, nt);
        let br = d_r(g, b, 1.0);
        let bt = fourier::d_theta(b, nt);
        let mut out = vec![0.0; n * nt];
        for k in 0..(n - 1) * nt {
            let r = g.radii[k / nt];
            out[k] = (at[k] * br[k] - ar[k] * bt[k]) / r;
        }
        out
    }

    /// Nonlinear residual `F(x)`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (n, nt) = (g.n_r, g.n_theta);
        let (psi, om) = split(g, x);
        let (mut rp, mut ro) = self.linear(&psi, &om);
        let adv = self.bilinear(&psi, &om);
        for k in 0..(n - 1) * nt {
            ro[k] += adv[k] - self.curl_f[k];
        }
        let b = n - 1;
        for j in 0..nt {
            let k = b * nt + j;
            rp[k] -= self.trace.psi[j];
            ro[k] -= g.r_out * self.trace.dpsi_dr[j] / self.coeffs.bnd_volume;
        }
        merge(g, &rp, &ro)
    }

    /// Jacobian-vector product at `x`, matrix free.
    pub fn jacobian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (psi, om) = split(g, x);
        let (vp, vo) = split(g, v);
        let (rp, mut ro) = self.linear(&vp, &vo);
        let a1 = self.bilinear(&vp, &om);
        let a2 = self.bilinear(&psi, &vo);
        for k in 0..ro.len() {
            ro[k] += a1[k] + a2[k];
        }
        merge(g, &rp, &ro)
    }

    /// Assemble the frozen-advection (Picard) matrix, or with `newton` the
    /// full Jacobian, at state `x`.
    pub fn assemble(&self, x: &[f64], newton: bool) -> BlockTridiagonal {
        let g = &self.grid;
        let (n, nt) = (g.n_r, g.n_theta);
        let half = nt / 2;
        let c = &self.coeffs;
        let (psi, om) = split(g, x);
        let psi_r = d_r(g, &psi, 1.0);
        let psi_t = fourier::d_theta(&psi, nt);
        let (om_r, om_t) = if newton {
            (d_r(g, &om, 1.0), fourier::d_theta(&om, nt))
        } else {
            (Vec::new(), Vec::new())
        };
        let mut a = BlockTridiagonal::zeros(n, 2 * nt);
        for i in 0..n - 1 {
            let r = g.radii[i];
            let [wa, wb, wc] = self.weights[i];
            let mut lo = DMatrix::zeros(2 * nt, 2 * nt);
            let mut di = DMatrix::zeros(2 * nt, 2 * nt);
            let mut up = DMatrix::zeros(2 * nt, 2 * nt);
            for j in 0..nt {
                // streamfunction row
                di[(j, j)] += c.diag[i];
                for l in 0..nt {
                    di[(j, l)] += c.ang[i] * self.d2[j * nt + l];
                }
                di[(j, nt + j)] -= 1.0;
                if i > 0 {
                    lo[(j, j)] = c.lower[i];
                }
                up[(j, j)] = c.upper[i];

                // vorticity row
                let row = nt + j;
                let k = i * nt + j;
                let ur = psi_t[k] / r;
                let ut = -psi_r[k] / r;
                di[(row, nt + j)] += -c.diag[i] + ur * wb;
                for l in 0..nt {
                    di[(row, nt + l)] += -c.ang[i] * self.d2[j * nt + l] + ut * self.d1[j * nt + l];
                }
                if i == 0 {
                    di[(row, nt + (j + half) % nt)] += ur * wa;
                } else {
                    lo[(row, nt + j)] += -c.lower[i] + ur * wa;
                }
                up[(row, nt + j)] += -c.upper[i] + ur * wc;

                if newton {
                    let p = om_r[k] / r;
                    for l in 0..nt {
                        di[(row, l)] += p * self.d1[j * nt + l];
                    }
                    let q = -om_t[k] / r;
                    di[(row, j)] += q * wb;
                    up[(row, j)] += q * wc;
                    if i == 0 {
                        di[(row, (j + half) % nt)] += q * wa;
                    } else {
                        lo[(row, j)] += q * wa;
                    }
                }
            }
            a.lower[i] = lo;
            a.diag[i] = di;
            a.upper[i] = up;
        }
        let b = n - 1;
        let mut lo = DMatrix::zeros(2 * nt, 2 * nt);
        let mut di = DMatrix::zeros(2 * nt, 2 * nt);
        for j in 0..nt {
            di[(j, j)] = 1.0;
            let row = nt + j;
            di[(row, nt + j)] = 1.0;
            di[(row, j)] += c.lower[b];
            for l in 0..nt {
                di[(row, l)] -= c.ang[b] * self.d2[j * nt + l];
            }
            lo[(row, j)] -= c.lower[b];
        }
        a.lower[b] = lo;
        a.diag[b] = di;
        a
    }

    /// Velocity from the streamfunction: `w_r = d_theta psi / r`, `w_theta = -d_r psi`,
    /// with the prescribed tangential trace on the outer ring.
    pub fn velocity(&self, psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let (n, nt) = (g.n_r, g.n_theta);
        let psi_r = d_r4(g, psi, 1.0);
        let psi_t = fourier::d_theta(psi, nt);
        let mut ur = vec![0.0; n * nt];
        let mut ut = vec![0.0; n * nt];
        for k in 0..n * nt {
            ur[k] = psi_t[k] / g.radii[k / nt];
            ut[k] = -psi_r[k];
        }
        for j in 0..nt {
            ut[(n - 1) * nt + j] = -self.trace.dpsi_dr[j];
        }
        (ur, ut)
    }
}
