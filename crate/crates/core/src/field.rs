//! Grid-sampled scalar, vector and tensor fields plus the radial quadrature
//! and interpolation used by every diagnostic.
//!
//! Radial interpolation is cubic Lagrange on the four nearest nodes. Near the
//! pole the stencil continues through the origin: the value at `(-r, theta)` is
//! the value at `(r, theta + pi)`, times `-1` for polar vector components.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PolarGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Arc<PolarGrid>,
    pub values: Vec<f64>,
}

/// Storage convention of a [`VectorField`]; only polar storage is produced by
/// this crate but the flag is kept so dumps are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Components {
    Polar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Arc<PolarGrid>,
    pub u_r: Vec<f64>,
    pub u_theta: Vec<f64>,
    pub components: Components,
}

/// Row-major 2x2 tensor of scalar fields, `t[i][j]`, in Cartesian components.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: Arc<PolarGrid>,
    pub t: [[Vec<f64>; 2]; 2],
}

/// Circle average of a velocity field together with its polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleMean {
    pub w1: f64,
    pub w2: f64,
    pub modulus: f64,
    /// Argument in `[0, 2 pi)`; `None` when the modulus is below `1e-14`.
    pub angle: Option<f64>,
}

impl CircleMean {
    pub fn from_components(w1: f64, w2: f64) -> Self {
        let modulus = w1.hypot(w2);
        let angle = if modulus < 1e-14 {
            None
        } else {
            let a = w2.atan2(w1);
            Some(if a < 0.0 { a + 2.0 * PI } else { a })
        };
        Self { w1, w2, modulus, angle }
    }
}

fn lagrange4(xs: &[f64; 4], ys: &[f64; 4], x: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..4 {
        let mut l = 1.0;
        for m in 0..4 {
            if m != k {
                l *= (x - xs[m]) / (xs[k] - xs[m]);
            }
        }
        acc += l * ys[k];
    }
    acc
}

/// Position of extended node `k` (`k = -1, -2` are mirror images of nodes 0, 1).
fn ext_pos(grid: &PolarGrid, k: isize) -> f64 {
    if k >= 0 {
        grid.radii[k as usize]
    } else {
        -grid.radii[(-k - 1) as usize]
    }
}

/// Extended-node indices and cubic Lagrange weights for radius `r`.
pub(crate) fn radial_stencil(grid: &PolarGrid, r: f64) -> ([isize; 4], [f64; 4]) {
    let n = grid.n_r as isize;
    // interval [x_k, x_{k+1}] over the extended node list
    let k: isize = if r < grid.radii[0] { -1 } else { grid.interval(r) as isize };
    let start = (k - 1).clamp(-2, n - 4);
    let idx = [start, start + 1, start + 2, start + 3];
    let xs = idx.map(|m| ext_pos(grid, m));
    let mut w = [0.0; 4];
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (r - xs[b]) / (xs[a] - xs[b]);
            }
        }
        w[a] = l;
    }
    (idx, w)
}

/// Cubic interpolation of ring data `g` (one value per radial node) where the
/// mirror nodes carry `parity * g[0]`, `parity * g[1]`.
pub(crate) fn interp_rings(grid: &PolarGrid, g: &[f64], parity: f64, r: f64) -> f64 {
    let (idx, w) = radial_stencil(grid, r);
    let mut acc = 0.0;
    for a in 0..4 {
        let v = if idx[a] >= 0 { g[idx[a] as usize] } else { parity * g[(-idx[a] - 1) as usize] };
        acc += w[a] * v;
    }
    acc
}

fn check_radius(grid: &PolarGrid, r: f64) -> Result<()> {
    let tol = 1e-12 * grid.r_out;
    if !(r >= grid.radii[0] - tol && r <= grid.r_out + tol) {
        return Err(Error::Range(format!(
            "radius {r} outside [{}, {}]",
            grid.radii[0], grid.r_out
        )));
    }
    Ok(())
}

/// Ring means of a node array.
pub fn ring_means(grid: &PolarGrid, values: &[f64]) -> Vec<f64> {
    let nt = grid.n_theta;
    values.chunks(nt).map(|row| row.iter().sum::<f64>() / nt as f64).collect()
}

/// Integral over `r1 <= |z| <= r2` of a field given through its ring means.
///
/// The radial integrand `r * mean(r)` is replaced by the piecewise cubic that
/// interpolates it on the four nearest nodes, and each piece is integrated
/// exactly. The construction is additive over adjacent annuli.
pub fn annulus_integral_of_means(grid: &PolarGrid, means: &[f64], r1: f64, r2: f64) -> Result<f64> {
    let tol = 1e-12 * grid.r_out;
    if !(r1 < r2) {
        return Err(Error::Range(format!("annulus bounds reversed or empty: ({r1}, {r2})")));
    }
    if r1 < -tol || r2 > grid.r_out + tol {
        return Err(Error::Range(format!("annulus ({r1}, {r2}) outside [0, {}]", grid.r_out)));
    }
    let r1 = r1.max(0.0);
    let r2 = r2.min(grid.r_out);
    let g: Vec<f64> = means.iter().zip(&grid.radii).map(|(m, r)| m * r).collect();
    // Gauss-Legendre, 3 points: exact for the cubic pieces
    let gl_x = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
    let gl_w = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let k_lo: isize = if r1 < grid.radii[0] { -1 } else { grid.interval(r1) as isize };
    let k_hi: isize = if r2 < grid.radii[0] { -1 } else { grid.interval(r2) as isize };
    let n = grid.n_r as isize;
    let mut total = 0.0;
    for k in k_lo..=k_hi {
        let a = ext_pos(grid, k).max(r1);
        let b = ext_pos(grid, (k + 1).min(n - 1)).min(r2);
        if b <= a {
            continue;
        }
        let start = (k - 1).clamp(-2, n - 4);
        let idx = [start, start + 1, start + 2, start + 3];
        let xs = idx.map(|m| ext_pos(grid, m));
        let ys = idx.map(|m| if m >= 0 { g[m as usize] } else { -g[(-m - 1) as usize] });
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut piece = 0.0;
        for q in 0..3 {
            piece += gl_w[q] * lagrange4(&xs, &ys, mid + half * gl_x[q]);
        }
        total += piece * half;
    }
    Ok(2.0 * PI * total)
}

/// `2 pi r * mean(r)` from the same piecewise cubic as [`annulus_integral_of_means`].
pub fn line_integral_of_means(grid: &PolarGrid, means: &[f64], r: f64) -> Result<f64> {
    check_radius(grid, r)?;
    let g: Vec<f64> = means.iter().zip(&grid.radii).map(|(m, r)| m * r).collect();
    Ok(2.0 * PI * interp_rings(grid, &g, -1.0, r.clamp(0.0, grid.r_out)))
}

/// Exact extrema of the piecewise cubic `r * mean(r)` on `[a, b]` (times `2 pi`).
/// Returns `(argmin, min)`.
pub(crate) fn line_integral_min(grid: &PolarGrid, means: &[f64], a: f64, b: f64) -> (f64, f64) {
    let g: Vec<f64> = means.iter().zip(&grid.radii).map(|(m, r)| m * r).collect();
    let n = grid.n_r as isize;
    let k_lo: isize = if a < grid.radii[0] { -1 } else { grid.interval(a) as isize };
    let k_hi: isize = if b < grid.radii[0] { -1 } else { grid.interval(b) as isize };
    let mut best = (a, f64::INFINITY);
    for k in k_lo..=k_hi {
        let lo = ext_pos(grid, k).max(a);
        let hi = ext_pos(grid, (k + 1).min(n - 1)).min(b);
        if hi < lo {
            continue;
        }
        let start = (k - 1).clamp(-2, n - 4);
        let idx = [start, start + 1, start + 2, start + 3];
        let xs = idx.map(|m| ext_pos(grid, m));
        let ys = idx.map(|m| if m >= 0 { g[m as usize] } else { -g[(-m - 1) as usize] });
        let mut cands = vec![lo, hi];
        // stationary points of the cubic from its monomial coefficients
        let c = cubic_coefficients(&xs, &ys, lo);
        let (qa, qb, qc) = (3.0 * c[3], 2.0 * c[2], c[1]);
        if qa.abs() > 0.0 {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s = disc.sqrt();
                cands.push(lo + (-qb + s) / (2.0 * qa));
                cands.push(lo + (-qb - s) / (2.0 * qa));
            }
        } else if qb.abs() > 0.0 {
            cands.push(lo - qc / qb);
        }
        for x in cands {
            if x >= lo && x <= hi {
                let v = lagrange4(&xs, &ys, x);
                if v < best.1 {
                    best = (x, v);
                }
            }
        }
    }
    (best.0, 2.0 * PI * best.1)
}

/// Coefficients `c0..c3` of the interpolating cubic in powers of `(x - x0)`.
fn cubic_coefficients(xs: &[f64; 4], ys: &[f64; 4], x0: f64) -> [f64; 4] {
    // Newton divided differences, then expand about x0
    let mut d = *ys;
    for lvl in 1..4 {
        for k in (lvl..4).rev() {
            d[k] = (d[k] - d[k - 1]) / (xs[k] - xs[k - lvl]);
        }
    }
    // p(x) = d0 + d1 (x-a0) + d2 (x-a0)(x-a1) + d3 (x-a0)(x-a1)(x-a2), a_k = xs[k] - x0
    let a: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    let mut c = [0.0; 4];
    // Horner-like expansion of nested form
    c[0] = d[3];
    let mut deg = 0;
    for k in (0..3).rev() {
        // c <- c * (t - a[k]) + d[k]
        let mut next = [0.0; 4];
        for p in 0..=deg {
            next[p + 1] += c[p];
            next[p] -= a[k] * c[p];
        }
        next[0] += d[k];
        c = next;
        deg += 1;
    }
    c
}

impl ScalarField {
    pub fn zeros(grid: Arc<PolarGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: Arc<PolarGrid>, c: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![c; n] }
    }

    pub fn from_values(grid: Arc<PolarGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(r, theta)` at every node.
    pub fn from_polar_fn(grid: Arc<PolarGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                values.push(f(grid.radii[i], grid.theta(j)));
            }
        }
        Self { grid, values }
    }

    /// Sample `f(x, y)` at every node.
    pub fn from_fn(grid: Arc<PolarGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_polar_fn(grid, |r, t| f(r * t.cos(), r * t.sin()))
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_theta + j]
    }

    pub fn ring(&self, i: usize) -> &[f64] {
        let nt = self.grid.n_theta;
        &self.values[i * nt..(i + 1) * nt]
    }

    pub fn ring_means(&self) -> Vec<f64> {
        ring_means(&self.grid, &self.values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Mean over the circle of radius `r`.
    pub fn circle_average(&self, r: f64) -> Result<f64> {
        check_radius(&self.grid, r)?;
        let m = self.ring_means();
        Ok(interp_rings(&self.grid, &m, 1.0, r.clamp(0.0, self.grid.r_out)))
    }

    /// Integral of the field over `r1 <= |z| <= r2`.
    pub fn annulus_integral(&self, r1: f64, r2: f64) -> Result<f64> {
        annulus_integral_of_means(&self.grid, &self.ring_means(), r1, r2)
    }

    /// Integral over the whole disk.
    pub fn disk_integral(&self) -> f64 {
        annulus_integral_of_means(&self.grid, &self.ring_means(), 0.0, self.grid.r_out)
            .expect("full disk is a valid annulus")
    }

    /// Line integral over the circle of radius `r`.
    pub fn line_integral(&self, r: f64) -> Result<f64> {
        line_integral_of_means(&self.grid, &self.ring_means(), r)
    }

    /// Values on the circle of radius `r` at the grid angles.
    pub fn circle_values(&self, r: f64) -> Result<Vec<f64>> {
        check_radius(&self.grid, r)?;
        Ok(interp_circle(&self.grid, &self.values, 1.0, r))
    }

    /// Value at an arbitrary point `(r, theta)`, cubic in `r` and
    /// trigonometric in `theta`.
    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        let ring = interp_circle(&self.grid, &self.values, 1.0, r.min(self.grid.r_out));
        crate::fourier::trig_interpolate(&ring, theta)
    }
}

/// Radially interpolated values at the grid angles for a node array with the
/// given mirror parity.
pub(crate) fn interp_circle(grid: &PolarGrid, values: &[f64], parity: f64, r: f64) -> Vec<f64> {
    let nt = grid.n_theta;
    let half = nt / 2;
    let (idx, w) = radial_stencil(grid, r.clamp(0.0, grid.r_out));
    let mut out = vec![0.0; nt];
    for a in 0..4 {
        let (node, shift, sign) = if idx[a] >= 0 {
            (idx[a] as usize, 0, 1.0)
        } else {
            ((-idx[a] - 1) as usize, half, parity)
        };
        let row = &values[node * nt..(node + 1) * nt];
        for j in 0..nt {
            out[j] += w[a] * sign * row[(j + shift) % nt];
        }
    }
    out
}

impl VectorField {
    pub fn zeros(grid: Arc<PolarGrid>) -> Self {
        let n = grid.len();
        Self { grid, u_r: vec![0.0; n], u_theta: vec![0.0; n], components: Components::Polar }
    }

    pub fn from_polar(grid: Arc<PolarGrid>, u_r: Vec<f64>, u_theta: Vec<f64>) -> Self {
        Self { grid, u_r, u_theta, components: Components::Polar }
    }

    /// Build from Cartesian node arrays.
    pub fn from_cartesian(grid: Arc<PolarGrid>, ux: &[f64], uy: &[f64]) -> Self {
        let nt = grid.n_theta;
        let n = grid.len();
        let mut u_r = vec![0.0; n];
        let mut u_t = vec![0.0; n];
        for j in 0..nt {
            let (s, c) = grid.theta(j).sin_cos();
            for i in 0..grid.n_r {
                let k = i * nt + j;
                u_r[k] = c * ux[k] + s * uy[k];
                u_t[k] = -s * ux[k] + c * uy[k];
            }
        }
        Self::from_polar(grid, u_r, u_t)
    }

    /// Sample a Cartesian vector function `f(x, y) -> (fx, fy)`.
    pub fn from_fn(grid: Arc<PolarGrid>, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let n = grid.len();
        let mut ux = Vec::with_capacity(n);
        let mut uy = Vec::with_capacity(n);
        for i in 0..grid.n_r {
            for j in 0..grid.n_theta {
                let (s, c) = grid.theta(j).sin_cos();
                let r = grid.radii[i];
                let (a, b) = f(r * c, r * s);
                ux.push(a);
                uy.push(b);
            }
        }
        Self::from_cartesian(grid, &ux, &uy)
    }

    /// Cartesian node arrays `(u_x, u_y)`.
    pub fn to_cartesian(&self) -> (Vec<f64>, Vec<f64>) {
        let grid = &self.grid;
        let nt = grid.n_theta;
        let n = grid.len();
        let mut ux = vec![0.0; n];
        let mut uy = vec![0.0; n];
        for j in 0..nt {
            let (s, c) = grid.theta(j).sin_cos();
            for i in 0..grid.n_r {
                let k = i * nt + j;
                ux[k] = c * self.u_r[k] - s * self.u_theta[k];
                uy[k] = s * self.u_r[k] + c * self.u_theta[k];
            }
        }
        (ux, uy)
    }

    pub fn cartesian_fields(&self) -> (ScalarField, ScalarField) {
        let (ux, uy) = self.to_cartesian();
        (
            ScalarField { grid: self.grid.clone(), values: ux },
            ScalarField { grid: self.grid.clone(), values: uy },
        )
    }

    pub fn is_finite(&self) -> bool {
        self.u_r.iter().chain(&self.u_theta).all(|v| v.is_finite())
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.u_r.iter().zip(&self.u_theta).map(|(a, b)| a.hypot(*b)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.u_r.iter().zip(&self.u_theta).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        Self::from_polar(
            self.grid.clone(),
            self.u_r.iter().zip(&other.u_r).map(|(a, b)| a + alpha * b).collect(),
            self.u_theta.iter().zip(&other.u_theta).map(|(a, b)| a + alpha * b).collect(),
        )
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_polar(
            self.grid.clone(),
            self.u_r.iter().map(|a| alpha * a).collect(),
            self.u_theta.iter().map(|a| alpha * a).collect(),
        )
    }

    /// Subtract a constant Cartesian vector.
    pub fn minus_constant(&self, c: (f64, f64)) -> Self {
        let (mut ux, mut uy) = self.to_cartesian();
        ux.iter_mut().for_each(|v| *v -= c.0);
        uy.iter_mut().for_each(|v| *v -= c.1);
        Self::from_cartesian(self.grid.clone(), &ux, &uy)
    }

    /// Circle average of the Cartesian components at radius `r`.
    pub fn circle_average(&self, r: f64) -> Result<CircleMean> {
        check_radius(&self.grid, r)?;
        let (ux, uy) = self.to_cartesian();
        let mx = ring_means(&self.grid, &ux);
        let my = ring_means(&self.grid, &uy);
        let rr = r.clamp(0.0, self.grid.r_out);
        Ok(CircleMean::from_components(
            interp_rings(&self.grid, &mx, 1.0, rr),
            interp_rings(&self.grid, &my, 1.0, rr),
        ))
    }

    /// Circle averages at many radii (one Cartesian conversion).
    pub fn circle_averages(&self, radii: &[f64]) -> Result<Vec<CircleMean>> {
        let (ux, uy) = self.to_cartesian();
        let mx = ring_means(&self.grid, &ux);
        let my = ring_means(&self.grid, &uy);
        radii
            .iter()
            .map(|&r| {
                check_radius(&self.grid, r)?;
                let rr = r.clamp(0.0, self.grid.r_out);
                Ok(CircleMean::from_components(
                    interp_rings(&self.grid, &mx, 1.0, rr),
                    interp_rings(&self.grid, &my, 1.0, rr),
                ))
            })
            .collect()
    }

    /// Cartesian value at an arbitrary point.
    pub fn eval_cartesian(&self, r: f64, theta: f64) -> (f64, f64) {
        let (ux, uy) = self.cartesian_fields();
        (ux.eval(r, theta), uy.eval(r, theta))
    }
}

impl TensorField {
    pub fn zeros(grid: Arc<PolarGrid>) -> Self {
        let n = grid.len();
        Self { grid, t: [[vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]]] }
    }

    /// L2 norm over the grid disk (Frobenius norm pointwise).
    pub fn l2_norm(&self) -> f64 {
        let n = self.grid.len();
        let sq: Vec<f64> = (0..n)
            .map(|k| {
                self.t[0][0][k].powi(2)
                    + self.t[0][1][k].powi(2)
                    + self.t[1][0][k].powi(2)
                    + self.t[1][1][k].powi(2)
            })
            .collect();
        ScalarField { grid: self.grid.clone(), values: sq }.disk_integral().max(0.0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n_r: usize, nt: usize, r: f64, s: f64) -> Arc<PolarGrid> {
        Arc::new(PolarGrid::new(n_r, nt, r, s).unwrap())
    }

    #[test]
    fn circle_average_examples() {
        let g = grid(32, 16, 2.0, 1.02);
        let c = ScalarField::constant(g.clone(), 3.0);
        assert!((c.circle_average(1.3).unwrap() - 3.0).abs() < 1e-14);
        let x2 = ScalarField::from_fn(g.clone(), |x, _| x * x);
        for r in [0.2, 0.77, 1.5, 2.0] {
            assert!((x2.circle_average(r).unwrap() - r * r / 2.0).abs() < 1e-12, "r = {r}");
        }
        let x = ScalarField::from_fn(g.clone(), |x, _| x);
        assert!(x.circle_average(0.9).unwrap().abs() < 1e-15);
        assert!(x2.circle_average(2.5).is_err());
    }

    #[test]
    fn velocity_average_examples() {
        let g = grid(24, 16, 1.0, 1.0);
        let w = VectorField::from_fn(g.clone(), |_, _| (2.0, 0.0));
        let m = w.circle_average(0.5).unwrap();
        assert!((m.w1 - 2.0).abs() < 1e-14 && m.w2.abs() < 1e-14);
        assert_eq!(m.angle, Some(0.0));
        let rot = VectorField::from_fn(g, |x, y| (-y, x));
        let m = rot.circle_average(0.7).unwrap();
        assert!(m.modulus < 1e-14);
        assert!(m.angle.is_none());
    }

    #[test]
    fn annulus_integral_examples() {
        let g = grid(200, 16, 3.0, 1.0);
        let one = ScalarField::constant(g.clone(), 1.0);
        assert!((one.annulus_integral(1.0, 2.0).unwrap() - 3.0 * PI).abs() < 1e-8);
        let inv = ScalarField::from_polar_fn(g.clone(), |r, _| 1.0 / (r * r));
        let v = inv.annulus_integral(1.0, std::f64::consts::E).unwrap();
        assert!((v - 2.0 * PI).abs() < 1e-6, "{v}");
        assert!(one.annulus_integral(2.0, 1.0).is_err());
        assert!((one.disk_integral() - 9.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn annulus_integral_is_additive() {
        let g = grid(40, 16, 5.0, 1.04);
        let f = ScalarField::from_fn(g, |x, y| (x * 0.3).sin() + y * y);
        let ac = f.annulus_integral(0.3, 4.1).unwrap();
        let ab = f.annulus_integral(0.3, 1.777).unwrap();
        let bc = f.annulus_integral(1.777, 4.1).unwrap();
        assert!((ac - ab - bc).abs() <= 1e-10 * ac.abs());
    }

    #[test]
    fn cartesian_round_trip() {
        let g = grid(10, 12, 1.0, 1.0);
        let w = VectorField::from_fn(g.clone(), |x, y| (x * y + 1.0, x - 2.0 * y));
        let (ux, uy) = w.to_cartesian();
        let back = VectorField::from_cartesian(g, &ux, &uy);
        for k in 0..w.u_r.len() {
            assert!((back.u_r[k] - w.u_r[k]).abs() < 1e-14);
            assert!((back.u_theta[k] - w.u_theta[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_coefficients_match_lagrange() {
        let xs = [-0.3, 0.1, 0.7, 1.2];
        let ys = [1.0, -2.0, 0.5, 3.0];
        let c = cubic_coefficients(&xs, &ys, 0.2);
        for x in [-0.1, 0.25, 0.9] {
            let t: f64 = x - 0.2;
            let p = c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t;
            assert!((p - lagrange4(&xs, &ys, x)).abs() < 1e-12);
        }
    }

    #[test]
    fn line_integral_min_finds_interior_minimum() {
        let g = grid(60, 8, 4.0, 1.0);
        // r * mean = (r - 2)^2 + 1  => mean = ((r-2)^2 + 1)/r
        let f = ScalarField::from_polar_fn(g.clone(), |r, _| ((r - 2.0).powi(2) + 1.0) / r);
        let (r, v) = line_integral_min(&g, &f.ring_means(), 1.0, 3.0);
        assert!((r - 2.0).abs() < 1e-3, "{r}");
        assert!((v - 2.0 * PI).abs() < 1e-4);
    }
}
