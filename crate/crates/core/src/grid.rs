//! Polar mesh with geometric radial stretching.
//!
//! Radial nodes sit at `r_0 = h_0/2` and `r_i = r_{i-1} + h_0 s^{i-1}`, so the
//! last node lies exactly on the outer circle. Every node owns the control
//! volume between the midpoints of its neighbours (the first one reaches down to
//! the pole, the last one stops at `r_out`), which gives an exact area
//! quadrature and the conservative Laplacian used by the elliptic solvers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_out: f64,
    pub stretch: f64,
    pub radii: Vec<f64>,
    /// Control-volume faces, `n_r + 1` entries: `faces[0] = 0`, `faces[n_r] = r_out`.
    pub faces: Vec<f64>,
    /// Radial control volumes `(f_{i+1}^2 - f_i^2) / 2` (area per radian).
    pub volumes: Vec<f64>,
    /// Radial quadrature weights for the integral of `f r dr dtheta`, one per ring.
    pub quad_weights: Vec<f64>,
}

/// Total length covered by `n` spacings of a geometric sequence with ratio `s`.
fn geometric_sum(s: f64, n: usize) -> f64 {
    if (s - 1.0).abs() < 1e-12 {
        n as f64
    } else {
        (s.powi(n as i32) - 1.0) / (s - 1.0)
    }
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize, r_out: f64, stretch: f64) -> Result<Self> {
        if n_r < 8 {
            return Err(Error::Config(format!("n_r = {n_r} must be at least 8")));
        }
        if n_theta < 8 || !n_theta.is_multiple_of(2) {
            return Err(Error::Config(format!("n_theta = {n_theta} must be even and at least 8")));
        }
        if !(r_out > 0.0 && r_out.is_finite()) {
            return Err(Error::Config(format!("r_out = {r_out} must be positive")));
        }
        if !(stretch >= 1.0 && stretch.is_finite()) {
            return Err(Error::Config(format!("stretch = {stretch} must be >= 1")));
        }
        let h0 = r_out / (0.5 + geometric_sum(stretch, n_r - 1));
        let mut radii = Vec::with_capacity(n_r);
        radii.push(0.5 * h0);
        let mut h = h0;
        for _ in 1..n_r {
            let next = radii.last().unwrap() + h;
            radii.push(next);
            h *= stretch;
        }
        radii[n_r - 1] = r_out;

        let mut faces = Vec::with_capacity(n_r + 1);
        faces.push(0.0);
        for i in 0..n_r - 1 {
            faces.push(0.5 * (radii[i] + radii[i + 1]));
        }
        faces.push(r_out);
        let volumes: Vec<f64> = (0..n_r)
            .map(|i| 0.5 * (faces[i + 1] * faces[i + 1] - faces[i] * faces[i]))
            .collect();
        let dtheta = 2.0 * PI / n_theta as f64;
        let quad_weights = volumes.iter().map(|v| v * dtheta).collect();
        Ok(Self { n_r, n_theta, r_out, stretch, radii, faces, volumes, quad_weights })
    }

    /// Uniform grid (stretch 1).
    pub fn uniform(n_r: usize, n_theta: usize, r_out: f64) -> Result<Self> {
        Self::new(n_r, n_theta, r_out, 1.0)
    }

    /// Smallest grid whose first spacing is `h_inner` and whose stretch does not
    /// exceed `max_stretch`. Falls back to a uniform grid when that is cheaper.
    pub fn with_inner_spacing(r_out: f64, h_inner: f64, max_stretch: f64, n_theta: usize) -> Result<Self> {
        if !(h_inner > 0.0) || !(max_stretch >= 1.0) {
            return Err(Error::Config("inner spacing must be positive and stretch >= 1".into()));
        }
        let n_uniform = (r_out / h_inner + 0.5).ceil() as usize;
        if max_stretch == 1.0 || n_uniform <= 8 {
            return Self::uniform(n_uniform.max(8), n_theta, r_out);
        }
        // smallest n with required stretch <= max_stretch
        let mut n = 8usize;
        loop {
            let s = stretch_for(n, r_out, h_inner)?;
            if s <= max_stretch || n >= n_uniform {
                if n >= n_uniform {
                    return Self::uniform(n_uniform, n_theta, r_out);
                }
                return Self::new(n, n_theta, r_out, s);
            }
            n += 1;
        }
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of node `(i, j)`, radial index outer.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// Spacing between radial nodes `i` and `i + 1`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.radii[i + 1] - self.radii[i]
    }

    /// Mean face radius of control volume `i`, `(f_i + f_{i+1}) / 2`.
    pub fn mid_face(&self, i: usize) -> f64 {
        0.5 * (self.faces[i] + self.faces[i + 1])
    }

    /// Area of the disk as seen by the ring quadrature.
    pub fn disk_area(&self) -> f64 {
        self.quad_weights.iter().sum::<f64>() * self.n_theta as f64
    }

    /// The same node layout scaled by `factor` (used by scaling-equivariance checks).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.n_r, self.n_theta, self.r_out * factor, self.stretch)
    }

    /// Index `i` of the interval `[r_i, r_{i+1}]` containing `r` (clamped to the grid).
    pub fn interval(&self, r: f64) -> usize {
        let n = self.n_r;
        if r <= self.radii[0] {
            return 0;
        }
        match self.radii.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(k) => k.min(n - 2),
            Err(k) => (k - 1).min(n - 2),
        }
    }
}

/// Stretch ratio such that `n` nodes with first spacing `h0` end exactly at `r_out`.
pub fn stretch_for(n: usize, r_out: f64, h0: f64) -> Result<f64> {
    let target = r_out / h0 - 0.5;
    let m = n - 1;
    if target <= m as f64 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    while geometric_sum(hi, m) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Config("cannot reach r_out with the requested spacing".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if geometric_sum(mid, m) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
