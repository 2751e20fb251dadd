//! Uniform square lattice of cells and direct-sum convolutions with the
//! Oseen tensor and its gradient.
//!
//! A field is stored at cell centres. Convolutions are sums over source
//! cells with the kernel averaged over each source cell; because the lattice
//! is uniform the averages depend only on the index offset and are tabulated
//! once. Cell averages of the (integrable) singular kernels are computed by
//! a sub-cell midpoint rule whose resolution is raised near the origin and
//! checked against a doubled resolution.

use parallel::par_rows;
use serde::{Deserialize, Serialize};

use super::kernel::{oseen_gradient, oseen_values};
use crate::error::{Error, Result};

/// Square lattice `[-half_width, half_width]^2` of `n x n` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub n: usize,
    pub h: f64,
}

impl Lattice {
    pub fn new(half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0 && h <= half_width) {
            return Err(Error::Config(format!("lattice half width {half_width} and spacing {h} must be positive")));
        }
        let n = (2.0 * half_width / h).round() as usize;
        Ok(Self { n: n.max(2), h: 2.0 * half_width / n.max(2) as f64 })
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.n as f64 * self.h
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Centre of cell `(i, j)`; `i` indexes x.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        let l = self.half_width();
        [-l + (i as f64 + 0.5) * self.h, -l + (j as f64 + 0.5) * self.h]
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.n).flat_map(|i| (0..self.n).map(move |j| self.center(i, j))).collect()
    }

    /// The lattice with half the spacing over the same square.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n, h: 0.5 * self.h }
    }
}

/// Vector field at the cell centres of a lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    pub lattice: Lattice,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(lattice: Lattice) -> Self {
        Self { lattice, u1: vec![0.0; lattice.len()], u2: vec![0.0; lattice.len()] }
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut out = Self::zeros(lattice);
        for i in 0..lattice.n {
            for j in 0..lattice.n {
                let [x, y] = lattice.center(i, j);
                let (a, b) = f(x, y);
                let k = lattice.idx(i, j);
                out.u1[k] = a;
                out.u2[k] = b;
            }
        }
        out
    }

    pub fn axpy(&self, alpha: f64, other: &Self) -> Self {
        Self {
            lattice: self.lattice,
            u1: self.u1.iter().zip(&other.u1).map(|(a, b)| a + alpha * b).collect(),
            u2: self.u2.iter().zip(&other.u2).map(|(a, b)| a + alpha * b).collect(),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            lattice: self.lattice,
            u1: self.u1.iter().map(|a| alpha * a).collect(),
            u2: self.u2.iter().map(|a| alpha * a).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.u1.iter().chain(&self.u2).fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.u1.iter().chain(&self.u2).all(|v| v.is_finite())
    }

    /// Values at the centres of the coarse lattice with twice the spacing
    /// (average of the four children).
    pub fn coarsened(&self) -> Result<Self> {
        let l = self.lattice;
        if !l.n.is_multiple_of(2) {
            return Err(Error::Range("lattice with an odd cell count cannot be coarsened".into()));
        }
        let coarse = Lattice { n: l.n / 2, h: 2.0 * l.h };
        let mut out = Self::zeros(coarse);
        for i in 0..coarse.n {
            for j in 0..coarse.n {
                let k = coarse.idx(i, j);
                for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let f = l.idx(2 * i + a, 2 * j + b);
                    out.u1[k] += 0.25 * self.u1[f];
                    out.u2[k] += 0.25 * self.u2[f];
                }
            }
        }
        Ok(out)
    }
}

/// Sub-cells per side for the cell average at Chebyshev offset `m`.
fn subcells(m: usize) -> usize {
    match m {
        0 => 64,
        1 => 32,
        2..=3 => 16,
        4..=7 => 6,
        _ => 2,
    }
}

/// Midpoint-rule average over the cell centred at `c` with `s x s` sub-cells.
fn cell_average<const N: usize>(c: [f64; 2], h: f64, s: usize, f: &impl Fn([f64; 2]) -> [f64; N]) -> [f64; N] {
    let mut acc = [0.0; N];
    let step = h / s as f64;
    for a in 0..s {
        for b in 0..s {
            let z = [c[0] - 0.5 * h + (a as f64 + 0.5) * step, c[1] - 0.5 * h + (b as f64 + 0.5) * step];
            let v = f(z);
            for q in 0..N {
                acc[q] += v[q];
            }
        }
    }
    let w = 1.0 / (s * s) as f64;
    acc.map(|v| v * w)
}

/// Cell-averaged Oseen tensor and gradient over every index offset of a lattice.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub lattice: Lattice,
    pub lambda: f64,
    /// `(E_11, E_12, E_22)` per offset, row-major over `(di, dj)` in `[-(n-1), n-1]^2`.
    values: Vec<[f64; 3]>,
    /// `(d_1 E_11, d_2 E_11, d_1 E_12, d_2 E_12, d_1 E_22, d_2 E_22)` per offset.
    gradient: Vec<[f64; 6]>,
    /// Relative change of the origin-cell averages when the sub-cell count is doubled.
    pub refinement_change: f64,
}

/// Largest tolerated relative change of the singular cell averages under refinement.
pub const CELL_AVERAGE_TOLERANCE: f64 = 5e-2;

impl KernelTable {
    pub fn new(lattice: Lattice, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("the Oseen tensor needs lambda > 0, got {lambda}")));
        }
        let n = lattice.n as isize;
        let side = (2 * n - 1) as usize;
        let h = lattice.h;
        let vf = |z: [f64; 2]| oseen_values(z, lambda);
        let gf = |z: [f64; 2]| oseen_gradient(z, lambda);
        let rows = par_rows(side, |a| {
            let di = a as isize - (n - 1);
            (0..side)
                .map(|b| {
                    let dj = b as isize - (n - 1);
                    let c = [di as f64 * h, dj as f64 * h];
                    let s = subcells(di.unsigned_abs().max(dj.unsigned_abs()));
                    (cell_average(c, h, s, &vf), cell_average(c, h, s, &gf))
                })
                .collect::<Vec<_>>()
        });
        let mut values = Vec::with_capacity(side * side);
        let mut gradient = Vec::with_capacity(side * side);
        for row in rows {
            for (v, g) in row {
                values.push(v);
                gradient.push(g);
            }
        }
        // refinement check on the cells next to the singularity
        let mut refinement_change = 0.0f64;
        for (di, dj) in [(0isize, 0isize), (1, 0), (0, 1), (1, 1)] {
            let c = [di as f64 * h, dj as f64 * h];
            let s = subcells(di.unsigned_abs().max(dj.unsigned_abs()));
            let k = ((di + n - 1) as usize) * side + (dj + n - 1) as usize;
            let fine_v = cell_average(c, h, 2 * s, &vf);
            let fine_g = cell_average(c, h, 2 * s, &gf);
            let scale_v = fine_v.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let scale_g = fine_g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            for q in 0..3 {
                refinement_change = refinement_change.max((fine_v[q] - values[k][q]).abs() / scale_v);
            }
            for q in 0..6 {
                refinement_change = refinement_change.max((fine_g[q] - gradient[k][q]).abs() / scale_g);
            }
        }
        if !(refinement_change <= CELL_AVERAGE_TOLERANCE) {
            return Err(Error::Accuracy(format!(
                "singular cell averages change by {refinement_change:.2e} under sub-cell refinement"
            )));
        }
        Ok(Self { lattice, lambda, values, gradient, refinement_change })
    }

    fn offset(&self, di: isize, dj: isize) -> usize {
        let n = self.lattice.n as isize;
        ((di + n - 1) as usize) * (2 * self.lattice.n - 1) + (dj + n - 1) as usize
    }

    /// `E * g` at every cell centre (sources restricted to `mask` if given).
    pub fn convolve(&self, g: &LatticeField, mask: Option<&[bool]>) -> LatticeField {
        let l = self.lattice;
        let area = l.h * l.h;
        let sources = active_sources(g, mask);
        let rows = par_rows(l.n, |i| {
            let mut out = vec![[0.0; 2]; l.n];
            for (j, o) in out.iter_mut().enumerate() {
                let (mut a, mut b) = (0.0, 0.0);
                for &(si, sj, g1, g2) in &sources {
                    let e = self.values[self.offset(i as isize - si as isize, j as isize - sj as isize)];
                    a += e[0] * g1 + e[1] * g2;
                    b += e[1] * g1 + e[2] * g2;
                }
                *o = [a * area, b * area];
            }
            out
        });
        collect_rows(l, rows)
    }

    /// `I_i(u, v)(z) = sum_{j,l} (d_l E_ij) * (u_j v_l)` at every cell centre,
    /// with sources restricted to `mask` if given.
    pub fn bilinear(&self, u: &LatticeField, v: &LatticeField, mask: Option<&[bool]>) -> LatticeField {
        let l = self.lattice;
        let area = l.h * l.h;
        let n = l.n;
        // products q_jl = u_j v_l per source cell
        let q: Vec<[f64; 4]> = (0..l.len())
            .map(|k| {
                if mask.is_some_and(|m| !m[k]) {
                    [0.0; 4]
                } else {
                    [u.u1[k] * v.u1[k], u.u1[k] * v.u2[k], u.u2[k] * v.u1[k], u.u2[k] * v.u2[k]]
                }
            })
            .collect();
        let active: Vec<usize> = (0..n).filter(|&si| (0..n).any(|sj| q[l.idx(si, sj)] != [0.0; 4])).collect();
        let side = 2 * n - 1;
        let rows = par_rows(n, |i| {
            let mut out = vec![[0.0; 2]; n];
            for &si in &active {
                let row = (i + n - 1 - si) * side;
                let qrow = &q[si * n..(si + 1) * n];
                for (j, o) in out.iter_mut().enumerate() {
                    // offsets j - sj for sj = 0..n run over a contiguous slice, reversed
                    let kern = &self.gradient[row + j..row + j + n];
                    let (mut a, mut b) = (0.0, 0.0);
                    for (qq, g) in qrow.iter().zip(kern.iter().rev()) {
                        a += g[0] * qq[0] + g[1] * qq[1] + g[2] * qq[2] + g[3] * qq[3];
                        b += g[2] * qq[0] + g[3] * qq[1] + g[4] * qq[2] + g[5] * qq[3];
                    }
                    o[0] += a * area;
                    o[1] += b * area;
                }
            }
            out
        });
        collect_rows(l, rows)
    }
}

fn active_sources(g: &LatticeField, mask: Option<&[bool]>) -> Vec<(usize, usize, f64, f64)> {
    let l = g.lattice;
    let mut out = Vec::new();
    for i in 0..l.n {
        for j in 0..l.n {
            let k = l.idx(i, j);
            if mask.is_some_and(|m| !m[k]) || (g.u1[k] == 0.0 && g.u2[k] == 0.0) {
                continue;
            }
            out.push((i, j, g.u1[k], g.u2[k]));
        }
    }
    out
}

fn collect_rows(l: Lattice, rows: Vec<Vec<[f64; 2]>>) -> LatticeField {
    let mut out = LatticeField::zeros(l);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            let k = l.idx(i, j);
            out.u1[k] = v[0];
            out.u2[k] = v[1];
        }
    }
    out
}

/// Cells whose centre lies in the open disk of radius `r`.
pub fn disk_mask(l: &Lattice, r: f64) -> Vec<bool> {
    l.points().iter().map(|z| z[0].hypot(z[1]) < r).collect()
}

mod parallel {
    //! Row-parallel map over scoped threads.

    use std::thread;

    pub fn par_rows<T: Send>(rows: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
        let workers = thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(rows.max(1));
        if workers <= 1 {
            return (0..rows).map(&f).collect();
        }
        let f = &f;
        let mut chunks: Vec<Vec<(usize, T)>> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| s.spawn(move || (w..rows).step_by(workers).map(|i| (i, f(i))).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
        });
        let mut all: Vec<(usize, T)> = chunks.iter_mut().flat_map(std::mem::take).collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, t)| t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: f64, y: f64, c: [f64; 2], r: f64) -> f64 {
        let s2 = ((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (r * r);
        if s2 < 1.0 {
            (1.0 - s2).powi(4)
        } else {
            0.0
        }
    }

    #[test]
    fn lattice_geometry() {
        let l = Lattice::new(2.0, 0.5).unwrap();
        assert_eq!(l.n, 8);
        assert_eq!(l.center(0, 0), [-1.75, -1.75]);
        assert_eq!(l.center(7, 7), [1.75, 1.75]);
        assert!(Lattice::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn zero_field_gives_zero() {
        let l = Lattice::new(1.0, 0.25).unwrap();
        let t = KernelTable::new(l, 1.0).unwrap();
        let z = LatticeField::zeros(l);
        assert_eq!(t.bilinear(&z, &z, None).max_abs(), 0.0);
        assert_eq!(t.convolve(&z, None).max_abs(), 0.0);
    }

    #[test]
    fn bilinear_matches_a_fine_direct_quadrature() {
        // I(u, v) at a few targets against a 4x finer midpoint sum of the exact kernel
        let l = Lattice::new(2.0, 0.125).unwrap();
        let t = KernelTable::new(l, 1.0).unwrap();
        let uf = |x: f64, y: f64| (bump(x, y, [0.0, 0.0], 1.0), 0.5 * bump(x, y, [0.2, 0.1], 0.8));
        let vf = |x: f64, y: f64| (0.3 * bump(x, y, [-0.1, 0.0], 0.9), bump(x, y, [0.0, 0.2], 1.0));
        let u = LatticeField::from_fn(l, uf);
        let v = LatticeField::from_fn(l, vf);
        let i = t.bilinear(&u, &v, None);
        let fine = l.refined().refined();
        for &(ti, tj) in &[(24usize, 20usize), (5, 30), (31, 16)] {
            let z = l.center(ti, tj);
            let mut acc = [0.0, 0.0];
            for p in fine.points() {
                let d = [z[0] - p[0], z[1] - p[1]];
                if d[0].hypot(d[1]) < 1e-9 {
                    continue;
                }
                let g = oseen_gradient(d, 1.0);
                let (u1, u2) = uf(p[0], p[1]);
                let (v1, v2) = vf(p[0], p[1]);
                let q = [u1 * v1, u1 * v2, u2 * v1, u2 * v2];
                acc[0] += g[0] * q[0] + g[1] * q[1] + g[2] * q[2] + g[3] * q[3];
                acc[1] += g[2] * q[0] + g[3] * q[1] + g[4] * q[2] + g[5] * q[3];
            }
            let a = fine.h * fine.h;
            let k = l.idx(ti, tj);
            let scale = (acc[0] * a).abs().max((acc[1] * a).abs());
            assert!((i.u1[k] - acc[0] * a).abs() < 1e-2 * scale, "{:?} vs {:?}", (i.u1[k], i.u2[k]), acc);
            assert!((i.u2[k] - acc[1] * a).abs() < 1e-2 * scale, "{:?} vs {:?}", (i.u1[k], i.u2[k]), acc);
        }
    }

    #[test]
    fn bilinear_is_not_symmetric() {
        let l = Lattice::new(2.0, 0.25).unwrap();
        let t = KernelTable::new(l, 1.0).unwrap();
        let u = LatticeField::from_fn(l, |x, y| (bump(x, y, [0.0, 0.0], 1.0), 0.0));
        let v = LatticeField::from_fn(l, |x, y| (0.0, bump(x, y, [0.3, 0.0], 1.0)));
        let a = t.bilinear(&u, &v, None);
        let b = t.bilinear(&v, &u, None);
        assert!(a.axpy(-1.0, &b).max_abs() > 1e-3 * a.max_abs());
    }

    #[test]
    fn masked_pieces_add_up() {
        let l = Lattice::new(2.0, 0.25).unwrap();
        let t = KernelTable::new(l, 1.0).unwrap();
        let u = LatticeField::from_fn(l, |x, y| (bump(x, y, [0.0, 0.0], 1.8), bump(x, y, [0.4, 0.0], 1.5)));
        let inner = disk_mask(&l, 1.0);
        let outer: Vec<bool> = inner.iter().map(|b| !b).collect();
        let whole = t.bilinear(&u, &u, None);
        let sum = t.bilinear(&u, &u, Some(&inner)).axpy(1.0, &t.bilinear(&u, &u, Some(&outer)));
        assert!(whole.axpy(-1.0, &sum).max_abs() < 1e-13 * whole.max_abs());
    }

    fn shared_table() -> &'static KernelTable {
        static TABLE: std::sync::OnceLock<KernelTable> = std::sync::OnceLock::new();
        TABLE.get_or_init(|| KernelTable::new(Lattice::new(2.0, 0.25).unwrap(), 1.0).unwrap())
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn bilinear_is_linear_in_the_first_slot(
            alpha in -2.0f64..2.0,
            c in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let t = shared_table();
            let l = t.lattice;
            let u = LatticeField::from_fn(l, |x, y| (bump(x, y, [c[0], c[1]], 1.0), c[2] * bump(x, y, [0.0, 0.0], 0.8)));
            let u2 = LatticeField::from_fn(l, |x, y| (c[3] * bump(x, y, [0.3, -0.2], 0.7), bump(x, y, [c[4], c[5]], 0.9)));
            let v = LatticeField::from_fn(l, |x, y| (bump(x, y, [c[5], c[0]], 1.0), -bump(x, y, [c[1], c[3]], 0.6)));
            let mixed = u.scale(alpha).axpy(1.0, &u2);
            let lhs = t.bilinear(&mixed, &v, None);
            let rhs = t.bilinear(&u, &v, None).scale(alpha).axpy(1.0, &t.bilinear(&u2, &v, None));
            let d = lhs.axpy(-1.0, &rhs);
            proptest::prop_assert!(d.max_abs() <= 1e-12 * (1.0 + rhs.max_abs()));
        }
    }
}
