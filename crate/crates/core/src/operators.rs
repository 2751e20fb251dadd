//! Differential operators on the polar grid.
//!
//! Radial derivatives use three-point stencils on the nonuniform nodes (exact
//! for quadratics), reaching across the pole through the mirror node and
//! switching to a one-sided stencil on the outer circle. Angular derivatives are
//! Fourier multipliers.
//!
//! Two Laplacians are provided. [`laplacian`] is `divergence(gradient(f))`, so
//! `curl2d(perp_gradient(f)) == -laplacian(f)` holds to rounding.
//! [`compact_laplacian`] is the conservative three-point form that the elliptic
//! solvers invert exactly; both agree to second order.

use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::fourier;
use crate::grid::PolarGrid;

/// Three-point first-derivative weights at `x` for nodes `xs`.
pub(crate) fn d1_weights(xs: [f64; 3], x: f64) -> [f64; 3] {
    let [a, b, c] = xs;
    [
        (2.0 * x - b - c) / ((a - b) * (a - c)),
        (2.0 * x - a - c) / ((b - a) * (b - c)),
        (2.0 * x - a - b) / ((c - a) * (c - b)),
    ]
}

/// Radial first-derivative weights for every node: `(weights, node offsets)`.
/// Node 0 uses the mirror node `-r_0`; the last node is one-sided.
pub(crate) fn radial_weights(grid: &PolarGrid) -> Vec<[f64; 3]> {
    let n = grid.n_r;
    let r = &grid.radii;
    let mut out = Vec::with_capacity(n);
    out.push(d1_weights([-r[0], r[0], r[1]], r[0]));
    for i in 1..n - 1 {
        out.push(d1_weights([r[i - 1], r[i], r[i + 1]], r[i]));
    }
    out.push(d1_weights([r[n - 3], r[n - 2], r[n - 1]], r[n - 1]));
    out
}

/// `d/dr` of a node array. `parity` is the sign picked up by the value at the
/// mirror node `(-r_0, theta) = (r_0, theta + pi)`: `+1` for scalars and
/// Cartesian components, `-1` for polar vector components.
pub fn d_r(grid: &PolarGrid, values: &[f64], parity: f64) -> Vec<f64> {
    let n = grid.n_r;
    let nt = grid.n_theta;
    let half = nt / 2;
    let w = radial_weights(grid);
    let mut out = vec![0.0; n * nt];
    for j in 0..nt {
        let mirror = parity * values[(j + half) % nt];
        out[j] = w[0][0] * mirror + w[0][1] * values[j] + w[0][2] * values[nt + j];
    }
    for i in 1..n - 1 {
        let [a, b, c] = w[i];
        for j in 0..nt {
            out[i * nt + j] =
                a * values[(i - 1) * nt + j] + b * values[i * nt + j] + c * values[(i + 1) * nt + j];
        }
    }
    let [a, b, c] = w[n - 1];
    for j in 0..nt {
        out[(n - 1) * nt + j] =
            a * values[(n - 3) * nt + j] + b * values[(n - 2) * nt + j] + c * values[(n - 1) * nt + j];
    }
    out
}

/// Weights of the derivative at `x` of the Lagrange interpolant through `xs`.
fn lagrange_d1_weights<const N: usize>(xs: [f64; N], x: f64) -> [f64; N] {
    let mut w = [0.0; N];
    for a in 0..N {
        let mut acc = 0.0;
        for b in 0..N {
            if b == a {
                continue;
            }
            let mut prod = 1.0 / (xs[a] - xs[b]);
            for c in 0..N {
                if c != a && c != b {
                    prod *= (x - xs[c]) / (xs[a] - xs[c]);
                }
            }
            acc += prod;
        }
        w[a] = acc;
    }
    w
}

/// Fourth-order `d/dr`: five-point stencils, centred where possible, using
/// the mirror nodes across the pole and one-sided stencils at the outer circle.
/// Used where consistency between derived quantities matters more than
/// stencil width (velocity reconstruction, convection for the pressure).
pub fn d_r4(grid: &PolarGrid, values: &[f64], parity: f64) -> Vec<f64> {
    let n = grid.n_r as isize;
    let nt = grid.n_theta;
    let half = nt / 2;
    let pos = |k: isize| if k >= 0 { grid.radii[k as usize] } else { -grid.radii[(-k - 1) as usize] };
    let mut out = vec![0.0; grid.len()];
    for i in 0..n {
        let start = (i - 2).clamp(-2, n - 5);
        let idx = [start, start + 1, start + 2, start + 3, start + 4];
        let w = lagrange_d1_weights(idx.map(pos), grid.radii[i as usize]);
        for j in 0..nt {
            let mut acc = 0.0;
            for a in 0..5 {
                let k = idx[a];
                let v = if k >= 0 {
                    values[k as usize * nt + j]
                } else {
                    parity * values[(-k - 1) as usize * nt + (j + half) % nt]
                };
                acc += w[a] * v;
            }
            out[i as usize * nt + j] = acc;
        }
    }
    out
}

/// `w . grad f` with the fourth-order radial derivative.
pub fn advect4(w: &VectorField, f: &[f64]) -> Vec<f64> {
    let g = &w.grid;
    let dr = d_r4(g, f, 1.0);
    let mut dt = fourier::d_theta(f, g.n_theta);
    divide_by_r(g, &mut dt);
    (0..f.len()).map(|k| w.u_r[k] * dr[k] + w.u_theta[k] * dt[k]).collect()
}

fn divide_by_r(grid: &PolarGrid, values: &mut [f64]) {
    let nt = grid.n_theta;
    for (i, row) in values.chunks_mut(nt).enumerate() {
        let inv = 1.0 / grid.radii[i];
        row.iter_mut().for_each(|v| *v *= inv);
    }
}

fn times_r(grid: &PolarGrid, values: &[f64]) -> Vec<f64> {
    let nt = grid.n_theta;
    values.iter().enumerate().map(|(k, v)| v * grid.radii[k / nt]).collect()
}

/// Polar components `(df/dr, (1/r) df/dtheta)`.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = &f.grid;
    let gr = d_r(g, &f.values, 1.0);
    let mut gt = fourier::d_theta(&f.values, g.n_theta);
    divide_by_r(g, &mut gt);
    VectorField::from_polar(g.clone(), gr, gt)
}

/// Rotated gradient `(-d_2 f, d_1 f)` in polar components `(-(1/r) df/dtheta, df/dr)`.
pub fn perp_gradient(f: &ScalarField) -> VectorField {
    let grad = gradient(f);
    let u_r = grad.u_theta.iter().map(|v| -v).collect();
    VectorField::from_polar(f.grid.clone(), u_r, grad.u_r)
}

pub fn divergence(w: &VectorField) -> ScalarField {
    let g = &w.grid;
    let mut out = d_r(g, &times_r(g, &w.u_r), 1.0);
    let dt = fourier::d_theta(&w.u_theta, g.n_theta);
    out.iter_mut().zip(&dt).for_each(|(a, b)| *a += b);
    divide_by_r(g, &mut out);
    ScalarField { grid: g.clone(), values: out }
}

/// Divergence with the fourth-order radial stencil used for the velocity of
/// a stream function; vanishes to rounding on such velocities.
pub fn divergence4(w: &VectorField) -> ScalarField {
    let g = &w.grid;
    let mut out = d_r4(g, &times_r(g, &w.u_r), 1.0);
    let dt = fourier::d_theta(&w.u_theta, g.n_theta);
    out.iter_mut().zip(&dt).for_each(|(a, b)| *a += b);
    divide_by_r(g, &mut out);
    ScalarField { grid: g.clone(), values: out }
}

/// Vorticity `d_2 w_1 - d_1 w_2`.
pub fn curl2d(w: &VectorField) -> ScalarField {
    let g = &w.grid;
    let mut out = d_r(g, &times_r(g, &w.u_theta), 1.0);
    let dt = fourier::d_theta(&w.u_r, g.n_theta);
    out.iter_mut().zip(&dt).for_each(|(a, b)| *a = b - *a);
    divide_by_r(g, &mut out);
    ScalarField { grid: g.clone(), values: out }
}

/// `divergence(gradient(f))`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    divergence(&gradient(f))
}

/// Coefficients of the conservative Laplacian: for interior node `i`,
/// `L u_i = lower_i u_{i-1} + diag_i u_i + upper_i u_{i+1} + ang_i * d2u_i/dtheta2`.
#[derive(Debug, Clone)]
pub struct CompactCoefficients {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub ang: Vec<f64>,
    /// Boundary node, flux form: `L u_b = (r_out * flux - bnd_face * (u_b - u_{b-1})) / bnd_volume + ang_b * d2u_b`.
    pub bnd_face: f64,
    pub bnd_volume: f64,
}

impl CompactCoefficients {
    pub fn new(grid: &PolarGrid) -> Self {
        let n = grid.n_r;
        let (mut lower, mut diag, mut upper, mut ang) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n - 1 {
            let v = grid.volumes[i];
            let fp = grid.faces[i + 1] / grid.spacing(i);
            let fm = if i == 0 { 0.0 } else { grid.faces[i] / grid.spacing(i - 1) };
            lower[i] = fm / v;
            upper[i] = fp / v;
            diag[i] = -(fm + fp) / v;
            ang[i] = 1.0 / (grid.radii[i] * grid.mid_face(i));
        }
        let b = n - 1;
        ang[b] = 1.0 / (grid.radii[b] * grid.mid_face(b));
        let bnd_face = grid.faces[b] / grid.spacing(b - 1);
        lower[b] = bnd_face / grid.volumes[b];
        diag[b] = -lower[b];
        Self { lower, diag, upper, ang, bnd_face, bnd_volume: grid.volumes[b] }
    }
}

/// Conservative Laplacian. On the outer circle the missing flux is taken from
/// the one-sided radial derivative.
pub fn compact_laplacian(f: &ScalarField) -> ScalarField {
    let g = &f.grid;
    let flux: Vec<f64> = {
        let dr = d_r(g, &f.values, 1.0);
        dr[(g.n_r - 1) * g.n_theta..].to_vec()
    };
    compact_laplacian_with_flux(f, &flux)
}

/// Conservative Laplacian with a prescribed outward flux on the outer circle.
pub fn compact_laplacian_with_flux(f: &ScalarField, flux: &[f64]) -> ScalarField {
    let g = &f.grid;
    let c = CompactCoefficients::new(g);
    let (n, nt) = (g.n_r, g.n_theta);
    let d2 = fourier::d_theta2(&f.values, nt);
    let v = &f.values;
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
    let b = n - 1;
    for j in 0..nt {
        let k = b * nt + j;
        out[k] = (g.r_out * flux[j] - c.bnd_face * (v[k] - v[k - nt])) / c.bnd_volume + c.ang[b] * d2[k];
    }
    ScalarField { grid: g.clone(), values: out }
}

/// Advective derivative `w . grad f` of a scalar (or Cartesian component).
pub fn advect(w: &VectorField, f: &[f64]) -> Vec<f64> {
    let g = &w.grid;
    let dr = d_r(g, f, 1.0);
    let mut dt = fourier::d_theta(f, g.n_theta);
    divide_by_r(g, &mut dt);
    (0..f.len()).map(|k| w.u_r[k] * dr[k] + w.u_theta[k] * dt[k]).collect()
}

/// Pointwise squared Frobenius norm of the velocity gradient.
pub fn grad_norm_sq(w: &VectorField) -> ScalarField {
    let (ux, uy) = w.cartesian_fields();
    let gx = gradient(&ux);
    let gy = gradient(&uy);
    let values = (0..ux.values.len())
        .map(|k| gx.u_r[k].powi(2) + gx.u_theta[k].powi(2) + gy.u_r[k].powi(2) + gy.u_theta[k].powi(2))
        .collect();
    ScalarField { grid: w.grid.clone(), values }
}

/// Dirichlet integral `D(r1, r2)` of a velocity field.
pub fn dirichlet_integral(w: &VectorField, r1: f64, r2: f64) -> Result<f64> {
    grad_norm_sq(w).annulus_integral(r1, r2).map(|v| v.max(0.0))
}

/// Dirichlet integral of a scalar field.
pub fn scalar_dirichlet_integral(f: &ScalarField, r1: f64, r2: f64) -> Result<f64> {
    let g = gradient(f);
    let sq = ScalarField {
        grid: f.grid.clone(),
        values: g.u_r.iter().zip(&g.u_theta).map(|(a, b)| a * a + b * b).collect(),
    };
    sq.annulus_integral(r1, r2).map(|v| v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<PolarGrid> {
        Arc::new(PolarGrid::new(40, 16, 2.0, 1.03).unwrap())
    }

    #[test]
    fn constant_field_has_zero_derivatives() {
        let f = ScalarField::constant(grid(), 2.5);
        assert!(gradient(&f).max_abs() < 1e-12);
        assert!(laplacian(&f).max_abs() < 1e-12);
        assert!(compact_laplacian(&f).max_abs() < 1e-12);
    }

    #[test]
    fn r_squared() {
        let g = grid();
        let f = ScalarField::from_polar_fn(g.clone(), |r, _| r * r);
        let lap = laplacian(&f);
        let clap = compact_laplacian(&f);
        let grad = gradient(&f);
        for i in 0..g.n_r - 1 {
            for j in 0..g.n_theta {
                let k = g.idx(i, j);
                assert!((clap.values[k] - 4.0).abs() < 1e-10);
                assert!((grad.u_r[k] - 2.0 * g.radii[i]).abs() < 1e-10);
                assert!(grad.u_theta[k].abs() < 1e-10);
                if i < g.n_r - 2 {
                    assert!((lap.values[k] - 4.0).abs() < 1e-10, "{i} {}", lap.values[k]);
                }
            }
        }
    }

    #[test]
    fn rigid_rotation() {
        let g = grid();
        let w = VectorField::from_fn(g.clone(), |x, y| (-y, x));
        let c = curl2d(&w);
        let d = divergence(&w);
        for k in 0..g.len() {
            assert!((c.values[k] + 2.0).abs() < 1e-10, "{}", c.values[k]);
            assert!(d.values[k].abs() < 1e-10);
        }
    }

    #[test]
    fn curl_of_perp_gradient_is_minus_laplacian() {
        let g = grid();
        let f = ScalarField::from_fn(g.clone(), |x, y| (x * 1.3).sin() * (0.4 * y).cos() + x * y * y);
        let c = curl2d(&perp_gradient(&f));
        let l = laplacian(&f);
        let scale = l.max_abs();
        for k in 0..g.len() {
            assert!((c.values[k] + l.values[k]).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn compact_laplacian_exact_for_linear_harmonics() {
        let g = grid();
        let f = ScalarField::from_fn(g.clone(), |x, y| 3.0 * x - y);
        let l = compact_laplacian(&f);
        assert!(l.max_abs() < 1e-11);
    }

    #[test]
    fn dirichlet_integral_examples() {
        let g = Arc::new(PolarGrid::uniform(80, 16, 2.0).unwrap());
        let c = VectorField::from_fn(g.clone(), |_, _| (1.0, -2.0));
        assert!(dirichlet_integral(&c, 0.5, 1.5).unwrap() < 1e-20);
        let rot = VectorField::from_fn(g.clone(), |x, y| (-y, x));
        assert!((dirichlet_integral(&rot, 1.0, 2.0).unwrap() - 6.0 * PI).abs() < 1e-9);
        let strain = VectorField::from_fn(g, |x, y| (x, -y));
        assert!((dirichlet_integral(&strain, 1.0, 2.0).unwrap() - 6.0 * PI).abs() < 1e-9);
    }

    /// Near the pole the gradient converges at second order. The conservative
    /// Laplacian has the usual first-order local truncation error on the first
    /// few rings (terms `h^2/r^2` with `r ~ h`), while the solution of the
    /// Poisson problem stays second order there.
    #[test]
    fn pole_region_convergence() {
        let f_exact = |x: f64, y: f64| (2.0 * x + y).exp();
        let errs: Vec<[f64; 3]> = [32usize, 64, 128]
            .iter()
            .map(|&n| {
                let g = Arc::new(PolarGrid::uniform(n, 16, 1.0).unwrap());
                let f = ScalarField::from_fn(g.clone(), f_exact);
                let l = compact_laplacian(&f);
                let grad = gradient(&f);
                let rhs = ScalarField::from_fn(g.clone(), |x, y| 5.0 * f_exact(x, y));
                let bnd: Vec<f64> = (0..g.n_theta).map(|j| f.at(g.n_r - 1, j)).collect();
                let u = crate::poisson::solve_poisson_dirichlet(&rhs, &bnd).unwrap();
                let mut e = [0.0f64; 3];
                for i in 0..4 {
                    for j in 0..g.n_theta {
                        let (r, t) = (g.radii[i], g.theta(j));
                        let v = f_exact(r * t.cos(), r * t.sin());
                        let gr = (2.0 * t.cos() + t.sin()) * v;
                        e[0] = e[0].max((grad.u_r[g.idx(i, j)] - gr).abs());
                        e[1] = e[1].max((l.at(i, j) - 5.0 * v).abs());
                        e[2] = e[2].max((u.at(i, j) - v).abs());
                    }
                }
                e
            })
            .collect();
        let order = |k: usize| (errs[1][k] / errs[2][k]).log2();
        assert!(order(0) > 1.8, "gradient {errs:?}");
        assert!(order(1) > 0.9, "laplacian {errs:?}");
        assert!(order(2) > 1.8, "poisson solution {errs:?}");
    }
}
