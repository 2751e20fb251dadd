//! Fourier-mode elliptic solvers for the conservative Laplacian on the disk,
//! and the H^-1 norm computed through Dirichlet Riesz representatives.
//!
//! Each angular mode gives a tridiagonal system in the radial index. The first
//! control volume touches the pole through a face of zero length, so no
//! coupling across the origin enters the mode systems.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{interp_circle, ScalarField, VectorField};
use crate::fourier;
use crate::grid::PolarGrid;
use crate::linalg::solve_tridiagonal;
use crate::operators::CompactCoefficients;

fn solve_mode(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [Complex64]) -> Result<()> {
    let mut re: Vec<f64> = rhs.iter().map(|c| c.re).collect();
    let mut im: Vec<f64> = rhs.iter().map(|c| c.im).collect();
    solve_tridiagonal(lower, diag, upper, &mut re)?;
    solve_tridiagonal(lower, diag, upper, &mut im)?;
    for (k, c) in rhs.iter_mut().enumerate() {
        *c = Complex64::new(re[k], im[k]);
    }
    Ok(())
}

/// Solve `L u = rhs` in the disk with `u = boundary` on the outer circle.
/// The value of `rhs` on the outer ring is ignored.
pub fn solve_poisson_dirichlet(rhs: &ScalarField, boundary: &[f64]) -> Result<ScalarField> {
    let g = &rhs.grid;
    let (n, nt) = (g.n_r, g.n_theta);
    if boundary.len() != nt {
        return Err(Error::Config(format!("boundary trace needs {nt} samples, got {}", boundary.len())));
    }
    let c = CompactCoefficients::new(g);
    let spec = fourier::forward_rings(&rhs.values, nt);
    let bspec = fourier::forward_rings(boundary, nt);
    let mut out = vec![Complex64::new(0.0, 0.0); n * nt];
    let m = n - 1;
    for k in 0..nt {
        let wn = fourier::wavenumber(k, nt);
        let diag: Vec<f64> = (0..m).map(|i| c.diag[i] - c.ang[i] * wn * wn).collect();
        let mut col: Vec<Complex64> = (0..m).map(|i| spec[i * nt + k]).collect();
        col[m - 1] -= bspec[k] * c.upper[m - 1];
        solve_mode(&c.lower[..m], &diag, &c.upper[..m], &mut col)?;
        for i in 0..m {
            out[i * nt + k] = col[i];
        }
        out[m * nt + k] = bspec[k];
    }
    let values = fourier::inverse_rings(out, nt);
    Ok(ScalarField { grid: g.clone(), values })
}

/// Result of a Neumann solve with the compatibility defect that was removed.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    pub field: ScalarField,
    /// `integral(rhs) - integral(flux)` before projection.
    pub defect: f64,
    /// Scale against which the defect is judged.
    pub scale: f64,
}

fn neumann_core(rhs: &ScalarField, flux: &[f64], project: bool) -> Result<NeumannSolution> {
    let g = &rhs.grid;
    let (n, nt) = (g.n_r, g.n_theta);
    if flux.len() != nt {
        return Err(Error::Config(format!("flux trace needs {nt} samples, got {}", flux.len())));
    }
    let c = CompactCoefficients::new(g);
    let means = rhs.ring_means();
    let flux_mean = flux.iter().sum::<f64>() / nt as f64;
    let vol_sum: f64 = g.volumes.iter().sum();
    let defect = 2.0 * PI * (g.volumes.iter().zip(&means).map(|(v, m)| v * m).sum::<f64>() - g.r_out * flux_mean);
    let scale = 2.0 * PI
        * (g.volumes.iter().enumerate().map(|(i, v)| v * rhs.ring(i).iter().fold(0.0f64, |a, b| a.max(b.abs()))).sum::<f64>()
            + g.r_out * flux.iter().fold(0.0f64, |a, b| a.max(b.abs())));
    let tolerance = 1e-8 * scale.max(1e-300);
    if !project && defect.abs() > tolerance {
        return Err(Error::Compatibility { defect, tolerance });
    }
    let shift = if project { defect / (2.0 * PI * vol_sum) } else { 0.0 };
    let mut spec = fourier::forward_rings(&rhs.values, nt);
    // remove the defect from the mean mode
    if shift != 0.0 {
        for i in 0..n {
            spec[i * nt] -= Complex64::new(shift * nt as f64, 0.0);
        }
    }
    let fspec = fourier::forward_rings(flux, nt);
    let b = n - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); n * nt];
    for k in 0..nt {
        let wn = fourier::wavenumber(k, nt);
        let mut lower = c.lower.clone();
        let mut diag: Vec<f64> = (0..n).map(|i| c.diag[i] - c.ang[i] * wn * wn).collect();
        let mut upper = c.upper.clone();
        let mut col: Vec<Complex64> = (0..n).map(|i| spec[i * nt + k]).collect();
        col[b] -= fspec[k] * (g.r_out / c.bnd_volume);
        if k == 0 {
            // constants are in the kernel: pin the first node, then fix the mean below
            diag[0] = 1.0;
            upper[0] = 0.0;
            col[0] = Complex64::new(0.0, 0.0);
        }
        lower[0] = 0.0;
        upper[b] = 0.0;
        solve_mode(&lower, &diag, &upper, &mut col)?;
        for i in 0..n {
            out[i * nt + k] = col[i];
        }
    }
    let mut values = fourier::inverse_rings(out, nt);
    let mean = g
        .volumes
        .iter()
        .enumerate()
        .map(|(i, v)| v * values[i * nt..(i + 1) * nt].iter().sum::<f64>() / nt as f64)
        .sum::<f64>()
        / vol_sum;
    values.iter_mut().for_each(|v| *v -= mean);
    Ok(NeumannSolution { field: ScalarField { grid: g.clone(), values }, defect, scale })
}

/// Solve `L u = rhs` with outward flux `du/dr = flux` on the outer circle.
/// The solution is normalized to zero mean.
pub fn solve_poisson_neumann(rhs: &ScalarField, flux: &[f64]) -> Result<ScalarField> {
    neumann_core(rhs, flux, false).map(|s| s.field)
}

/// Neumann solve that projects out (and reports) any compatibility defect.
pub fn solve_poisson_neumann_projected(rhs: &ScalarField, flux: &[f64]) -> Result<NeumannSolution> {
    neumann_core(rhs, flux, true)
}

/// H^-1 norm of each Cartesian component and their Euclidean combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HMinus1 {
    pub total: f64,
    pub components: [f64; 2],
}

/// Grid on a ball of radius `radius` with the same angular resolution and inner
/// spacing as `src` (returns `src` itself when the radii coincide).
pub fn ball_grid(src: &Arc<PolarGrid>, radius: f64) -> Result<Arc<PolarGrid>> {
    if (radius - src.r_out).abs() <= 1e-12 * src.r_out {
        return Ok(src.clone());
    }
    let h0 = src.spacing(0);
    let stretch = src.stretch.max(1.0);
    Ok(Arc::new(PolarGrid::with_inner_spacing(radius, h0, stretch, src.n_theta)?))
}

/// Resample a node array onto another grid with the same angles. Points beyond
/// the source disk get zero.
pub fn resample(values: &[f64], src: &PolarGrid, dst: &PolarGrid, parity: f64) -> Result<Vec<f64>> {
    if src.n_theta != dst.n_theta {
        return Err(Error::Config("resampling needs matching angular resolution".into()));
    }
    let nt = dst.n_theta;
    let mut out = vec![0.0; dst.len()];
    for i in 0..dst.n_r {
        let r = dst.radii[i];
        if r > src.r_out * (1.0 + 1e-12) {
            continue;
        }
        let ring = interp_circle(src, values, parity, r);
        out[i * nt..(i + 1) * nt].copy_from_slice(&ring);
    }
    Ok(out)
}

/// Dirichlet energy of the Riesz representative of a scalar source on the grid disk.
fn scalar_hminus1_sq(f: &ScalarField) -> Result<f64> {
    let g = &f.grid;
    let u = solve_poisson_dirichlet(f, &vec![0.0; g.n_theta])?;
    let nt = g.n_theta;
    let mut acc = 0.0;
    for i in 0..g.n_r - 1 {
        let mut ring = 0.0;
        for j in 0..nt {
            ring += u.values[i * nt + j] * f.values[i * nt + j];
        }
        acc += g.quad_weights[i] * ring;
    }
    Ok((-acc).max(0.0))
}

/// H^-1(ball) norm of a vector field, componentwise and combined.
pub fn hminus1_components(f: &VectorField, ball_radius: f64) -> Result<HMinus1> {
    let g = &f.grid;
    if !(ball_radius > 0.0) {
        return Err(Error::Config("ball radius must be positive".into()));
    }
    let (ux, uy) = f.to_cartesian();
    let peak = ux.iter().chain(&uy).fold(0.0f64, |a, b| a.max(b.abs()));
    let nt = g.n_theta;
    for i in 0..g.n_r {
        if g.radii[i] > ball_radius * (1.0 + 1e-12) {
            for j in 0..nt {
                let k = i * nt + j;
                if ux[k].abs().max(uy[k].abs()) > 1e-12 * peak {
                    return Err(Error::Precondition(format!(
                        "field not supported in the ball of radius {ball_radius}: value at r = {}",
                        g.radii[i]
                    )));
                }
            }
        }
    }
    if peak == 0.0 {
        return Ok(HMinus1 { total: 0.0, components: [0.0, 0.0] });
    }
    let bg = ball_grid(g, ball_radius)?;
    let mut comps = [0.0; 2];
    for (c, vals) in [ux, uy].iter().enumerate() {
        let resampled = if Arc::ptr_eq(&bg, g) { vals.clone() } else { resample(vals, g, &bg, 1.0)? };
        comps[c] = scalar_hminus1_sq(&ScalarField { grid: bg.clone(), values: resampled })?.sqrt();
    }
    Ok(HMinus1 { total: comps[0].hypot(comps[1]), components: comps })
}

/// `||f||_{H^-1(B)}` with the Euclidean combination of components.
pub fn hminus1_norm(f: &VectorField, ball_radius: f64) -> Result<f64> {
    hminus1_components(f, ball_radius).map(|h| h.total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{compact_laplacian, compact_laplacian_with_flux};

    fn grid(n: usize, nt: usize, r: f64, s: f64) -> Arc<PolarGrid> {
        Arc::new(PolarGrid::new(n, nt, r, s).unwrap())
    }

    #[test]
    fn dirichlet_quadratic() {
        let g = grid(24, 16, 1.0, 1.05);
        let rhs = ScalarField::constant(g.clone(), -4.0);
        let u = solve_poisson_dirichlet(&rhs, &[0.0; 16]).unwrap();
        for i in 0..g.n_r {
            for j in 0..16 {
                let r = g.radii[i];
                assert!((u.at(i, j) - (1.0 - r * r)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dirichlet_harmonic_extension() {
        let g = grid(20, 16, 1.0, 1.0);
        let rhs = ScalarField::zeros(g.clone());
        let bnd: Vec<f64> = fourier::angles(16).iter().map(|t| t.cos()).collect();
        let u = solve_poisson_dirichlet(&rhs, &bnd).unwrap();
        for i in 0..g.n_r {
            for j in 0..16 {
                assert!((u.at(i, j) - g.radii[i] * g.theta(j).cos()).abs() < 1e-10);
            }
        }
        let z = solve_poisson_dirichlet(&rhs, &[0.0; 16]).unwrap();
        assert!(z.max_abs() == 0.0);
    }

    #[test]
    fn dirichlet_residual_is_rounding() {
        let g = grid(30, 24, 3.0, 1.04);
        let rhs = ScalarField::from_fn(g.clone(), |x, y| (x * y).sin() + x);
        let bnd: Vec<f64> = fourier::angles(24).iter().map(|t| (2.0 * t).sin()).collect();
        let u = solve_poisson_dirichlet(&rhs, &bnd).unwrap();
        let l = compact_laplacian(&u);
        let scale = rhs.max_abs();
        for i in 0..g.n_r - 1 {
            for j in 0..24 {
                assert!((l.at(i, j) - rhs.at(i, j)).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn neumann_examples() {
        let g = grid(32, 16, 1.0, 1.0);
        let zero = ScalarField::zeros(g.clone());
        let u = solve_poisson_neumann(&zero, &[0.0; 16]).unwrap();
        assert!(u.max_abs() < 1e-14);

        let four = ScalarField::constant(g.clone(), 4.0);
        let u = solve_poisson_neumann(&four, &[2.0; 16]).unwrap();
        let vol: f64 = g.volumes.iter().sum();
        let mean: f64 = g.volumes.iter().zip(&g.radii).map(|(v, r)| v * r * r).sum::<f64>() / vol;
        for i in 0..g.n_r {
            for j in 0..16 {
                let r = g.radii[i];
                assert!((u.at(i, j) - (r * r - mean)).abs() < 1e-10);
            }
        }
        assert!((mean - 0.5).abs() < 2e-3);

        let one = ScalarField::constant(g.clone(), 1.0);
        match solve_poisson_neumann(&one, &[0.0; 16]) {
            Err(Error::Compatibility { defect, .. }) => assert!((defect - PI).abs() < 1e-10),
            other => panic!("expected compatibility error, got {other:?}"),
        }
    }

    #[test]
    fn neumann_residual_is_rounding() {
        let g = grid(30, 16, 2.0, 1.03);
        // zero-mean source with matching flux
        let rhs = ScalarField::from_fn(g.clone(), |x, y| x * (1.0 + y * y));
        let flux: Vec<f64> = fourier::angles(16).iter().map(|t| (3.0 * t).cos()).collect();
        let u = solve_poisson_neumann(&rhs, &flux).unwrap();
        let l = compact_laplacian_with_flux(&u, &flux);
        for k in 0..g.len() {
            assert!((l.values[k] - rhs.values[k]).abs() < 1e-10 * rhs.max_abs());
        }
    }

    /// 1D oracle: -(1/r)(r u')' = -g on (0, b) with u(b) = 0, solved densely,
    /// then energy = 2 pi * integral r u'^2.
    fn radial_oracle(gfun: impl Fn(f64) -> f64, b: f64, n: usize) -> f64 {
        let h = b / n as f64;
        // u at nodes r_i = i h, i = 0..n, u_n = 0; symmetric condition at 0
        let m = n;
        let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
        let mut rhs = nalgebra::DVector::<f64>::zeros(m);
        for i in 0..m {
            let r = i as f64 * h;
            if i == 0 {
                // (1/r)(r u')' -> 2 u'' at the origin, u'(0)=0
                a[(0, 0)] = -4.0 / (h * h);
                a[(0, 1)] = 4.0 / (h * h);
            } else {
                let rp = r + 0.5 * h;
                let rm = r - 0.5 * h;
                a[(i, i - 1)] = rm / (r * h * h);
                a[(i, i)] = -(rp + rm) / (r * h * h);
                if i + 1 < m {
                    a[(i, i + 1)] = rp / (r * h * h);
                }
            }
            rhs[i] = gfun(r);
        }
        let u = a.lu().solve(&rhs).unwrap();
        let mut e = 0.0;
        for i in 0..m {
            let un = if i + 1 < m { u[i + 1] } else { 0.0 };
            let d = (un - u[i]) / h;
            e += (i as f64 + 0.5) * h * d * d * h;
        }
        2.0 * PI * e
    }

    #[test]
    fn hminus1_matches_radial_oracle() {
        let bump = |r: f64| if r < 1.0 { (1.0 - r * r).powi(4) } else { 0.0 };
        let g = grid(160, 16, 2.0, 1.0);
        let f = VectorField::from_fn(g.clone(), |x, y| (bump(x.hypot(y)), 0.0));
        let a = hminus1_norm(&f, 2.0).unwrap();
        let oracle = radial_oracle(bump, 2.0, 1600).sqrt();
        assert!((a - oracle).abs() < 2e-3 * oracle, "{a} vs {oracle}");
        let zero = VectorField::zeros(g);
        assert_eq!(hminus1_norm(&zero, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn hminus1_support_violation() {
        let g = grid(20, 16, 2.0, 1.0);
        let f = VectorField::from_fn(g, |_, _| (1.0, 0.0));
        assert!(matches!(hminus1_norm(&f, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn hminus1_scaling_identity() {
        let bump = |x: f64, y: f64| {
            let s = (x - 0.1).hypot(y) / 0.8;
            if s < 1.0 { (1.0 - s * s).powi(4) * (1.0 + x) } else { 0.0 }
        };
        let sigma = 2.0;
        let g = grid(48, 16, 2.0, 1.02);
        let gs = Arc::new(g.scaled(1.0 / sigma).unwrap());
        let f = VectorField::from_fn(g.clone(), |x, y| (bump(x, y), -0.5 * bump(x, y)));
        let fs = VectorField::from_fn(gs, |x, y| {
            let (a, b) = (bump(sigma * x, sigma * y), -0.5 * bump(sigma * x, sigma * y));
            (sigma.powi(3) * a, sigma.powi(3) * b)
        });
        let a = hminus1_norm(&f, 2.0).unwrap();
        let b = hminus1_norm(&fs, 2.0 / sigma).unwrap();
        assert!((b - sigma * a).abs() < 1e-10 * b);
    }
}
