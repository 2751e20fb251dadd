//! Manufactured solutions for convergence studies.
//!
//! The velocity is `w = -perp_grad psi` with `psi = lambda y + c G`, `G` an
//! off-centre Gaussian, so `w` is solenoidal and tends to `lambda e_1`. The
//! pressure is a second Gaussian. The force is computed in closed form from
//! `f = perp_grad omega - omega w_perp + grad(|w|^2 / 2 + p)`, which is the
//! momentum equation rewritten through `lap w = -perp_grad omega` and
//! `(w . grad) w = grad |w|^2 / 2 - omega w_perp`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::system::BoundaryTrace;
use super::{solve_problem, DiskProblem, Solution, SolverControls};
use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::grid::PolarGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedFlow {
    pub lambda: f64,
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
    pub pressure_amplitude: f64,
    pub pressure_center: [f64; 2],
    pub pressure_width: f64,
}

impl Default for ManufacturedFlow {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            amplitude: 0.8,
            center: [0.6, -0.4],
            width: 1.3,
            pressure_amplitude: 0.5,
            pressure_center: [-0.5, 0.3],
            pressure_width: 1.5,
        }
    }
}

/// Derivatives of the streamfunction up to third order (only those needed).
struct Jet {
    px: f64,
    py: f64,
    pxx: f64,
    pxy: f64,
    pyy: f64,
    om: f64,
    om_x: f64,
    om_y: f64,
}

impl ManufacturedFlow {
    fn jet(&self, x: f64, y: f64) -> Jet {
        let a = 1.0 / (self.width * self.width);
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        let rho2 = dx * dx + dy * dy;
        let g = self.amplitude * (-a * rho2).exp();
        let lap = (4.0 * a * a * rho2 - 4.0 * a) * g;
        let k = 16.0 * a * a - 8.0 * a * a * a * rho2;
        Jet {
            px: -2.0 * a * dx * g,
            py: self.lambda - 2.0 * a * dy * g,
            pxx: (4.0 * a * a * dx * dx - 2.0 * a) * g,
            pxy: 4.0 * a * a * dx * dy * g,
            pyy: (4.0 * a * a * dy * dy - 2.0 * a) * g,
            om: lap,
            om_x: k * dx * g,
            om_y: k * dy * g,
        }
    }

    pub fn streamfunction(&self, x: f64, y: f64) -> f64 {
        let a = 1.0 / (self.width * self.width);
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        self.lambda * y + self.amplitude * (-a * (dx * dx + dy * dy)).exp()
    }

    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let j = self.jet(x, y);
        (j.py, -j.px)
    }

    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        self.jet(x, y).om
    }

    pub fn pressure(&self, x: f64, y: f64) -> f64 {
        let b = 1.0 / (self.pressure_width * self.pressure_width);
        let (dx, dy) = (x - self.pressure_center[0], y - self.pressure_center[1]);
        self.pressure_amplitude * (-b * (dx * dx + dy * dy)).exp()
    }

    fn pressure_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let b = 1.0 / (self.pressure_width * self.pressure_width);
        let p = self.pressure(x, y);
        (-2.0 * b * (x - self.pressure_center[0]) * p, -2.0 * b * (y - self.pressure_center[1]) * p)
    }

    /// `f = -lap w + (w . grad) w + grad p`.
    pub fn force(&self, x: f64, y: f64) -> (f64, f64) {
        let j = self.jet(x, y);
        let (gx, gy) = self.pressure_gradient(x, y);
        // w_perp = grad psi
        let fx = -j.om_y - j.om * j.px + j.px * j.pxx + j.py * j.pxy + gx;
        let fy = j.om_x - j.om * j.py + j.px * j.pxy + j.py * j.pyy + gy;
        (fx, fy)
    }

    pub fn problem(&self, grid: &Arc<PolarGrid>) -> Result<DiskProblem> {
        Ok(DiskProblem {
            grid: grid.clone(),
            force: VectorField::from_fn(grid.clone(), |x, y| self.force(x, y)),
            trace: BoundaryTrace::from_velocity(grid, |x, y| self.velocity(x, y))?,
            far_velocity: (self.lambda, 0.0),
            support_radius: grid.r_out / 2.0,
        })
    }

    /// Max-norm errors of a computed solution against the exact fields.
    pub fn errors(&self, sol: &Solution) -> Result<ManufacturedErrors> {
        let g = &sol.grid;
        let exact_w = VectorField::from_fn(g.clone(), |x, y| self.velocity(x, y));
        let (ex, ey) = exact_w.to_cartesian();
        let (wx, wy) = sol.w.to_cartesian();
        let velocity = (0..ex.len()).fold(0.0f64, |m, k| m.max((wx[k] - ex[k]).hypot(wy[k] - ey[k])));
        let mut p_exact = ScalarField::from_fn(g.clone(), |x, y| self.pressure(x, y));
        let mean = p_exact.circle_average(sol.pressure_ref_radius)?;
        p_exact.values.iter_mut().for_each(|v| *v -= mean);
        let pressure = sol.p.zip_map(&p_exact, |a, b| a - b).max_abs();
        let om_exact = ScalarField::from_fn(g.clone(), |x, y| self.vorticity(x, y));
        let vorticity = sol.omega.zip_map(&om_exact, |a, b| a - b).max_abs();
        Ok(ManufacturedErrors { n_r: g.n_r, spacing: g.spacing(0), velocity, pressure, vorticity })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedErrors {
    pub n_r: usize,
    pub spacing: f64,
    pub velocity: f64,
    pub pressure: f64,
    pub vorticity: f64,
}

/// Observed orders `log2(e_k / e_{k+1})` between successive levels (for halved spacing).
pub fn observed_orders(errors: &[f64], spacings: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Solve the manufactured problem on uniform grids of radius `r_out`.
pub fn convergence_study(
    flow: &ManufacturedFlow,
    r_out: f64,
    n_rs: &[usize],
    n_theta: usize,
    controls: &SolverControls,
) -> Result<Vec<ManufacturedErrors>> {
    n_rs.iter()
        .map(|&n| {
            let g = Arc::new(PolarGrid::uniform(n, n_theta, r_out)?);
            let sol = solve_problem(&flow.problem(&g)?, controls, None)?;
            flow.errors(&sol)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_force_matches_finite_differences() {
        let m = ManufacturedFlow::default();
        let h = 1e-3;
        let psi = |x: f64, y: f64| m.streamfunction(x, y);
        // velocity and vorticity by central differences of psi
        let vel = |x: f64, y: f64| {
            ((psi(x, y + h) - psi(x, y - h)) / (2.0 * h), -(psi(x + h, y) - psi(x - h, y)) / (2.0 * h))
        };
        let vort = |x: f64, y: f64| {
            (psi(x + h, y) + psi(x - h, y) + psi(x, y + h) + psi(x, y - h) - 4.0 * psi(x, y)) / (h * h)
        };
        for &(x, y) in &[(0.3, 0.2), (-1.0, 0.7), (1.4, -1.1), (2.5, 0.4)] {
            let (u, v) = vel(x, y);
            let (eu, ev) = m.velocity(x, y);
            assert!((u - eu).abs() < 1e-5 && (v - ev).abs() < 1e-5);
            assert!((vort(x, y) - m.vorticity(x, y)).abs() < 1e-4);
            // f = -lap w + (w . grad) w + grad p, everything from finite differences
            let d = 1e-2;
            let lap = |c: usize| {
                let g = |x: f64, y: f64| if c == 0 { m.velocity(x, y).0 } else { m.velocity(x, y).1 };
                (g(x + d, y) + g(x - d, y) + g(x, y + d) + g(x, y - d) - 4.0 * g(x, y)) / (d * d)
            };
            let grad = |c: usize| {
                let g = |x: f64, y: f64| if c == 0 { m.velocity(x, y).0 } else { m.velocity(x, y).1 };
                ((g(x + d, y) - g(x - d, y)) / (2.0 * d), (g(x, y + d) - g(x, y - d)) / (2.0 * d))
            };
            let px = (m.pressure(x + d, y) - m.pressure(x - d, y)) / (2.0 * d);
            let py = (m.pressure(x, y + d) - m.pressure(x, y - d)) / (2.0 * d);
            let (gx0, gy0) = grad(0);
            let (gx1, gy1) = grad(1);
            let fx = -lap(0) + eu * gx0 + ev * gy0 + px;
            let fy = -lap(1) + eu * gx1 + ev * gy1 + py;
            let (ax, ay) = m.force(x, y);
            assert!((fx - ax).abs() < 1e-3 && (fy - ay).abs() < 1e-3, "({fx}, {fy}) vs ({ax}, {ay})");
        }
    }

    #[test]
    fn manufactured_solve_converges_at_second_order() {
        let m = ManufacturedFlow::default();
        let errs = convergence_study(&m, 8.0, &[32, 64, 128], 32, &SolverControls::default()).unwrap();
        let vel: Vec<f64> = errs.iter().map(|e| e.velocity).collect();
        let h: Vec<f64> = errs.iter().map(|e| e.spacing).collect();
        let orders = observed_orders(&vel, &h);
        for o in &orders {
            assert!((o - 2.0).abs() < 0.3, "velocity orders {orders:?} errors {vel:?}");
        }
        let pr: Vec<f64> = errs.iter().map(|e| e.pressure).collect();
        let po = observed_orders(&pr, &h);
        assert!(po[1] > 1.7, "pressure orders {po:?} errors {pr:?}");
    }
}
