//! Pressure recovery and the derived fields built on it.
//!
//! The pressure solves `lap p = div(f - (w . grad) w)` with the divergence taken
//! in conservative finite-volume form, so the Neumann compatibility condition
//! holds to rounding whenever the data are consistent. The boundary flux comes
//! from the normal momentum balance `d_r p = f_r - N_r + (1/r) d_theta omega`.

use crate::error::Result;
use crate::field::{ScalarField, VectorField};
use crate::fourier;
use crate::operators::{advect4, compact_laplacian, gradient};
use crate::poisson::solve_poisson_neumann_projected;

/// Recovered pressure with its compatibility record.
#[derive(Debug, Clone)]
pub struct Pressure {
    pub p: ScalarField,
    /// Neumann compatibility defect before projection.
    pub defect: f64,
    /// Scale against which the defect is judged.
    pub scale: f64,
}

impl Pressure {
    /// Whether the compatibility defect suggests an under-converged velocity.
    pub fn flags_underconverged(&self) -> bool {
        self.defect.abs() > 1e-8 * self.scale.max(1e-300)
    }
}

/// Convective term `(w . grad) w` as Cartesian node arrays.
pub fn convection(w: &VectorField) -> (Vec<f64>, Vec<f64>) {
    let (ux, uy) = w.to_cartesian();
    (advect4(w, &ux), advect4(w, &uy))
}

/// Solve for the pressure of velocity `w`, vorticity `omega` and force `f`;
/// the circle mean at `ref_radius` is set to zero.
pub fn pressure_from(w: &VectorField, omega: &ScalarField, f: &VectorField, ref_radius: f64) -> Result<Pressure> {
    let g = &w.grid;
    let (n, nt) = (g.n_r, g.n_theta);
    let (fx, fy) = f.to_cartesian();
    let (nx, ny) = convection(w);
    let gx: Vec<f64> = fx.iter().zip(&nx).map(|(a, b)| a - b).collect();
    let gy: Vec<f64> = fy.iter().zip(&ny).map(|(a, b)| a - b).collect();
    let gp = VectorField::from_cartesian(g.clone(), &gx, &gy);
    let dt = fourier::d_theta(&gp.u_theta, nt);
    let mut rhs = vec![0.0; n * nt];
    for i in 0..n {
        let v = g.volumes[i];
        for j in 0..nt {
            let k = i * nt + j;
            let outer = if i + 1 < n {
                g.faces[i + 1] * 0.5 * (gp.u_r[k] + gp.u_r[k + nt])
            } else {
                g.r_out * gp.u_r[k]
            };
            let inner = if i == 0 { 0.0 } else { g.faces[i] * 0.5 * (gp.u_r[k - nt] + gp.u_r[k]) };
            rhs[k] = (outer - inner) / v + dt[k] / g.mid_face(i);
        }
    }
    let b = n - 1;
    let om_t = fourier::d_theta(&omega.values[b * nt..], nt);
    let flux: Vec<f64> = (0..nt).map(|j| gp.u_r[b * nt + j] + om_t[j] / g.r_out).collect();
    let sol = solve_poisson_neumann_projected(&ScalarField { grid: g.clone(), values: rhs }, &flux)?;
    let mut p = sol.field;
    let mean = p.circle_average(ref_radius)?;
    p.values.iter_mut().for_each(|v| *v -= mean);
    Ok(Pressure { p, defect: sol.defect, scale: sol.scale })
}

/// Bernoulli pressure `p + |w|^2 / 2`.
pub fn bernoulli_field(w: &VectorField, p: &ScalarField) -> ScalarField {
    let values = (0..p.values.len()).map(|k| p.values[k] + 0.5 * (w.u_r[k].powi(2) + w.u_theta[k].powi(2))).collect();
    ScalarField { grid: p.grid.clone(), values }
}

/// `|w|^2 / 2 + p - omega psi` with `psi` shifted to vanish at `(anchor, 0)`.
pub fn gamma_field(w: &VectorField, p: &ScalarField, omega: &ScalarField, psi: &ScalarField, anchor: f64) -> ScalarField {
    let shift = psi.eval(anchor, 0.0);
    let phi = bernoulli_field(w, p);
    let values = (0..p.values.len()).map(|k| phi.values[k] - omega.values[k] * (psi.values[k] - shift)).collect();
    ScalarField { grid: p.grid.clone(), values }
}

fn cartesian_gradient(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    gradient(f).to_cartesian()
}

fn interior_max(n_interior: usize, a: &[f64], b: &[f64]) -> f64 {
    a[..n_interior].iter().zip(&b[..n_interior]).fold(0.0f64, |m, (x, y)| m.max(x.hypot(*y)))
}

/// Max over interior nodes of `|-lap w + (w . grad) w + grad p - f|`.
pub fn momentum_residual_of(w: &VectorField, p: &ScalarField, f: &VectorField) -> f64 {
    let g = &w.grid;
    let (ux, uy) = w.cartesian_fields();
    let lx = compact_laplacian(&ux);
    let ly = compact_laplacian(&uy);
    let (nx, ny) = convection(w);
    let (px, py) = cartesian_gradient(p);
    let (fx, fy) = f.to_cartesian();
    let m = (g.n_r - 1) * g.n_theta;
    let rx: Vec<f64> = (0..m).map(|k| -lx.values[k] + nx[k] + px[k] - fx[k]).collect();
    let ry: Vec<f64> = (0..m).map(|k| -ly.values[k] + ny[k] + py[k] - fy[k]).collect();
    interior_max(m, &rx, &ry)
}

/// Max over interior nodes of `|grad Phi + perp_grad omega - omega w_perp - f|`.
pub fn vorticity_identity_residual_of(w: &VectorField, p: &ScalarField, omega: &ScalarField, f: &VectorField) -> f64 {
    let g = &w.grid;
    let (phx, phy) = cartesian_gradient(&bernoulli_field(w, p));
    let (ox, oy) = cartesian_gradient(omega);
    let (wx, wy) = w.to_cartesian();
    let (fx, fy) = f.to_cartesian();
    let m = (g.n_r - 1) * g.n_theta;
    let om = &omega.values;
    let rx: Vec<f64> = (0..m).map(|k| phx[k] - oy[k] + om[k] * wy[k] - fx[k]).collect();
    let ry: Vec<f64> = (0..m).map(|k| phy[k] + ox[k] - om[k] * wx[k] - fy[k]).collect();
    interior_max(m, &rx, &ry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PolarGrid;
    use std::sync::Arc;

    #[test]
    fn uniform_stream_has_zero_pressure() {
        let g = Arc::new(PolarGrid::new(24, 16, 4.0, 1.03).unwrap());
        let w = VectorField::from_fn(g.clone(), |_, _| (1.5, 0.0));
        let om = ScalarField::zeros(g.clone());
        let f = VectorField::zeros(g.clone());
        let pr = pressure_from(&w, &om, &f, 4.0).unwrap();
        assert!(pr.p.max_abs() < 1e-10);
        assert!(!pr.flags_underconverged());
        assert!(momentum_residual_of(&w, &pr.p, &f) < 1e-10);
        let phi = bernoulli_field(&w, &pr.p);
        assert!(phi.values.iter().all(|v| (v - 1.125).abs() < 1e-10));
    }

    #[test]
    fn rigid_rotation_centripetal_pressure() {
        // w = (-y, x): grad p = -(w . grad) w = (x, y), p = r^2 / 2 - const.
        // Quadratic data are reproduced exactly by the conservative scheme.
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&n| {
                let g = Arc::new(PolarGrid::uniform(n, 16, 2.0).unwrap());
                let w = VectorField::from_fn(g.clone(), |x, y| (-y, x));
                let om = ScalarField::constant(g.clone(), -2.0);
                let pr = pressure_from(&w, &om, &VectorField::zeros(g.clone()), 1.0).unwrap();
                let exact = ScalarField::from_fn(g.clone(), |x, y| 0.5 * (x * x + y * y) - 0.5);
                pr.p.zip_map(&exact, |a, b| a - b).max_abs()
            })
            .collect();
        assert!(errs.iter().all(|e| *e < 1e-11), "{errs:?}");
    }
}
