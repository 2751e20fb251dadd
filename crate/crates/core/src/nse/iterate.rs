//! Nonlinear iteration: under-relaxed Picard steps with frozen advection, then
//! Newton steps whose linear systems are solved matrix free by GMRES,
//! preconditioned with a block LU of a lagged Jacobian.

use serde::{Deserialize, Serialize};

use super::system::DiskSystem;
use crate::error::{Error, Result};
use crate::linalg::{gmres, BlockLu};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverControls {
    /// Under-relaxation of the Picard update, in `(0, 1]`.
    pub picard_relax: f64,
    /// Relative Picard update below which Newton takes over.
    pub newton_switch_tol: f64,
    /// Relative residual of the discrete system declaring convergence.
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Number of amplitude-ramp stages used when a direct solve fails (0 disables).
    pub continuation_steps: usize,
    pub gmres_restart: usize,
    /// Radius where the pressure circle mean is set to zero (default: outer radius).
    pub pressure_ref_radius: Option<f64>,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            picard_relax: 1.0,
            newton_switch_tol: 1e-2,
            tol_residual: 1e-12,
            max_iter: 200,
            continuation_steps: 4,
            gmres_restart: 30,
            pressure_ref_radius: None,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_relax > 0.0 && self.picard_relax <= 1.0) {
            return Err(Error::Config(format!("picard_relax = {} must lie in (0, 1]", self.picard_relax)));
        }
        if !(self.newton_switch_tol > 0.0) || !(self.tol_residual > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.max_iter == 0 || self.gmres_restart == 0 {
            return Err(Error::Config("max_iter and gmres_restart must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of the nonlinear iteration.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub state: Vec<f64>,
    /// Relative residual after each residual evaluation.
    pub history: Vec<f64>,
    pub picard_steps: usize,
    pub newton_steps: usize,
    pub gmres_iterations: usize,
    pub residual: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Row-group scales for the relative residual. Rows are grouped by physical
/// dimension: interior streamfunction rows and the boundary vorticity row
/// (dimension of `omega`), interior vorticity rows (dimension of `curl f`), and
/// the boundary streamfunction row. Each group is compared with the size of
/// its largest terms, `|L| |x| + |source|`.
struct Scales {
    op_norm: f64,
    source: f64,
}

impl Scales {
    fn new(sys: &DiskSystem) -> Self {
        let c = &sys.coeffs;
        let m = (sys.grid.n_theta / 2) as f64;
        let op_norm = (0..sys.grid.n_r)
            .map(|i| c.lower[i].abs() + c.diag[i].abs() + c.upper[i].abs() + c.ang[i] * m * m)
            .fold(0.0f64, f64::max);
        Self { op_norm, source: max_abs(&sys.curl_f) }
    }

    fn measure(&self, sys: &DiskSystem, x: &[f64], f: &[f64]) -> f64 {
        let nt = sys.grid.n_theta;
        let nb = sys.grid.n_r;
        let (mut psi, mut om) = (0.0f64, 0.0f64);
        for bx in x.chunks(2 * nt) {
            psi = psi.max(max_abs(&bx[..nt]));
            om = om.max(max_abs(&bx[nt..]));
        }
        let (mut ga, mut gb, mut gc) = (0.0f64, 0.0f64, 0.0f64);
        for (i, bf) in f.chunks(2 * nt).enumerate() {
            if i + 1 < nb {
                ga = ga.max(max_abs(&bf[..nt]));
                gb = gb.max(max_abs(&bf[nt..]));
            } else {
                gc = gc.max(max_abs(&bf[..nt]));
                ga = ga.max(max_abs(&bf[nt..]));
            }
        }
        let rel = |v: f64, s: f64| if v == 0.0 { 0.0 } else { v / s.max(1e-300) };
        rel(ga, self.op_norm * psi + om)
            .max(rel(gb, self.op_norm * om + self.source))
            .max(rel(gc, psi))
    }
}

/// Drive `F(x) = 0` from `x0`.
pub fn iterate(sys: &DiskSystem, x0: Vec<f64>, controls: &SolverControls) -> Result<IterationOutcome> {
    let scales = Scales::new(sys);
    let mut x = x0;
    let mut history = Vec::new();
    let (mut picard, mut newton, mut krylov) = (0usize, 0usize, 0usize);
    let mut newton_phase = false;
    let mut precond: Option<BlockLu> = None;
    let mut growth = 0usize;
    for it in 0..=controls.max_iter {
        let f = sys.residual(&x);
        let res = scales.measure(sys, &x, &f);
        if !res.is_finite() || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite residual after {it} steps")));
        }
        if let Some(&prev) = history.last() {
            growth = if res > prev { growth + 1 } else { 0 };
        }
        history.push(res);
        if res < controls.tol_residual {
            return Ok(IterationOutcome {
                state: x,
                history,
                picard_steps: picard,
                newton_steps: newton,
                gmres_iterations: krylov,
                residual: res,
            });
        }
        if growth >= 20 || it == controls.max_iter {
            return Err(Error::NonConvergence { iterations: it, last: res, history });
        }
        if !newton_phase {
            let lu = sys.assemble(&x, false).factor()?;
            let dx = lu.solve(&f);
            let upd = controls.picard_relax * max_abs(&dx) / max_abs(&x).max(1e-300);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a -= controls.picard_relax * d);
            picard += 1;
            if upd < controls.newton_switch_tol {
                newton_phase = true;
            }
        } else {
            if precond.is_none() {
                precond = Some(sys.assemble(&x, true).factor()?);
            }
            let lu = precond.as_ref().expect("factored above");
            let xs = x.clone();
            let apply = |v: &[f64]| sys.jacobian_apply(&xs, v);
            let pc = |v: &[f64]| lu.solve(v);
            let mut dx = vec![0.0; f.len()];
            let info = gmres(&apply, &pc, &f, &mut dx, 1e-10, controls.gmres_restart, 4 * controls.gmres_restart);
            krylov += info.iterations;
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a -= d);
            newton += 1;
            if !info.converged || info.iterations > 5 {
                precond = None;
            }
        }
    }
    unreachable!("loop returns on its last pass")
}
