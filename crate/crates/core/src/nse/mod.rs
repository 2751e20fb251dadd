//! Steady Navier–Stokes solves on a disk with the uniform stream `lambda e_1`
//! prescribed on the outer circle.
//!
//! The equations are solved in streamfunction–vorticity form (see
//! [`system`]); the velocity is reconstructed as `w = -perp_grad psi`, so
//! `grad psi = w_perp` and `lap psi = omega` with `omega = d_2 w_1 - d_1 w_2`.
//! Pressure, Bernoulli pressure and the auxiliary function
//! `|w|^2/2 + p - omega psi` are post-processed.

pub mod manufactured;
pub mod pressure;
pub mod system;
mod iterate;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use iterate::{iterate, IterationOutcome, SolverControls};
pub use pressure::Pressure;
use system::{merge, split, BoundaryTrace, DiskSystem};

use crate::error::{Error, Result};
use crate::field::{interp_circle, Components, ScalarField, VectorField};
use crate::forcing::{make_force, ForceSpec, ForceSummary};
use crate::grid::PolarGrid;
use crate::operators::{curl2d, dirichlet_integral, divergence4};

/// Grid policy for a disk solve. Lengths are in units of the force support radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_theta: usize,
    /// First radial spacing divided by the support radius.
    pub inner_spacing: f64,
    pub max_stretch: f64,
    /// Fixed ring count; when set the grid uses exactly `max_stretch` as ratio.
    pub n_r: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_theta: 32, inner_spacing: 1.0 / 64.0, max_stretch: 1.0025, n_r: None }
    }
}

impl GridSpec {
    pub fn build(&self, r_out: f64, support_radius: f64) -> Result<PolarGrid> {
        match self.n_r {
            Some(n) => PolarGrid::new(n, self.n_theta, r_out, self.max_stretch),
            None => PolarGrid::with_inner_spacing(r_out, self.inner_spacing * support_radius, self.max_stretch, self.n_theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// Limiting speed; the prescribed far velocity is `(lambda, 0)`.
    pub lambda: f64,
    pub force: ForceSpec,
    /// Disk radius.
    pub r_k: f64,
    pub grid: GridSpec,
    pub solver: SolverControls,
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda = {} must be finite and nonnegative", self.lambda)));
        }
        self.force.validate()?;
        if !(self.r_k >= 2.0 * self.force.support_radius * (1.0 - 1e-12)) {
            return Err(Error::Config(format!(
                "disk radius {} must be at least twice the support radius {}",
                self.r_k, self.force.support_radius
            )));
        }
        self.solver.validate()
    }

    /// The rescaled problem `(tau^3 f(tau z), tau lambda, R / tau, R_k / tau)`.
    pub fn rescaled(&self, tau: f64) -> Self {
        Self { lambda: self.lambda * tau, force: self.force.rescaled(tau), r_k: self.r_k / tau, ..*self }
    }
}

/// Stage of an amplitude ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStage {
    /// Fraction of the force amplitude solved at this stage.
    pub amplitude_fraction: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// `D_k` and the work of the force against the perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    /// Dirichlet integral over the disk.
    pub dirichlet: f64,
    /// `int f . (w - w_inf)`.
    pub work: f64,
    /// `int omega^2`, equal to the Dirichlet integral in the continuum when
    /// `w - w_inf` vanishes on the outer circle.
    pub enstrophy: f64,
}

impl EnergyLedger {
    pub fn relative_gap(&self) -> f64 {
        (self.dirichlet - self.work).abs() / self.dirichlet.max(1e-12)
    }
}

/// A converged disk solution with its diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub grid: Arc<PolarGrid>,
    pub w: VectorField,
    pub p: ScalarField,
    pub psi: ScalarField,
    pub omega: ScalarField,
    pub force: VectorField,
    pub force_summary: Option<ForceSummary>,
    pub support_radius: f64,
    pub far_velocity: (f64, f64),
    pub lambda: f64,
    pub r_k: f64,
    /// Relative residual of the discrete streamfunction–vorticity system.
    pub residual: f64,
    pub residual_momentum: f64,
    pub iterations: usize,
    pub newton_steps: usize,
    pub converged: bool,
    pub energy: EnergyLedger,
    pub history: Vec<f64>,
    pub path: Vec<PathStage>,
    pub pressure_defect: f64,
    pub pressure_ref_radius: f64,
}

/// A fully specified disk problem.
#[derive(Debug, Clone)]
pub struct DiskProblem {
    pub grid: Arc<PolarGrid>,
    pub force: VectorField,
    pub trace: BoundaryTrace,
    /// Constant velocity subtracted in the energy ledger.
    pub far_velocity: (f64, f64),
    pub support_radius: f64,
}

fn cold_or_warm(sys: &DiskSystem, init: Option<&[f64]>) -> Vec<f64> {
    match init {
        Some(x) => x.to_vec(),
        None => sys.cold_state(),
    }
}

fn scaled_curl(curl: &[f64], s: f64) -> Vec<f64> {
    curl.iter().map(|v| v * s).collect()
}

/// Solve a disk problem; on failure of the direct solve, ramp the force
/// amplitude through `controls.continuation_steps` stages.
pub fn solve_problem(problem: &DiskProblem, controls: &SolverControls, init: Option<&[f64]>) -> Result<Solution> {
    controls.validate()?;
    let grid = problem.grid.clone();
    let curl = curl2d(&problem.force).values;
    let sys = DiskSystem::new(grid.clone(), curl.clone(), problem.trace.clone())?;
    let x0 = cold_or_warm(&sys, init);
    let mut path = Vec::new();
    let outcome = match iterate(&sys, x0.clone(), controls) {
        Ok(o) => {
            path.push(PathStage { amplitude_fraction: 1.0, iterations: o.history.len(), residual: o.residual });
            o
        }
        Err(Error::NonConvergence { .. } | Error::Numerical(_)) if controls.continuation_steps > 0 => {
            let steps = controls.continuation_steps;
            let mut x = x0;
            let mut last = None;
            for s in 1..=steps {
                let frac = s as f64 / steps as f64;
                let stage = DiskSystem::new(grid.clone(), scaled_curl(&curl, frac), problem.trace.clone())?;
                let o = iterate(&stage, x, controls)?;
                path.push(PathStage { amplitude_fraction: frac, iterations: o.history.len(), residual: o.residual });
                x = o.state.clone();
                last = Some(o);
            }
            last.expect("at least one stage")
        }
        Err(e) => return Err(e),
    };
    finalize(problem, &sys, outcome, path, controls)
}

fn finalize(
    problem: &DiskProblem,
    sys: &DiskSystem,
    outcome: IterationOutcome,
    path: Vec<PathStage>,
    controls: &SolverControls,
) -> Result<Solution> {
    let grid = problem.grid.clone();
    let (psi, om) = split(&grid, &outcome.state);
    let (ur, ut) = sys.velocity(&psi);
    let w = VectorField::from_polar(grid.clone(), ur, ut);
    let psi = ScalarField { grid: grid.clone(), values: psi };
    let omega = ScalarField { grid: grid.clone(), values: om };
    let ref_radius = controls.pressure_ref_radius.unwrap_or(grid.r_out).min(grid.r_out);
    let pr = pressure::pressure_from(&w, &omega, &problem.force, ref_radius)?;
    let residual_momentum = pressure::momentum_residual_of(&w, &pr.p, &problem.force);
    let energy = energy_ledger(&w, &problem.force, problem.far_velocity)?;
    let iterations: usize = path.iter().map(|s| s.iterations).sum();
    Ok(Solution {
        w,
        p: pr.p,
        psi,
        omega,
        force: problem.force.clone(),
        force_summary: None,
        support_radius: problem.support_radius,
        far_velocity: problem.far_velocity,
        lambda: problem.far_velocity.0.hypot(problem.far_velocity.1),
        r_k: grid.r_out,
        residual: outcome.residual,
        residual_momentum,
        iterations,
        newton_steps: outcome.newton_steps,
        converged: true,
        energy,
        history: outcome.history,
        path,
        pressure_defect: pr.defect,
        pressure_ref_radius: ref_radius,
        grid,
    })
}

/// Dirichlet integral and `int f . (w - w_inf)` over the grid disk.
pub fn energy_ledger(w: &VectorField, f: &VectorField, far: (f64, f64)) -> Result<EnergyLedger> {
    let g = &w.grid;
    let dirichlet = dirichlet_integral(w, 0.0, g.r_out)?;
    let (wx, wy) = w.to_cartesian();
    let (fx, fy) = f.to_cartesian();
    let values = (0..wx.len()).map(|k| fx[k] * (wx[k] - far.0) + fy[k] * (wy[k] - far.1)).collect();
    let work = ScalarField { grid: g.clone(), values }.disk_integral();
    let enstrophy = curl2d(w).map(|v| v * v).disk_integral();
    Ok(EnergyLedger { dirichlet, work, enstrophy })
}

/// Interpolate a previous solution onto `grid`; outside its disk the uniform
/// stream `psi = lambda r sin(theta)`, `omega = 0` is used.
pub fn extend_state(prev: &Solution, grid: &PolarGrid) -> Result<Vec<f64>> {
    let src = &prev.grid;
    if src.n_theta != grid.n_theta {
        return Err(Error::Config("warm start needs the same angular resolution".into()));
    }
    let nt = grid.n_theta;
    let mut psi = vec![0.0; grid.len()];
    let mut om = vec![0.0; grid.len()];
    for i in 0..grid.n_r {
        let r = grid.radii[i];
        if r <= src.r_out * (1.0 + 1e-12) {
            psi[i * nt..(i + 1) * nt].copy_from_slice(&interp_circle(src, &prev.psi.values, 1.0, r));
            om[i * nt..(i + 1) * nt].copy_from_slice(&interp_circle(src, &prev.omega.values, 1.0, r));
        } else {
            for j in 0..nt {
                psi[i * nt + j] = prev.lambda * r * grid.theta(j).sin();
            }
        }
    }
    Ok(merge(grid, &psi, &om))
}

/// Solve the disk problem of `config`, optionally warm-started from a previous solution.
pub fn solve_disk(config: &ProblemConfig, warm_start: Option<&Solution>) -> Result<Solution> {
    config.validate()?;
    let grid = Arc::new(config.grid.build(config.r_k, config.force.support_radius)?);
    let (f, summary) = make_force(&config.force, &grid)?;
    let problem = DiskProblem {
        trace: BoundaryTrace::uniform_stream(&grid, config.lambda),
        force: f,
        far_velocity: (config.lambda, 0.0),
        support_radius: config.force.support_radius,
        grid: grid.clone(),
    };
    let init = match warm_start {
        Some(prev) => Some(extend_state(prev, &grid)?),
        None => None,
    };
    let mut sol = solve_problem(&problem, &config.solver, init.as_deref())?;
    sol.force_summary = Some(summary);
    sol.lambda = config.lambda;
    Ok(sol)
}

/// Recompute the pressure of a solution with a given force and reference radius.
pub fn recover_pressure(sol: &Solution, f: &VectorField, ref_radius: f64) -> Result<Pressure> {
    pressure::pressure_from(&sol.w, &sol.omega, f, ref_radius)
}

/// Bernoulli pressure `p + |w|^2 / 2`.
pub fn bernoulli(sol: &Solution) -> ScalarField {
    pressure::bernoulli_field(&sol.w, &sol.p)
}

/// `|w|^2/2 + p - omega psi`, with `psi` vanishing at `(2R, 0)` (or at the
/// outer radius when the disk is smaller).
pub fn amick_gamma(sol: &Solution) -> ScalarField {
    let anchor = (2.0 * sol.support_radius).min(sol.grid.r_out);
    pressure::gamma_field(&sol.w, &sol.p, &sol.omega, &sol.psi, anchor)
}

/// Max-norm momentum residual over interior nodes.
pub fn momentum_residual(sol: &Solution, f: &VectorField) -> f64 {
    pressure::momentum_residual_of(&sol.w, &sol.p, f)
}

/// Max-norm residual of `grad Phi + perp_grad omega - omega w_perp = f` over interior nodes.
pub fn vorticity_identity_residual(sol: &Solution) -> f64 {
    pressure::vorticity_identity_residual_of(&sol.w, &sol.p, &sol.omega, &sol.force)
}

/// Max of `|div w|` over interior nodes.
pub fn interior_divergence(sol: &Solution) -> f64 {
    let d = divergence4(&sol.w);
    let m = (sol.grid.n_r - 1) * sol.grid.n_theta;
    d.values[..m].iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// Record written next to the binary field dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub lambda: f64,
    pub r_k: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub stretch: f64,
    pub residual: f64,
    pub residual_momentum: f64,
    pub dirichlet: f64,
    pub work: f64,
    pub enstrophy: f64,
    pub support_radius: f64,
    pub far_velocity: (f64, f64),
    pub pressure_ref_radius: f64,
    pub iterations: usize,
    pub newton_steps: usize,
    pub converged: bool,
    pub pressure_defect: f64,
    pub history: Vec<f64>,
    pub path: Vec<PathStage>,
    pub force: Option<ForceSummary>,
}

impl Solution {
    pub fn record(&self) -> SolutionRecord {
        SolutionRecord {
            lambda: self.lambda,
            r_k: self.r_k,
            n_r: self.grid.n_r,
            n_theta: self.grid.n_theta,
            stretch: self.grid.stretch,
            residual: self.residual,
            residual_momentum: self.residual_momentum,
            dirichlet: self.energy.dirichlet,
            work: self.energy.work,
            enstrophy: self.energy.enstrophy,
            support_radius: self.support_radius,
            far_velocity: self.far_velocity,
            pressure_ref_radius: self.pressure_ref_radius,
            iterations: self.iterations,
            newton_steps: self.newton_steps,
            converged: self.converged,
            pressure_defect: self.pressure_defect,
            history: self.history.clone(),
            path: self.path.clone(),
            force: self.force_summary.clone(),
        }
    }

    /// Write `stem.{psi,omega,p,w_r,w_theta,f_r,f_theta}.llf` and `stem.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let fields = [
            ("psi", &self.psi.values),
            ("omega", &self.omega.values),
            ("p", &self.p.values),
            ("w_r", &self.w.u_r),
            ("w_theta", &self.w.u_theta),
            ("f_r", &self.force.u_r),
            ("f_theta", &self.force.u_theta),
        ];
        for (name, values) in fields {
            let f = ScalarField { grid: self.grid.clone(), values: values.clone() };
            crate::io::save_field(&dir.join(format!("{stem}.{name}.llf")), &f)?;
        }
        let json = serde_json::to_string_pretty(&self.record()).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.json")), json)?;
        Ok(())
    }

    /// Inverse of [`Solution::save`].
    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(format!("{stem}.json")))?;
        let rec: SolutionRecord = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
        let read = |name: &str| crate::io::load_field(&dir.join(format!("{stem}.{name}.llf")));
        let psi = read("psi")?;
        let grid = psi.grid.clone();
        if grid.n_r != rec.n_r || grid.n_theta != rec.n_theta {
            return Err(Error::Io(format!("{stem}: field dumps do not match the record")));
        }
        let mut fields = Vec::new();
        for name in ["omega", "p", "w_r", "w_theta", "f_r", "f_theta"] {
            let f = read(name)?;
            if f.grid.len() != grid.len() {
                return Err(Error::Io(format!("{stem}.{name}: grid mismatch")));
            }
            fields.push(f.values);
        }
        let mut it = fields.into_iter();
        let mut next = || it.next().expect("six fields read");
        let omega = ScalarField { grid: grid.clone(), values: next() };
        let p = ScalarField { grid: grid.clone(), values: next() };
        let w = VectorField { grid: grid.clone(), u_r: next(), u_theta: next(), components: Components::Polar };
        let force = VectorField { grid: grid.clone(), u_r: next(), u_theta: next(), components: Components::Polar };
        Ok(Self {
            grid,
            w,
            p,
            psi,
            omega,
            force,
            force_summary: rec.force,
            support_radius: rec.support_radius,
            far_velocity: rec.far_velocity,
            lambda: rec.lambda,
            r_k: rec.r_k,
            residual: rec.residual,
            residual_momentum: rec.residual_momentum,
            iterations: rec.iterations,
            newton_steps: rec.newton_steps,
            converged: rec.converged,
            energy: EnergyLedger { dirichlet: rec.dirichlet, work: rec.work, enstrophy: rec.enstrophy },
            history: rec.history,
            path: rec.path,
            pressure_defect: rec.pressure_defect,
            pressure_ref_radius: rec.pressure_ref_radius,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::ForceFamily;

    fn config(family: ForceFamily, amplitude: f64, lambda: f64, r_k: f64) -> ProblemConfig {
        ProblemConfig {
            lambda,
            force: ForceSpec::new(family, 1.0, amplitude),
            r_k,
            grid: GridSpec::default(),
            solver: SolverControls::default(),
        }
    }

    #[test]
    fn force_free_problem_is_solved_exactly() {
        let sol = solve_disk(&config(ForceFamily::None, 0.0, 1.3, 8.0), None).unwrap();
        assert!(sol.iterations <= 1);
        assert!(sol.energy.dirichlet < 1e-20);
        assert!(sol.omega.max_abs() == 0.0);
        let (wx, wy) = sol.w.to_cartesian();
        assert!(wx.iter().all(|v| (v - 1.3).abs() < 1e-12) && wy.iter().all(|v| v.abs() < 1e-12));
        assert!(sol.p.max_abs() < 1e-12);
        assert!(bernoulli(&sol).values.iter().all(|v| (v - 0.845).abs() < 1e-12));
        assert!(amick_gamma(&sol).values.iter().all(|v| (v - 0.845).abs() < 1e-12));
        // rounding in the Cartesian components, amplified by the Laplacian near the pole
        assert!(sol.residual_momentum < 1e-7, "{}", sol.residual_momentum);
    }

    #[test]
    fn energy_identity_small_dipole() {
        let sol = solve_disk(&config(ForceFamily::BumpDipole, 0.1, 1.0, 16.0), None).unwrap();
        assert!(sol.energy.relative_gap() < 1e-3, "{:?}", sol.energy);
        assert!(interior_divergence(&sol) < 1e-9);
    }

    #[test]
    fn scaling_equivariance() {
        let base = config(ForceFamily::BumpNet, 0.5, 1.0, 8.0);
        let a = solve_disk(&base, None).unwrap();
        let b = solve_disk(&base.rescaled(2.0), None).unwrap();
        assert_eq!(a.grid.n_r, b.grid.n_r);
        // w_tau(z) = tau w(tau z): node k of the scaled grid sits at z / tau
        let (ax, ay) = a.w.to_cartesian();
        let (bx, by) = b.w.to_cartesian();
        let err = (0..ax.len()).fold(0.0f64, |m, k| m.max((bx[k] - 2.0 * ax[k]).abs().max((by[k] - 2.0 * ay[k]).abs())));
        assert!(err < 1e-8 * a.w.max_abs(), "{err}");
        // D scales like tau^2
        let ratio = b.energy.dirichlet / (4.0 * a.energy.dirichlet);
        assert!((ratio - 1.0).abs() < 1e-6, "{ratio} {:?} {:?}", a.energy, b.energy);
    }

    #[test]
    fn warm_restart_reproduces_solution() {
        let c = config(ForceFamily::Rotlet, 1.0, 1.0, 6.0);
        let a = solve_disk(&c, None).unwrap();
        let b = solve_disk(&c, Some(&a)).unwrap();
        assert!(b.iterations <= 2, "{}", b.iterations);
        let d = a.psi.zip_map(&b.psi, |x, y| x - y).max_abs();
        assert!(d < 1e-9 * a.psi.max_abs(), "{d}");
    }

    #[test]
    fn momentum_residual_detects_perturbation() {
        let c = config(ForceFamily::BumpDipole, 1.0, 1.0, 8.0);
        let sol = solve_disk(&c, None).unwrap();
        let base = momentum_residual(&sol, &sol.force);
        let mut noisy = sol.clone();
        for (k, v) in noisy.w.u_r.iter_mut().enumerate() {
            *v += 1e-3 * (((k * 7919) % 13) as f64 / 6.0 - 1.0);
        }
        let bumped = momentum_residual(&noisy, &sol.force);
        assert!(bumped > 10.0 * base, "{base} -> {bumped}");
        assert!(vorticity_identity_residual(&sol) < 10.0 * base.max(1e-3));
    }

    #[test]
    fn gamma_tends_to_half_far_away() {
        let sol = solve_disk(&config(ForceFamily::BumpDipole, 0.3, 1.0, 16.0), None).unwrap();
        let g = amick_gamma(&sol);
        let grid = &sol.grid;
        let mut drift = 0.0f64;
        for i in 0..grid.n_r {
            if grid.radii[i] >= 0.9 * grid.r_out {
                for v in g.ring(i) {
                    drift = drift.max((v - 0.5).abs());
                }
            }
        }
        assert!(drift < 5e-2, "{drift}");
    }

    #[test]
    fn rejects_small_disk() {
        assert!(matches!(solve_disk(&config(ForceFamily::BumpNet, 1.0, 1.0, 1.5), None), Err(Error::Config(_))));
    }

    #[test]
    fn save_writes_fields_and_record() {
        let sol = solve_disk(&config(ForceFamily::Rotlet, 0.2, 1.0, 4.0), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        sol.save(dir.path(), "run").unwrap();
        let psi = crate::io::load_field(&dir.path().join("run.psi.llf")).unwrap();
        assert_eq!(psi.values, sol.psi.values);
        let rec: SolutionRecord =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
        assert_eq!(rec, sol.record());
        let back = Solution::load(dir.path(), "run").unwrap();
        assert_eq!(back.w, sol.w);
        assert_eq!(back.force, sol.force);
        assert_eq!(back.record(), sol.record());
        let a = crate::estimates::verify_solution(&sol).unwrap();
        let b = crate::estimates::verify_solution(&back).unwrap();
        assert_eq!(a, b);
    }
}

