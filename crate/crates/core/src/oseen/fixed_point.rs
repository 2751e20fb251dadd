//! Perturbative solutions by fixed-point iteration on the Oseen representation
//! `u = E * f - I(u, u)`, `w = lambda e_1 + u`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lattice::{KernelTable, Lattice, LatticeField};
use super::norms::{l2_ball, norm_ledger, NormLedger, Samples};
use crate::error::{Error, Result};
use crate::forcing::{make_force, ForceSpec, ForceSummary};
use crate::grid::PolarGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub lambda: f64,
    pub force: ForceSpec,
    /// Half side of the computational square, in units of the support radius.
    pub half_width: f64,
    /// Lattice spacing, in units of the support radius.
    pub spacing: f64,
    /// Stop when the X-norm of the update is below `tol` times the X-norm of the iterate.
    pub tol: f64,
    pub max_iter: usize,
    /// Smallness parameter used for the reported hypothesis ratio.
    pub epsilon: f64,
    /// Also solve on the lattice with twice the spacing to estimate the discretization error.
    pub estimate_error: bool,
}

impl FixedPointConfig {
    pub fn new(lambda: f64, force: ForceSpec) -> Self {
        Self { lambda, force, half_width: 8.0, spacing: 0.125, tol: 1e-10, max_iter: 60, epsilon: 0.1, estimate_error: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("fixed-point iteration needs lambda > 0, got {}", self.lambda)));
        }
        self.force.validate()?;
        if !(self.half_width >= 2.0 && self.spacing > 0.0 && self.spacing <= 0.5) {
            return Err(Error::Config("lattice must cover B_2R with spacing at most R/2".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tolerance and iteration cap must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// The lattice, with an even cell count so that it coarsens exactly.
    pub fn lattice(&self) -> Result<Lattice> {
        let r = self.force.support_radius;
        let l = Lattice::new(self.half_width * r, self.spacing * r)?;
        Ok(if l.n % 2 == 1 { Lattice { n: l.n + 1, h: l.h * l.n as f64 / (l.n + 1) as f64 } } else { l })
    }
}

/// One row of the iteration ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub x_norm: f64,
    pub y_norm: f64,
    pub l5_ball: f64,
    /// X-norm of the update `u^{n+1} - u^n`.
    pub update: f64,
    /// `L^2(B_2R)` norm of the update.
    pub update_l2: f64,
    /// `update_n / update_{n-1}`.
    pub contraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixedPointSolution {
    pub config: FixedPointConfig,
    pub lattice: Lattice,
    /// Perturbation `u = w - lambda e_1` at the cell centres.
    pub u: LatticeField,
    /// The linear (Oseen) part `E * f`.
    pub oseen_part: LatticeField,
    pub ledger: Vec<IterationRecord>,
    /// Largest contraction factor measured once the updates decay.
    pub contraction: f64,
    pub converged: bool,
    pub norms: NormLedger,
    pub force: Option<ForceSummary>,
    /// `A (1 + lambda R)^3 L / (epsilon^2 lambda)` with `L = ln^{1/2}(2 + 1/(lambda R))`, or 1 for zero total force.
    pub hypothesis_ratio: f64,
    /// `L^2(B_2R)` difference to the coarse-lattice solution divided by 3 (second order).
    pub discretization_error: Option<f64>,
    /// `L^2(B_2R)` size of the quadratic term from sources in the outer tenth of the square.
    pub truncation_error: f64,
}

impl FixedPointSolution {
    /// Full velocity `lambda e_1 + u` at a cell centre index.
    pub fn velocity(&self, k: usize) -> [f64; 2] {
        [self.config.lambda + self.u.u1[k], self.u.u2[k]]
    }

    /// Bilinear interpolation of the perturbation at an arbitrary point.
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let l = self.lattice;
        let half = l.half_width();
        let fx = ((x + half) / l.h - 0.5).clamp(0.0, (l.n - 1) as f64);
        let fy = ((y + half) / l.h - 0.5).clamp(0.0, (l.n - 1) as f64);
        let (i0, j0) = ((fx.floor() as usize).min(l.n - 2), (fy.floor() as usize).min(l.n - 2));
        let (tx, ty) = (fx - i0 as f64, fy - j0 as f64);
        let mut out = [0.0; 2];
        for (di, dj, w) in [(0, 0, (1.0 - tx) * (1.0 - ty)), (1, 0, tx * (1.0 - ty)), (0, 1, (1.0 - tx) * ty), (1, 1, tx * ty)] {
            let k = l.idx(i0 + di, j0 + dj);
            out[0] += w * self.u.u1[k];
            out[1] += w * self.u.u2[k];
        }
        out
    }

    /// Combined error estimate in `L^2(B_2R)`.
    pub fn tolerance(&self) -> f64 {
        let iteration = self.ledger.last().map_or(0.0, |r| r.update_l2);
        self.discretization_error.unwrap_or(0.0) + self.truncation_error + iteration
    }
}

pub fn hypothesis_ratio(a_norm: f64, lambda: f64, support_radius: f64, epsilon: f64, zero_total_force: bool) -> f64 {
    let lr = lambda * support_radius;
    let log = if zero_total_force { 1.0 } else { (2.0 + 1.0 / lr).ln().sqrt() };
    a_norm * (1.0 + lr).powi(3) * log / (epsilon * epsilon * lambda)
}

struct Iterated {
    u: LatticeField,
    oseen_part: LatticeField,
    ledger: Vec<IterationRecord>,
    converged: bool,
}

fn iterate(cfg: &FixedPointConfig, table: &KernelTable) -> Result<Iterated> {
    let l = table.lattice;
    let r = cfg.force.support_radius;
    let f = LatticeField::from_fn(l, |x, y| cfg.force.eval(x, y));
    let oseen_part = table.convolve(&f, None);
    let mut u = oseen_part.clone();
    let mut ledger = Vec::new();
    let mut prev_update: Option<f64> = None;
    let mut factors: Vec<f64> = Vec::new();
    for it in 1..=cfg.max_iter {
        let next = oseen_part.axpy(-1.0, &table.bilinear(&u, &u, None));
        if !next.is_finite() {
            return Err(Error::Divergence { factor: f64::INFINITY, history: ledger.iter().map(|r: &IterationRecord| r.update).collect() });
        }
        let diff = next.axpy(-1.0, &u);
        let diff_samples = Samples::from_lattice(&diff);
        let update = norm_ledger(&diff_samples, r, cfg.lambda).x_norm;
        let norms = norm_ledger(&Samples::from_lattice(&next), r, cfg.lambda);
        let factor = prev_update.filter(|p| *p > 0.0).map(|p| update / p);
        if let Some(q) = factor {
            factors.push(q);
        }
        ledger.push(IterationRecord {
            iteration: it,
            x_norm: norms.x_norm,
            y_norm: norms.y_norm,
            l5_ball: norms.l5_ball,
            update,
            update_l2: l2_ball(&diff_samples, r),
            contraction: factor,
        });
        u = next;
        if update <= cfg.tol * norms.x_norm || update == 0.0 {
            return Ok(Iterated { u, oseen_part, ledger, converged: true });
        }
        if factors.len() >= 5 && factors[factors.len() - 5..].iter().all(|&q| q >= 1.0) {
            return Err(Error::Divergence { factor: factors[factors.len() - 1], history: ledger.iter().map(|r| r.update).collect() });
        }
        prev_update = Some(update);
    }
    Ok(Iterated { u, oseen_part, ledger, converged: false })
}

pub fn fixed_point_solve(cfg: &FixedPointConfig) -> Result<FixedPointSolution> {
    cfg.validate()?;
    let r = cfg.force.support_radius;
    let lattice = cfg.lattice()?;
    let table = KernelTable::new(lattice, cfg.lambda)?;
    let it = iterate(cfg, &table)?;
    if !it.converged {
        let last = it.ledger.last().map_or(f64::NAN, |r| r.update);
        return Err(Error::NonConvergence { iterations: cfg.max_iter, last, history: it.ledger.iter().map(|r| r.update).collect() });
    }
    let samples = Samples::from_lattice(&it.u);
    let norms = norm_ledger(&samples, r, cfg.lambda);
    // contribution of the quadratic term from the outer tenth of the square
    let half = lattice.half_width();
    let outer: Vec<bool> = lattice.points().iter().map(|z| z[0].abs().max(z[1].abs()) > 0.9 * half).collect();
    let tail = table.bilinear(&it.u, &it.u, Some(&outer));
    let truncation_error = l2_ball(&Samples::from_lattice(&tail), r);
    let discretization_error = if cfg.estimate_error {
        let coarse_lattice = Lattice { n: lattice.n / 2, h: 2.0 * lattice.h };
        let coarse_table = KernelTable::new(coarse_lattice, cfg.lambda)?;
        let coarse = iterate(cfg, &coarse_table)?;
        let fine_on_coarse = it.u.coarsened()?;
        let diff = fine_on_coarse.axpy(-1.0, &coarse.u);
        Some(l2_ball(&Samples::from_lattice(&diff), r) / 3.0)
    } else {
        None
    };
    let force = if cfg.force.is_zero() {
        None
    } else {
        let grid = Arc::new(PolarGrid::with_inner_spacing(2.0 * r, r / 64.0, crate::nse::GridSpec::default().max_stretch, 32)?);
        Some(make_force(&cfg.force, &grid)?.1)
    };
    let hypothesis = force.as_ref().map_or(0.0, |s| {
        hypothesis_ratio(s.a_norm, cfg.lambda, r, cfg.epsilon, cfg.force.family.zero_total_force())
    });
    // the first factor compares against the size of the Oseen part itself; skip it when later ones exist
    let factors: Vec<f64> = it.ledger.iter().filter_map(|r| r.contraction).collect();
    let contraction = match factors.len() {
        0 => 0.0,
        1 => factors[0],
        _ => factors[1..].iter().fold(0.0f64, |m, &q| m.max(q)),
    };
    Ok(FixedPointSolution {
        config: *cfg,
        lattice,
        u: it.u,
        oseen_part: it.oseen_part,
        ledger: it.ledger,
        contraction,
        converged: true,
        norms,
        force,
        hypothesis_ratio: hypothesis,
        discretization_error,
        truncation_error,
    })
}

/// One amplitude of a breakdown ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampStep {
    pub amplitude: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Largest update ratio seen (0 when fewer than two iterations ran).
    pub contraction: f64,
}

/// Double the force amplitude from `cfg.force.amplitude` until the iteration
/// stops converging or `max_steps` amplitudes were tried. The kernel table is
/// built once and shared by all amplitudes.
pub fn breakdown_ramp(cfg: &FixedPointConfig, max_steps: usize) -> Result<Vec<RampStep>> {
    cfg.validate()?;
    let table = KernelTable::new(cfg.lattice()?, cfg.lambda)?;
    let mut out = Vec::new();
    let mut amplitude = cfg.force.amplitude;
    for _ in 0..max_steps {
        let c = FixedPointConfig { force: ForceSpec { amplitude, ..cfg.force }, ..*cfg };
        let step = match iterate(&c, &table) {
            Ok(it) => RampStep {
                amplitude,
                converged: it.converged,
                iterations: it.ledger.len(),
                contraction: it.ledger.iter().filter_map(|r| r.contraction).fold(0.0, f64::max),
            },
            Err(Error::Divergence { factor, history }) => RampStep { amplitude, converged: false, iterations: history.len(), contraction: factor },
            Err(e) => return Err(e),
        };
        out.push(step);
        if !step.converged {
            break;
        }
        amplitude *= 2.0;
    }
    Ok(out)
}
