//! Validation of the kernel, decay ledgers, bilinear-form constants and the
//! cross-check between disk solutions and fixed-point solutions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::fixed_point::FixedPointSolution;
use super::kernel::{kernel_residual, oseen_tensor};
use super::lattice::{disk_mask, KernelTable, Lattice, LatticeField};
use super::norms::{l2_ball, majorant, norm_ledger, Samples, GUARD_FRACTION, MAJORANT_EXPONENTS};
use crate::error::{Error, Result};
use crate::estimates::{EstimateReport, Fingerprint, Status};
use crate::field::ScalarField;
use crate::invading::InvadingRun;
use crate::nse::Solution;

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Kernel validation on a square patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelValidation {
    pub lambda: f64,
    pub patch_half_width: f64,
    pub spacing: f64,
    /// Nodes closer than this to the origin are excluded.
    pub core_radius: f64,
    pub points: usize,
    /// Largest absolute momentum residual.
    pub residual: f64,
    /// Largest momentum residual relative to the size of the terms.
    pub relative_residual: f64,
    pub divergence: f64,
    /// `|grad E|` on the ray at angle `ray_angle`, at `slope_radii`.
    pub ray_angle: f64,
    pub slope_radii: Vec<f64>,
    pub ray_gradient: Vec<f64>,
    pub ray_slope: f64,
    /// `max_{|z| = r} |grad E|` at the same radii and its slope.
    pub circle_gradient: Vec<f64>,
    pub circle_slope: f64,
}

/// Apply the fourth-order difference Oseen operator (step `spacing / 8`) to
/// the sampled tensor at every patch node outside `core_cells` cells, and fit
/// the decay of `|grad E|` at `|z| = 1, 2, 4, 8` (in units of `1 / lambda`).
pub fn validate_kernel(lambda: f64, patch_half_width: f64, spacing: f64, core_cells: f64, ray_angle: f64) -> Result<KernelValidation> {
    let lattice = Lattice::new(patch_half_width, spacing)?;
    let core_radius = core_cells * lattice.h;
    let delta = lattice.h / 8.0;
    let mut out = KernelValidation {
        lambda,
        patch_half_width,
        spacing: lattice.h,
        core_radius,
        points: 0,
        residual: 0.0,
        relative_residual: 0.0,
        divergence: 0.0,
        ray_angle,
        slope_radii: vec![1.0 / lambda, 2.0 / lambda, 4.0 / lambda, 8.0 / lambda],
        ray_gradient: Vec::new(),
        ray_slope: 0.0,
        circle_gradient: Vec::new(),
        circle_slope: 0.0,
    };
    for z in lattice.points() {
        if z[0].hypot(z[1]) < core_radius {
            continue;
        }
        let r = kernel_residual(z, lambda, delta)?;
        out.points += 1;
        out.residual = out.residual.max(r.momentum);
        out.relative_residual = out.relative_residual.max(r.momentum / r.scale.max(f64::MIN_POSITIVE));
        out.divergence = out.divergence.max(r.divergence);
    }
    let (s, c) = ray_angle.sin_cos();
    for &r in &out.slope_radii {
        out.ray_gradient.push(oseen_tensor([r * c, r * s], lambda)?.gradient_norm());
        let mut m = 0.0f64;
        for j in 0..1440 {
            let t = j as f64 * PI / 720.0;
            m = m.max(oseen_tensor([r * t.cos(), r * t.sin()], lambda)?.gradient_norm());
        }
        out.circle_gradient.push(m);
    }
    out.ray_slope = log_slope(&out.slope_radii, &out.ray_gradient);
    out.circle_slope = log_slope(&out.slope_radii, &out.circle_gradient);
    Ok(out)
}

/// Largest residual accepted away from the origin core.
pub const KERNEL_RESIDUAL_TOLERANCE: f64 = 1e-4;
/// Accepted range of the fitted far-field slope of `|grad E|`.
pub const KERNEL_SLOPE_RANGE: [f64; 2] = [-1.3, -0.9];

/// Reports for a kernel validation: the residual, the slope on the chosen ray
/// and the slope of the sup over circles.
pub fn kernel_reports(v: &KernelValidation) -> Vec<EstimateReport> {
    let digest = Fingerprint::new("oseen_kernel")
        .f64s(&[v.lambda, v.patch_half_width, v.spacing, v.core_radius, v.ray_angle])
        .f64s(&v.ray_gradient)
        .f64s(&v.circle_gradient)
        .f64(v.residual)
        .finish();
    let mid = 0.5 * (KERNEL_SLOPE_RANGE[0] + KERNEL_SLOPE_RANGE[1]);
    let half = 0.5 * (KERNEL_SLOPE_RANGE[1] - KERNEL_SLOPE_RANGE[0]);
    vec![
        EstimateReport::inequality(
            "oseen_kernel_residual",
            "fundamental tensor satisfies the Oseen system away from the origin",
            v.residual,
            KERNEL_RESIDUAL_TOLERANCE,
            0.0,
            digest.clone(),
        )
        .with_detail("relative_residual", v.relative_residual)
        .with_detail("divergence", v.divergence)
        .with_detail("points", v.points as f64),
        EstimateReport::inequality(
            "oseen_kernel_ray_slope",
            "gradient of the fundamental tensor decays like 1/|z| along a ray outside the wake",
            (v.ray_slope - mid).abs(),
            half,
            0.0,
            digest.clone(),
        )
        .with_detail("slope", v.ray_slope)
        .with_detail("angle", v.ray_angle),
        EstimateReport::inequality(
            "oseen_kernel_circle_slope",
            "largest gradient of the fundamental tensor on |z| = r decays like 1/r",
            (v.circle_slope - mid).abs(),
            half,
            0.0,
            digest,
        )
        .with_detail("slope", v.circle_slope),
    ]
}

/// `count` pairs of random fields on `lattice`: sums of smooth bumps inside
/// `B_R` plus a tail proportional to the majorants with a random factor.
pub fn random_pairs(lattice: &Lattice, support_radius: f64, lambda: f64, seed: u64, count: usize) -> Vec<(LatticeField, LatticeField)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let r = support_radius;
    let field = |rng: &mut rand_chacha::ChaCha8Rng| {
        let bumps: Vec<[f64; 5]> = (0..3)
            .map(|_| {
                let (a, t) = (rng.random_range(0.0..0.5 * r), rng.random_range(0.0..2.0 * PI));
                [a * t.cos(), a * t.sin(), rng.random_range(0.2..0.5) * r, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]
            })
            .collect();
        let tail = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
        LatticeField::from_fn(*lattice, move |x, y| {
            let mut u = [0.0, 0.0];
            for b in &bumps {
                let s2 = ((x - b[0]).powi(2) + (y - b[1]).powi(2)) / (b[2] * b[2]);
                if s2 < 1.0 {
                    let w = (1.0 - s2).powi(4);
                    u[0] += b[3] * w;
                    u[1] += b[4] * w;
                }
            }
            let rho = x.hypot(y);
            if rho > 2.0 * r {
                let h = majorant([lambda * x, lambda * y]);
                let fade = ((rho - 2.0 * r) / r).min(1.0);
                u[0] += fade * tail[0] * lambda * h[0];
                u[1] += fade * tail[1] * lambda * h[1];
            }
            (u[0], u[1])
        })
    };
    (0..count).map(|_| (field(&mut rng), field(&mut rng))).collect()
}

/// Report on the fitted `R` exponent of the inner weighted bound.
pub fn inner_exponent_report(lambda: f64, radii: &[f64]) -> Result<EstimateReport> {
    let (exponent, ratios) = inner_weighted_exponent(lambda, radii)?;
    let digest = Fingerprint::new("inner_exponent").f64(lambda).f64s(radii).f64s(&ratios).finish();
    Ok(EstimateReport::inequality(
        "bilinear_inner_exponent",
        "weighted sup of the inner bilinear piece grows like R^(4/5)",
        (exponent - 0.8).abs(),
        0.2,
        0.0,
        digest,
    )
    .with_detail("exponent", exponent))
}

/// A perturbation `w - lambda e_1` that can be evaluated anywhere in its domain.
pub trait Perturbation {
    fn lambda(&self) -> f64;
    fn support_radius(&self) -> f64;
    /// Radius up to which the field is trusted (inside the boundary guard).
    fn extent(&self) -> f64;
    fn eval(&self, x: f64, y: f64) -> [f64; 2];
    fn samples(&self) -> Samples;
}

impl Perturbation for FixedPointSolution {
    fn lambda(&self) -> f64 {
        self.config.lambda
    }
    fn support_radius(&self) -> f64 {
        self.config.force.support_radius
    }
    fn extent(&self) -> f64 {
        GUARD_FRACTION * self.lattice.half_width()
    }
    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        FixedPointSolution::eval(self, x, y)
    }
    fn samples(&self) -> Samples {
        Samples::from_lattice(&self.u)
    }
}

/// A disk solution seen as a perturbation of its far velocity.
pub struct DiskPerturbation<'a> {
    pub solution: &'a Solution,
    ux: ScalarField,
    uy: ScalarField,
}

impl<'a> DiskPerturbation<'a> {
    pub fn new(solution: &'a Solution) -> Self {
        let (ux, uy) = solution.w.cartesian_fields();
        Self { solution, ux, uy }
    }
}

impl Perturbation for DiskPerturbation<'_> {
    fn lambda(&self) -> f64 {
        self.solution.lambda
    }
    fn support_radius(&self) -> f64 {
        self.solution.support_radius
    }
    fn extent(&self) -> f64 {
        GUARD_FRACTION * self.solution.grid.r_out
    }
    fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        let (r, t) = (x.hypot(y), y.atan2(x));
        let far = self.solution.far_velocity;
        [self.ux.eval(r, t) - far.0, self.uy.eval(r, t) - far.1]
    }
    fn samples(&self) -> Samples {
        Samples::from_solution(self.solution)
    }
}

/// Decay of a perturbation outside `B_2R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayLedger {
    pub y_norm: f64,
    pub y_components: [f64; 2],
    pub radii: Vec<f64>,
    /// `|u_1|` on the wake axis `y = 0, x = r`.
    pub wake_u1: Vec<f64>,
    /// `max_{|z| = r} |u_2|`.
    pub circle_u2: Vec<f64>,
    pub slope_u1: f64,
    pub slope_u2: f64,
}

/// Allowed distance of the fitted slopes from the majorant exponents.
pub const SLOPE_TOLERANCE: f64 = 0.25;

/// Weighted sup norm and slope fits over eight radii from `2R` to `r_max`
/// (default: the trusted extent of the field).
pub fn decay_check(p: &dyn Perturbation, r_max: Option<f64>) -> Result<(DecayLedger, Vec<EstimateReport>)> {
    let r0 = 2.0 * p.support_radius();
    let r1 = r_max.unwrap_or(p.extent()).min(p.extent());
    if !(r1 >= 2.0 * r0) {
        return Err(Error::Precondition(format!("field known up to r = {r1:.3}, decay check needs 4R = {:.3}", 2.0 * r0)));
    }
    let norms = norm_ledger(&p.samples(), p.support_radius(), p.lambda());
    let radii: Vec<f64> = (0..8).map(|k| r0 * (r1 / r0).powf(k as f64 / 7.0)).collect();
    let wake_u1: Vec<f64> = radii.iter().map(|&r| p.eval(r, 0.0)[0].abs()).collect();
    let circle_u2: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (0..720).fold(0.0f64, |m, j| {
                let t = j as f64 * PI / 360.0;
                m.max(p.eval(r * t.cos(), r * t.sin())[1].abs())
            })
        })
        .collect();
    let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0);
    let slope_u1 = if positive(&wake_u1) { log_slope(&radii, &wake_u1) } else { f64::NAN };
    let slope_u2 = if positive(&circle_u2) { log_slope(&radii, &circle_u2) } else { f64::NAN };
    let ledger = DecayLedger { y_norm: norms.y_norm, y_components: norms.y_components, radii, wake_u1, circle_u2, slope_u1, slope_u2 };
    let digest = Fingerprint::new("decay")
        .f64s(&ledger.wake_u1)
        .f64s(&ledger.circle_u2)
        .f64(ledger.y_norm)
        .finish();
    let mut reports = vec![EstimateReport::measured(
        "decay_weighted_sup",
        "perturbation bounded by a multiple of the wake majorants outside B_2R",
        norms.y_norm,
        1.0,
        digest.clone(),
    )
    .with_detail("y_u1", norms.y_components[0])
    .with_detail("y_u2", norms.y_components[1])];
    for (name, slope, target) in [
        ("decay_slope_wake_u1", slope_u1, -MAJORANT_EXPONENTS[0]),
        ("decay_slope_circle_u2", slope_u2, -MAJORANT_EXPONENTS[1]),
    ] {
        let rep = if slope.is_finite() {
            EstimateReport::inequality(
                name,
                "fitted decay exponent within the tolerance of the majorant exponent",
                (slope - target).abs(),
                SLOPE_TOLERANCE,
                0.0,
                digest.clone(),
            )
        } else {
            EstimateReport::measured(name, "fitted decay exponent", 0.0, SLOPE_TOLERANCE, digest.clone())
                .with_status(Status::HypothesisNotMet)
        };
        reports.push(rep.with_detail("slope", slope).with_detail("target", target));
    }
    Ok((ledger, reports))
}

/// Largest ratio `max(a/b, b/a)` between two decay ledgers on common radii
/// (the shorter ladder is re-evaluated on the other field).
pub fn compare_decay(a: &dyn Perturbation, b: &dyn Perturbation) -> Result<EstimateReport> {
    let r_max = a.extent().min(b.extent());
    let (la, _) = decay_check(a, Some(r_max))?;
    let (lb, _) = decay_check(b, Some(r_max))?;
    let mut worst = 1.0f64;
    let ratio = |x: f64, y: f64| if x > 0.0 && y > 0.0 { (x / y).max(y / x) } else if x == y { 1.0 } else { f64::INFINITY };
    for k in 0..la.radii.len() {
        worst = worst.max(ratio(la.wake_u1[k], lb.wake_u1[k])).max(ratio(la.circle_u2[k], lb.circle_u2[k]));
    }
    let digest = Fingerprint::new("compare_decay").f64s(&la.wake_u1).f64s(&lb.wake_u1).finish();
    Ok(EstimateReport::inequality(
        "decay_ledger_agreement",
        "decay ledgers of two solvers agree within a factor of two",
        worst,
        2.0,
        0.0,
        digest,
    )
    .with_detail("r_max", r_max))
}

fn weighted_sup(s: &Samples, r_min: f64, lambda: f64) -> f64 {
    let mut m = 0.0f64;
    for k in 0..s.len() {
        let z = s.points[k];
        if z[0].hypot(z[1]) < r_min || !s.guarded[k] {
            continue;
        }
        let h = majorant([lambda * z[0], lambda * z[1]]);
        m = m.max(s.u[k][0].abs() / (lambda * h[0])).max(s.u[k][1].abs() / (lambda * h[1]));
    }
    m
}

fn sup_abs(s: &Samples) -> f64 {
    s.u.iter().fold(0.0f64, |m, u| m.max(u[0].hypot(u[1])))
}

/// Measured constants of the bilinear inequalities for a batch of pairs on one lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearConstants {
    /// `sup_{|z|>=1} |I^inf_i| / h_i` over `||u||_Y ||v||_Y`.
    pub outer_weighted: f64,
    /// `||I^inf||_{L^5(B_2R)}` over `||u||_Y ||v||_Y`.
    pub outer_ball: f64,
    /// `sup |I^R|` over `||u||_{L^5} ||v||_{L^5}`.
    pub inner_pointwise: f64,
    /// `||I^R||_{L^5(B_2R)}` over `||u||_{L^5} ||v||_{L^5} R^{2/5}`.
    pub inner_ball: f64,
    /// `||I^R||_Y` over `||u||_{L^5} ||v||_{L^5} R^{4/5}`.
    pub inner_weighted: f64,
    /// `||I||_X` over `||u||_X (||v||_Y + ||v||_{L^5} R^{4/5})`.
    pub combined: f64,
}

/// Evaluate the bilinear forms on each pair and report the largest ratio per inequality.
pub fn verify_bilinear_bounds(table: &KernelTable, support_radius: f64, pairs: &[(LatticeField, LatticeField)]) -> (BilinearConstants, Vec<EstimateReport>) {
    let lambda = table.lambda;
    let r = support_radius;
    let inner = disk_mask(&table.lattice, 2.0 * r);
    let outer: Vec<bool> = inner.iter().map(|b| !b).collect();
    let mut c = BilinearConstants { outer_weighted: 0.0, outer_ball: 0.0, inner_pointwise: 0.0, inner_ball: 0.0, inner_weighted: 0.0, combined: 0.0 };
    let mut fp = Fingerprint::new("bilinear").f64(lambda).f64(r);
    for (u, v) in pairs {
        fp = fp.f64s(&u.u1).f64s(&u.u2).f64s(&v.u1).f64s(&v.u2);
        let nu = norm_ledger(&Samples::from_lattice(u), r, lambda);
        let nv = norm_ledger(&Samples::from_lattice(v), r, lambda);
        let i_in = Samples::from_lattice(&table.bilinear(u, v, Some(&inner)));
        let i_out = Samples::from_lattice(&table.bilinear(u, v, Some(&outer)));
        let whole = i_in.combine(1.0, &i_out, 1.0);
        let n_in = norm_ledger(&i_in, r, lambda);
        let n_out = norm_ledger(&i_out, r, lambda);
        let n_whole = norm_ledger(&whole, r, lambda);
        let yy = nu.y_norm * nv.y_norm;
        let ll = nu.l5_ball * nv.l5_ball;
        let upd = |m: &mut f64, num: f64, den: f64| {
            if den > 0.0 {
                *m = m.max(num / den);
            }
        };
        upd(&mut c.outer_weighted, weighted_sup(&i_out, 1.0 / lambda, lambda), yy);
        upd(&mut c.outer_ball, n_out.l5_ball, yy);
        upd(&mut c.inner_pointwise, sup_abs(&i_in), ll);
        upd(&mut c.inner_ball, n_in.l5_ball, ll * r.powf(0.4));
        upd(&mut c.inner_weighted, n_in.y_norm, ll * r.powf(0.8));
        upd(&mut c.combined, n_whole.x_norm, nu.x_norm * (nv.y_norm + nv.l5_ball * r.powf(0.8)));
    }
    let digest = fp.finish();
    let reports = [
        ("bilinear_outer_weighted", "weighted sup of the outer bilinear piece against the product of weighted norms", c.outer_weighted),
        ("bilinear_outer_ball", "L5 norm on B_2R of the outer piece against the product of weighted norms", c.outer_ball),
        ("bilinear_inner_pointwise", "pointwise size of the inner piece against the product of L5 norms", c.inner_pointwise),
        ("bilinear_inner_ball", "L5 norm on B_2R of the inner piece against the L5 norms times R^(2/5)", c.inner_ball),
        ("bilinear_inner_weighted", "weighted sup of the inner piece against the L5 norms times R^(4/5)", c.inner_weighted),
        ("bilinear_combined", "X norm of the bilinear form against the mixed norm product", c.combined),
    ]
    .iter()
    .map(|(name, anchor, value)| EstimateReport::measured(name, anchor, *value, 1.0, digest.clone()))
    .collect();
    (c, reports)
}

/// Fitted exponent of `||I^R(u, v)||_Y / (||u||_{L^5} ||v||_{L^5})` in `R` for a
/// fixed pair of bump profiles scaled to support radius `R`.
pub fn inner_weighted_exponent(lambda: f64, radii: &[f64]) -> Result<(f64, Vec<f64>)> {
    let bump = |x: f64, y: f64, r: f64| {
        let s2 = (x * x + y * y) / (r * r);
        if s2 < 1.0 {
            (1.0 - s2).powi(4)
        } else {
            0.0
        }
    };
    let mut ratios = Vec::with_capacity(radii.len());
    for &r in radii {
        let lattice = Lattice::new(8.0 * r, r / 8.0)?;
        let table = KernelTable::new(lattice, lambda)?;
        let u = LatticeField::from_fn(lattice, |x, y| (bump(x, y, r), 0.5 * bump(x - 0.2 * r, y, r)));
        let v = LatticeField::from_fn(lattice, |x, y| (0.3 * bump(x, y + 0.1 * r, r), bump(x, y, r)));
        let inner = disk_mask(&lattice, 2.0 * r);
        let i_in = Samples::from_lattice(&table.bilinear(&u, &v, Some(&inner)));
        let nu = norm_ledger(&Samples::from_lattice(&u), r, lambda);
        let nv = norm_ledger(&Samples::from_lattice(&v), r, lambda);
        ratios.push(norm_ledger(&i_in, r, lambda).y_norm / (nu.l5_ball * nv.l5_ball));
    }
    Ok((log_slope(radii, &ratios), ratios))
}

/// `L^2(B_2R)` size of `a - b` for two perturbations, sampled at the cell
/// centres of `lattice` inside the ball.
pub fn l2_difference(a: &dyn Perturbation, b: &dyn Perturbation, lattice: &Lattice) -> f64 {
    let r = a.support_radius();
    let f = LatticeField::from_fn(*lattice, |x, y| {
        if x.hypot(y) < 2.0 * r {
            let (p, q) = (a.eval(x, y), b.eval(x, y));
            (p[0] - q[0], p[1] - q[1])
        } else {
            (0.0, 0.0)
        }
    });
    l2_ball(&Samples::from_lattice(&f), r)
}

/// Error estimate of an invading-domains solution in `L^2(B_2R)`: the change
/// from the previous disk plus a third of the change from a coarser grid.
pub fn disk_tolerance(run: &InvadingRun, coarse: Option<&Solution>, lattice: &Lattice) -> Result<f64> {
    let n = run.solutions.len();
    if n == 0 {
        return Err(Error::Precondition("run has no completed solve".into()));
    }
    let last = DiskPerturbation::new(&run.solutions[n - 1]);
    let mut tol = 0.0;
    if n >= 2 {
        tol += l2_difference(&last, &DiskPerturbation::new(&run.solutions[n - 2]), lattice);
    }
    if let Some(c) = coarse {
        tol += l2_difference(&last, &DiskPerturbation::new(c), lattice) / 3.0;
    }
    Ok(tol)
}

/// Multiple of the combined tolerances within which the two solutions must agree.
pub const CROSSCHECK_FACTOR: f64 = 10.0;

/// Compare the largest disk solution of an invading run with a fixed-point
/// solution at the same parameters.
pub fn uniqueness_crosscheck(
    run: &InvadingRun,
    coarse: Option<&Solution>,
    fixed_point: std::result::Result<&FixedPointSolution, &Error>,
) -> Result<EstimateReport> {
    let fp = match fixed_point {
        Ok(fp) => fp,
        Err(e @ (Error::Divergence { .. } | Error::NonConvergence { .. })) => {
            let digest = Fingerprint::new("crosscheck").str(&e.to_string()).finish();
            return Ok(EstimateReport::measured(
                "uniqueness_crosscheck",
                "disk and fixed-point solutions coincide in the small-data regime",
                0.0,
                0.0,
                digest,
            )
            .with_status(Status::NotApplicable));
        }
        Err(e) => return Err(e.clone()),
    };
    let n = run.solutions.len();
    if n == 0 {
        return Err(Error::Precondition("run has no completed solve".into()));
    }
    if (run.lambda() - fp.config.lambda).abs() > 1e-12 * run.lambda().max(1.0) || run.config.problem.force != fp.config.force {
        return Err(Error::Config("invading run and fixed-point solution have different parameters".into()));
    }
    let disk = DiskPerturbation::new(&run.solutions[n - 1]);
    let lattice = fp.lattice;
    let diff = l2_difference(&disk, fp, &lattice);
    let tol_disk = disk_tolerance(run, coarse, &lattice)?;
    let tol_fp = fp.tolerance();
    // X norm of the difference over the lattice (the disk covers the lattice guard)
    let r = fp.config.force.support_radius;
    let samples = fp.samples();
    let d_samples = Samples {
        u: samples.points.iter().zip(&samples.u).map(|(z, u)| {
            let w = disk.eval(z[0], z[1]);
            [w[0] - u[0], w[1] - u[1]]
        }).collect(),
        ..samples.clone()
    };
    let x_diff = norm_ledger(&d_samples, r, fp.config.lambda).x_norm;
    let digest = Fingerprint::new("crosscheck").f64(diff).f64(tol_disk).f64(tol_fp).f64(x_diff).finish();
    Ok(EstimateReport::inequality(
        "uniqueness_crosscheck",
        "disk and fixed-point solutions coincide in the small-data regime",
        diff,
        CROSSCHECK_FACTOR * (tol_disk + tol_fp),
        0.0,
        digest,
    )
    .with_detail("disk_tolerance", tol_disk)
    .with_detail("fixed_point_tolerance", tol_fp)
    .with_detail("x_norm_difference", x_diff)
    .with_detail("perturbation_l2", l2_ball(&samples, r))
    .with_detail("contraction", fp.contraction)
    .with_detail("hypothesis_ratio", fp.hypothesis_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_slope_of_a_power() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.7)).collect();
        assert!((log_slope(&x, &y) + 0.7).abs() < 1e-13);
    }

    #[test]
    fn kernel_residual_is_small_outside_the_core() {
        let v = validate_kernel(1.0, 1.0, 0.1, 3.0, PI).unwrap();
        assert!(v.points > 300);
        assert!(v.residual < 1e-4 && v.relative_residual < 1e-6, "{v:?}");
        assert!(v.divergence < 1e-4);
        // the sup over each circle decays like 1/|z|
        assert!((v.circle_slope + 1.0).abs() < 0.15, "{}", v.circle_slope);
    }

    #[test]
    fn zero_perturbation_has_zero_decay_norm() {
        let l = Lattice::new(8.0, 0.25).unwrap();
        let fp = crate::oseen::fixed_point_solve(&crate::oseen::FixedPointConfig {
            half_width: 8.0,
            spacing: 0.25,
            estimate_error: false,
            ..crate::oseen::FixedPointConfig::new(1.0, crate::forcing::ForceSpec::new(crate::forcing::ForceFamily::None, 1.0, 0.0))
        })
        .unwrap();
        assert_eq!(fp.lattice, l);
        let (ledger, reports) = decay_check(&fp, None).unwrap();
        assert_eq!(ledger.y_norm, 0.0);
        assert_eq!(reports[0].lhs, 0.0);
        assert!(reports[1..].iter().all(|r| r.status == Status::HypothesisNotMet));
    }

    #[test]
    fn random_pairs_are_reproducible() {
        let l = Lattice::new(4.0, 0.25).unwrap();
        let a = random_pairs(&l, 1.0, 1.0, 5, 2);
        let b = random_pairs(&l, 1.0, 1.0, 5, 2);
        assert_eq!(a[1].0.u1, b[1].0.u1);
        assert_ne!(a[0].0.u1, a[1].0.u1);
        let t = KernelTable::new(l, 1.0).unwrap();
        let (c, _) = verify_bilinear_bounds(&t, 1.0, &a);
        assert!(c.combined.is_finite() && c.combined > 0.0);
    }

    #[test]
    fn inner_exponent_is_near_four_fifths() {
        let rep = inner_exponent_report(1.0, &[1.0, 2.0, 4.0]).unwrap();
        assert_eq!(rep.status, Status::Pass, "{rep:?}");
    }

    #[test]
    fn zero_pair_has_zero_constants() {
        let l = Lattice::new(4.0, 0.25).unwrap();
        let t = KernelTable::new(l, 1.0).unwrap();
        let z = LatticeField::zeros(l);
        let (c, reports) = verify_bilinear_bounds(&t, 1.0, &[(z.clone(), z)]);
        assert_eq!(c.combined, 0.0);
        assert!(reports.iter().all(|r| r.lhs == 0.0));
    }

    #[test]
    fn majorant_pair_gives_finite_constants() {
        let l = Lattice::new(6.0, 0.25).unwrap();
        let t = KernelTable::new(l, 1.0).unwrap();
        let m = LatticeField::from_fn(l, |x, y| {
            let h = majorant([x, y]);
            (h[0], h[1])
        });
        let (c, _) = verify_bilinear_bounds(&t, 1.0, &[(m.clone(), m)]);
        for v in [c.outer_weighted, c.outer_ball, c.inner_pointwise, c.inner_ball, c.inner_weighted, c.combined] {
            assert!(v.is_finite() && v > 0.0, "{c:?}");
        }
    }
}
