//! Executable versions of the a-priori inequalities for plane
//! Navier–Stokes flows, evaluated on computed fields.
//!
//! Inequalities with explicit constants get a pass/fail verdict with a
//! relative slack (default 10%). Inequalities with unspecified universal
//! constants are reported as measured ratios; their boundedness is judged
//! across sweeps by the caller.

pub mod report;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use report::{safe_ratio, EstimateReport, Fingerprint, Status};

use crate::error::{Error, Result};
use crate::field::{line_integral_min, ring_means, CircleMean, ScalarField, VectorField};
use crate::invading::{InvadingRun, LimitEstimate, TailEstimate};
use crate::nse::{bernoulli, Solution};
use crate::operators::{dirichlet_integral, gradient, grad_norm_sq, scalar_dirichlet_integral};

/// Default slack for inequalities with explicit constants.
pub const EXPLICIT_SLACK: f64 = 0.1;

fn solution_digest(sol: &Solution, tag: &str, params: &[f64]) -> String {
    Fingerprint::new(tag)
        .f64s(&sol.psi.values)
        .f64s(&sol.omega.values)
        .f64s(&sol.p.values)
        .f64s(params)
        .finish()
}

/// Zero when `v` is at rounding level relative to `scale`.
fn above_rounding(v: f64, scale: f64) -> f64 {
    if v.abs() <= 64.0 * f64::EPSILON * scale.abs() {
        0.0
    } else {
        v
    }
}

fn check_annulus(r1: f64, r2: f64, r_out: f64) -> Result<()> {
    if !(r1 > 0.0 && r1 < r2 && r2 <= r_out * (1.0 + 1e-12)) {
        return Err(Error::Range(format!("annulus ({r1}, {r2}) is not inside (0, {r_out}]")));
    }
    Ok(())
}

/// Whether the force vanishes at every node of `r1 - h <= r <= r2`.
pub fn force_vanishes(f: &VectorField, r1: f64, r2: f64) -> bool {
    let g = &f.grid;
    let scale = f.max_abs();
    if scale == 0.0 {
        return true;
    }
    let i0 = g.interval(r1.min(g.r_out)).saturating_sub(1);
    (i0..g.n_r).filter(|&i| g.radii[i] <= r2 * (1.0 + 1e-12)).all(|i| {
        (0..g.n_theta).all(|j| {
            let k = g.idx(i, j);
            f.u_r[k].hypot(f.u_theta[k]) <= 1e-14 * scale
        })
    })
}

/// Radii for sampling an annulus: the endpoints and every node in between.
fn annulus_samples(f_grid: &crate::grid::PolarGrid, r1: f64, r2: f64) -> Vec<f64> {
    let mut rs = vec![r1];
    rs.extend(f_grid.radii.iter().copied().filter(|&r| r > r1 && r < r2));
    rs.push(r2);
    rs
}

/// Continuous branch of a sequence of angles by nearest-branch selection.
/// `None` if any angle is undefined.
pub fn unwrap_angles(angles: &[Option<f64>]) -> Option<Vec<f64>> {
    let mut out: Vec<f64> = Vec::with_capacity(angles.len());
    for a in angles {
        let a = (*a)?;
        let v = match out.last() {
            None => a,
            Some(&prev) => a + 2.0 * PI * ((prev - a) / (2.0 * PI)).round(),
        };
        out.push(v);
    }
    Some(out)
}

/// Circle-mean data on an annulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDiagnostics {
    pub r1: f64,
    pub r2: f64,
    pub mean_inner: CircleMean,
    pub mean_outer: CircleMean,
    /// Smallest and largest `|mean w(r)|` over the sampled radii.
    pub speed_min: f64,
    pub speed_max: f64,
    /// `max(|mean w(r1)|, |mean w(r2)|)`.
    pub m: f64,
    /// `1 / (r1 m)`; infinite when `m = 0`.
    pub mu: f64,
    pub dirichlet: f64,
    pub pressure_inner: f64,
    pub pressure_outer: f64,
    /// Unwrapped arguments of the circle means at `r1` and `r2` (`None` if a mean vanishes).
    pub angle_inner: Option<f64>,
    pub angle_outer: Option<f64>,
}

pub fn annulus_diagnostics(sol: &Solution, r1: f64, r2: f64) -> Result<AnnulusDiagnostics> {
    check_annulus(r1, r2, sol.grid.r_out)?;
    let rs = annulus_samples(&sol.grid, r1, r2);
    let means = sol.w.circle_averages(&rs)?;
    let (mi, mo) = (means[0], means[means.len() - 1]);
    let speed_min = means.iter().fold(f64::INFINITY, |m, c| m.min(c.modulus));
    let speed_max = means.iter().fold(0.0f64, |m, c| m.max(c.modulus));
    let m = mi.modulus.max(mo.modulus);
    let angles = unwrap_angles(&means.iter().map(|c| c.angle).collect::<Vec<_>>());
    Ok(AnnulusDiagnostics {
        r1,
        r2,
        mean_inner: mi,
        mean_outer: mo,
        speed_min,
        speed_max,
        m,
        mu: if m > 0.0 { 1.0 / (r1 * m) } else { f64::INFINITY },
        dirichlet: dirichlet_integral(&sol.w, r1, r2)?,
        pressure_inner: sol.p.circle_average(r1)?,
        pressure_outer: sol.p.circle_average(r2)?,
        angle_inner: angles.as_ref().map(|a| a[0]),
        angle_outer: angles.as_ref().map(|a| a[a.len() - 1]),
    })
}

/// `|mean phi(rho2) - mean phi(rho1)| <= (2 pi)^{-1/2} (int |grad phi|^2)^{1/2} ln^{1/2}(rho2 / rho1)`.
pub fn check_log_mean(phi: &ScalarField, rho1: f64, rho2: f64) -> Result<EstimateReport> {
    check_annulus(rho1, rho2, phi.grid.r_out)?;
    let lhs = above_rounding((phi.circle_average(rho2)? - phi.circle_average(rho1)?).abs(), phi.max_abs());
    let d = scalar_dirichlet_integral(phi, rho1, rho2)?;
    let rhs = (d / (2.0 * PI)).sqrt() * (rho2 / rho1).ln().sqrt();
    let digest = Fingerprint::new("log_mean").f64s(&phi.values).f64(rho1).f64(rho2).finish();
    Ok(EstimateReport::inequality(
        "log_mean",
        "difference of circle means bounded by the Dirichlet integral times the log of the radius ratio",
        lhs,
        rhs,
        EXPLICIT_SLACK,
        digest,
    )
    .with_detail("dirichlet", d))
}

/// `|mean p(rho2) - mean p(rho1)| <= D(rho1, rho2) / (4 pi)` on a force-free annulus.
pub fn check_pressure_mean(sol: &Solution, rho1: f64, rho2: f64) -> Result<EstimateReport> {
    check_annulus(rho1, rho2, sol.grid.r_out)?;
    // pressure differences are measured against the dynamic pressure
    let (wx, wy) = sol.w.to_cartesian();
    let w_max = wx.iter().zip(&wy).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
    let scale = sol.p.max_abs().max(0.5 * w_max * w_max);
    let lhs = above_rounding((sol.p.circle_average(rho2)? - sol.p.circle_average(rho1)?).abs(), scale);
    let d = dirichlet_integral(&sol.w, rho1, rho2)?;
    let rep = EstimateReport::inequality(
        "pressure_mean",
        "difference of pressure circle means bounded by the Dirichlet integral over 4 pi",
        lhs,
        d / (4.0 * PI),
        EXPLICIT_SLACK,
        solution_digest(sol, "pressure_mean", &[rho1, rho2]),
    );
    Ok(if force_vanishes(&sol.force, rho1, rho2) { rep } else { rep.with_status(Status::NotApplicable) })
}

/// Variation of the argument of the circle mean against
/// `(4 pi sigma^2)^{-1} int (|grad omega| / r + |grad w|^2)`.
pub fn check_angle_field(w: &VectorField, rho1: f64, rho2: f64, digest: String) -> Result<EstimateReport> {
    check_annulus(rho1, rho2, w.grid.r_out)?;
    let g = &w.grid;
    let rs = annulus_samples(g, rho1, rho2);
    let means = w.circle_averages(&rs)?;
    let sigma = means.iter().fold(f64::INFINITY, |m, c| m.min(c.modulus));
    let omega = crate::operators::curl2d(w);
    let go = gradient(&omega);
    let gw = grad_norm_sq(w);
    let integrand: Vec<f64> = (0..g.len())
        .map(|k| {
            let r = g.radii[k / g.n_theta];
            go.u_r[k].hypot(go.u_theta[k]) / r + gw.values[k]
        })
        .collect();
    let integral = ScalarField { grid: g.clone(), values: integrand }.annulus_integral(rho1, rho2)?;
    let scale = means.iter().fold(0.0f64, |m, c| m.max(c.modulus));
    let unwrapped = unwrap_angles(&means.iter().map(|c| c.angle).collect::<Vec<_>>());
    match unwrapped {
        Some(a) if sigma > 1e-10 * scale.max(f64::MIN_POSITIVE) => {
            let lhs = above_rounding((a[a.len() - 1] - a[0]).abs(), 2.0 * PI + a[0].abs());
            let rhs = integral / (4.0 * PI * sigma * sigma);
            Ok(EstimateReport::inequality(
                "angle",
                "variation of the argument of the circle-mean velocity bounded by vorticity-gradient and Dirichlet integrals",
                lhs,
                rhs,
                EXPLICIT_SLACK,
                digest,
            )
            .with_detail("sigma", sigma)
            .with_detail("angle_inner", a[0])
            .with_detail("angle_outer", a[a.len() - 1]))
        }
        _ => Ok(EstimateReport::measured("angle", "argument of the circle-mean velocity", 0.0, 0.0, digest)
            .with_status(Status::HypothesisNotMet)
            .with_detail("sigma", sigma)),
    }
}

pub fn check_angle(sol: &Solution, rho1: f64, rho2: f64) -> Result<EstimateReport> {
    let rep = check_angle_field(&sol.w, rho1, rho2, solution_digest(sol, "angle", &[rho1, rho2]))?;
    Ok(if rep.status != Status::HypothesisNotMet && !force_vanishes(&sol.force, rho1, rho2) {
        rep.with_status(Status::NotApplicable)
    } else {
        rep
    })
}

/// Empirical constant of `|mean w(r1) - mean w(r2)| <= C (1 + mu) D(r1, r2)^{1/2}`.
pub fn check_basic_estimate1(sol: &Solution, r1: f64, r2: f64) -> Result<EstimateReport> {
    let a = annulus_diagnostics(sol, r1, r2)?;
    let lhs = above_rounding((a.mean_inner.w1 - a.mean_outer.w1).hypot(a.mean_inner.w2 - a.mean_outer.w2), a.speed_max);
    let digest = solution_digest(sol, "basic_estimate_velocity", &[r1, r2]);
    let anchor = "difference of circle-mean velocities bounded by C (1 + mu) sqrt(D) with mu = 1 / (r1 m)";
    let scale = a.speed_max.max(f64::MIN_POSITIVE);
    if a.m <= 0.0 {
        return Ok(EstimateReport::measured("basic_estimate_velocity", anchor, lhs, 0.0, digest)
            .with_status(Status::HypothesisNotMet));
    }
    let rhs = (1.0 + a.mu) * a.dirichlet.sqrt();
    let rep = if a.dirichlet == 0.0 && lhs <= 1e-12 * scale {
        EstimateReport::measured("basic_estimate_velocity", anchor, 0.0, 0.0, digest)
    } else {
        EstimateReport::measured("basic_estimate_velocity", anchor, lhs, rhs, digest)
    };
    let rep = rep.with_detail("m", a.m).with_detail("mu", a.mu).with_detail("dirichlet", a.dirichlet);
    Ok(if rep.status != Status::Anomaly && !force_vanishes(&sol.force, r1, r2) {
        rep.with_status(Status::NotApplicable)
    } else {
        rep
    })
}

/// The largest empirical constant over consecutive annuli of a radius ladder.
pub fn basic_estimate1_ladder(sol: &Solution, radii: &[f64]) -> Result<EstimateReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition("ladder needs at least two radii".into()));
    }
    let reps = radii.windows(2).map(|w| check_basic_estimate1(sol, w[0], w[1])).collect::<Result<Vec<_>>>()?;
    let worst = reps
        .iter()
        .filter(|r| r.status == Status::Measured || r.status == Status::Anomaly)
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .cloned()
        .unwrap_or_else(|| reps[0].clone());
    let mut out = worst;
    out.name = "basic_estimate_velocity_ladder".into();
    if reps.iter().any(|r| r.status == Status::Anomaly) {
        out.status = Status::Anomaly;
    }
    Ok(out)
}

/// Empirical constant of `|w0 - w_inf| <= C D* / m`, `m = max(|w0|, |w_inf|)`.
pub fn check_basic_estimate2(run: &InvadingRun, limit: &LimitEstimate, tail: &TailEstimate) -> EstimateReport {
    let far = run.far_velocity();
    let dev = (limit.w0[0] - far[0]).hypot(limit.w0[1] - far[1]);
    let m = limit.modulus().max(far[0].hypot(far[1]));
    let lhs = dev * m;
    let digest = Fingerprint::new("basic_estimate_limit")
        .f64s(&limit.w0)
        .f64(limit.uncertainty)
        .f64(tail.value)
        .f64(tail.uncertainty)
        .f64s(&far)
        .finish();
    let rep = EstimateReport::measured(
        "basic_estimate_limit",
        "distance between the limit velocity and the prescribed one bounded by C times the escaping tail energy over m",
        lhs,
        tail.value,
        digest,
    )
    .with_detail("m", m)
    .with_detail("tail_energy", tail.value)
    .with_detail("tail_uncertainty", tail.uncertainty);
    if m <= limit.uncertainty {
        rep.with_status(Status::HypothesisNotMet)
    } else if lhs == 0.0 {
        rep.with_status(Status::Pass)
    } else if tail.value <= tail.uncertainty {
        rep.with_status(Status::Inconclusive)
    } else {
        rep
    }
}

/// A circle whose line integral obeys the mean-value bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodCircle {
    pub radius: f64,
    pub line_integral: f64,
    /// `int_{r0 < |z| < beta r0} g`.
    pub annulus_integral: f64,
    /// `M / ((beta - 1) r0)`.
    pub bound: f64,
}

impl GoodCircle {
    pub fn holds(&self) -> bool {
        self.line_integral <= self.bound + 1e-12 * self.bound.abs().max(f64::MIN_POSITIVE)
    }
}

/// Circle in `[r0, beta r0]` minimizing the line integral of `g >= 0`.
///
/// Line and annulus integrals share one piecewise-cubic radial
/// reconstruction, so the minimum is at most the radial mean and the bound
/// holds for every nonnegative discrete field up to rounding.
pub fn good_circle(g: &ScalarField, r0: f64, beta: f64) -> Result<GoodCircle> {
    if !(beta > 1.0) {
        return Err(Error::Config(format!("beta = {beta} must exceed 1")));
    }
    let r1 = beta * r0;
    check_annulus(r0, r1, g.grid.r_out)?;
    let grid = &g.grid;
    let lo = grid.interval(r0.min(grid.r_out)).saturating_sub(1);
    let min_val = (lo..grid.n_r)
        .filter(|&i| grid.radii[i] <= r1 * (1.0 + 1e-12))
        .flat_map(|i| g.ring(i).iter().copied())
        .fold(f64::INFINITY, f64::min);
    if min_val < -1e-12 {
        return Err(Error::Precondition(format!("good-circle density is negative ({min_val:e})")));
    }
    let means = ring_means(grid, &g.values);
    let m = g.annulus_integral(r0, r1)?;
    let (radius, line) = line_integral_min(grid, &means, r0, r1);
    Ok(GoodCircle { radius, line_integral: line, annulus_integral: m, bound: m / ((beta - 1.0) * r0) })
}

/// Random nonnegative density on `grid`: the square of a few random Fourier
/// modes times random radial bumps, plus an occasional thin ring.
pub fn random_density(grid: &std::sync::Arc<crate::grid::PolarGrid>, rng: &mut rand_chacha::ChaCha8Rng) -> ScalarField {
    use rand::Rng;
    let r_out = grid.r_out;
    let terms: Vec<[f64; 5]> = (0..rng.random_range(1..5))
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(0..6) as f64,
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.0..r_out),
                rng.random_range(0.02..0.5) * r_out,
            ]
        })
        .collect();
    let ring = rng.random_bool(0.3).then(|| (rng.random_range(0.0..r_out), rng.random_range(0.005..0.05) * r_out));
    ScalarField::from_polar_fn(grid.clone(), move |r, t| {
        let a: f64 = terms.iter().map(|c| c[0] * (c[1] * t + c[2]).cos() * (-((r - c[3]) / c[4]).powi(2)).exp()).sum();
        let b = ring.map_or(0.0, |(c, w)| (-((r - c) / w).powi(2)).exp());
        a * a + b
    })
}

/// Mean-value bound on `count` random nonnegative fields from `seed`; the
/// report's left side is the largest `line integral / bound`.
pub fn good_circle_suite(seed: u64, count: usize) -> Result<EstimateReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let grid = std::sync::Arc::new(crate::grid::PolarGrid::new(96, 32, 8.0, 1.01)?);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut fp = Fingerprint::new("good_circle_suite").f64(seed as f64).f64(count as f64);
    for _ in 0..count {
        let g = random_density(&grid, &mut rng);
        let r0: f64 = rng.random_range(0.2..3.0);
        let beta = rng.random_range(1.1..(8.0 / r0).min(4.0));
        let c = good_circle(&g, r0, beta)?;
        if !c.holds() {
            failures += 1;
        }
        // densities that underflow on the whole annulus have a zero bound
        let ratio = if c.bound > 0.0 { c.line_integral / c.bound } else if c.holds() { 0.0 } else { f64::MAX };
        worst = worst.max(ratio);
        fp = fp.f64(c.line_integral).f64(c.bound);
    }
    Ok(EstimateReport::inequality(
        "good_circle_random",
        "some circle in [r0, beta r0] carries at most the radial mean of a nonnegative density",
        worst,
        1.0,
        0.0,
        fp.finish(),
    )
    .with_detail("fields", count as f64)
    .with_detail("failures", failures as f64))
}

/// Pair of radii with small vorticity-squared circle integrals and
/// controlled one-sided derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodRadii {
    pub rho: f64,
    pub rho1: f64,
    pub rho2: f64,
    /// Which construction produced each radius: 1 = edge of the low set, 2 = mean value.
    pub case_inner: u8,
    pub case_outer: u8,
    /// `D(rho, 5 rho)`.
    pub dirichlet: f64,
    pub certificates: Vec<EstimateReport>,
}

impl GoodRadii {
    pub fn all_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.status == Status::Pass)
    }
}

/// Samples per unit `rho` of the profile on `[rho, 5 rho]`.
const PROFILE_SAMPLES: usize = 480;

/// Replay the good-radii construction on a sampled profile `f(r) >= 0` of
/// circle integrals of `omega^2` on `[rho, 5 rho]`.
///
/// With the threshold `8 D / rho`: a low point in `[rho, 4 rho / 3]` exists by
/// Chebyshev's inequality. The inner radius is the last low point before
/// `2 rho` when that is not `2 rho` itself (then `f` rises there); otherwise
/// a discrete mean-value step between the two low points gives slope at
/// least the secant, bounded below by `-12 D / rho^2`. The outer radius
/// mirrors this on `[4 rho, 5 rho]`. Derivatives are one-sided differences
/// on the sampling lattice.
pub fn good_radii_from_profile(profile: &[f64], rho: f64, dirichlet: f64, digest: &str) -> Result<GoodRadii> {
    let n = profile.len() - 1;
    if !n.is_multiple_of(12) || n == 0 {
        return Err(Error::Config("profile needs 12 j + 1 samples".into()));
    }
    let h = 4.0 * rho / n as f64;
    let r = |i: usize| rho + h * i as f64;
    let thr = 8.0 * dirichlet / rho;
    let dthr = 12.0 * dirichlet / (rho * rho);
    let low = |i: usize| profile[i] <= thr;
    let i_43 = n / 12; // 4 rho / 3
    let i_2 = n / 4; // 2 rho
    let i_4 = 3 * n / 4; // 4 rho
    let i_143 = 11 * n / 12; // 14 rho / 3
    let t1 = (0..=i_43).find(|&i| low(i));
    let t2 = (i_143..=n).rev().find(|&i| low(i));
    let mk = |name: &str, anchor: &str, lhs: f64, rhs: f64, extra: &str| {
        EstimateReport::inequality(name, anchor, lhs, rhs, EXPLICIT_SLACK, format!("{digest}:{extra}"))
    };
    let integral = profile.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum::<f64>();
    let mut certs = vec![mk(
        "good_radii_chebyshev",
        "radial integral of the vorticity-squared circle integrals bounded by twice the Dirichlet integral",
        integral,
        2.0 * dirichlet,
        "chebyshev",
    )];
    let (Some(t1), Some(t2)) = (t1, t2) else {
        certs.push(
            mk("good_radii_low_set", "low set meets both end intervals", 1.0, 0.0, "low_set")
                .with_status(Status::Anomaly),
        );
        return Ok(GoodRadii { rho, rho1: rho, rho2: 5.0 * rho, case_inner: 0, case_outer: 0, dirichlet, certificates: certs });
    };
    // inner radius
    let tau1 = (t1..=i_2).rev().find(|&i| low(i)).expect("t1 is low");
    let (i1, case_inner) = if tau1 < i_2 {
        (tau1, 1u8)
    } else {
        let secant = (profile[tau1] - profile[t1]) / (r(tau1) - r(t1));
        let cands: Vec<usize> = (t1..tau1).filter(|&i| (profile[i + 1] - profile[i]) / h >= secant).collect();
        let pick = cands.iter().copied().find(|&i| low(i)).or_else(|| cands.first().copied()).unwrap_or(t1);
        (pick, 2u8)
    };
    let slope1 = (profile[i1 + 1] - profile[i1]) / h;
    // outer radius
    let tau2 = (i_4..=t2).find(|&i| low(i)).expect("t2 is low");
    let (i2, case_outer) = if tau2 > i_4 {
        (tau2, 1u8)
    } else {
        let secant = (profile[t2] - profile[tau2]) / (r(t2) - r(tau2));
        let cands: Vec<usize> = (tau2 + 1..=t2).filter(|&i| (profile[i] - profile[i - 1]) / h <= secant).collect();
        let pick = cands.iter().copied().find(|&i| low(i)).or_else(|| cands.first().copied()).unwrap_or(t2);
        (pick, 2u8)
    };
    let slope2 = (profile[i2] - profile[i2 - 1]) / h;
    certs.push(mk(
        "good_radii_inner_value",
        "vorticity-squared circle integral at the inner radius at most 8 D / rho",
        profile[i1],
        thr,
        "inner_value",
    ));
    certs.push(mk(
        "good_radii_inner_slope",
        "minus the radial derivative at the inner radius at most 12 D / rho^2",
        (-slope1).max(0.0),
        dthr,
        "inner_slope",
    ));
    certs.push(mk(
        "good_radii_outer_value",
        "vorticity-squared circle integral at the outer radius at most 8 D / rho",
        profile[i2],
        thr,
        "outer_value",
    ));
    certs.push(mk(
        "good_radii_outer_slope",
        "radial derivative at the outer radius at most 12 D / rho^2",
        slope2.max(0.0),
        dthr,
        "outer_slope",
    ));
    Ok(GoodRadii { rho, rho1: r(i1), rho2: r(i2), case_inner, case_outer, dirichlet, certificates: certs })
}

/// Good radii for the vorticity of a solution on `[rho, 5 rho]`.
pub fn good_radii_vorticity(sol: &Solution, rho: f64) -> Result<GoodRadii> {
    check_annulus(rho, 5.0 * rho, sol.grid.r_out)?;
    let om2 = sol.omega.map(|v| v * v);
    let means = om2.ring_means();
    let n = PROFILE_SAMPLES;
    let profile = (0..=n)
        .map(|i| {
            let r = rho + 4.0 * rho * i as f64 / n as f64;
            crate::field::line_integral_of_means(&sol.grid, &means, r).map(|v| v.max(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let d = dirichlet_integral(&sol.w, rho, 5.0 * rho)?;
    let digest = solution_digest(sol, "good_radii", &[rho]);
    good_radii_from_profile(&profile, rho, d, &digest)
}

/// Empirical constants of the local bound `int_{2 rho..4 rho} |grad omega|^2 <= C m D(rho, 5 rho) (1 + mu) / rho`
/// and the weighted form `int_{2 rho..4 rho} r |grad omega|^2 <= C m D(rho, 5 rho) (1 + mu)`.
pub fn check_vorticity_gradient(sol: &Solution, rho: f64) -> Result<Vec<EstimateReport>> {
    let a = annulus_diagnostics(sol, rho, 5.0 * rho)?;
    let g = &sol.grid;
    let go = gradient(&sol.omega);
    let sq: Vec<f64> = go.u_r.iter().zip(&go.u_theta).map(|(x, y)| x * x + y * y).collect();
    let weighted: Vec<f64> = sq.iter().enumerate().map(|(k, v)| v * g.radii[k / g.n_theta]).collect();
    let local = ScalarField { grid: g.clone(), values: sq }.annulus_integral(2.0 * rho, 4.0 * rho)?;
    let wsum = ScalarField { grid: g.clone(), values: weighted }.annulus_integral(2.0 * rho, 4.0 * rho)?;
    let base = a.m * a.dirichlet * (1.0 + a.mu);
    let applicable = force_vanishes(&sol.force, rho, 5.0 * rho);
    let digest = solution_digest(sol, "vorticity_gradient", &[rho]);
    let reps = vec![
        EstimateReport::measured(
            "vorticity_gradient_local",
            "vorticity gradient on the middle annulus bounded by C m D (1 + mu) / rho",
            local,
            base / rho,
            digest.clone(),
        ),
        EstimateReport::measured(
            "vorticity_gradient_weighted",
            "radially weighted vorticity gradient bounded by C m D (1 + mu)",
            wsum,
            base,
            digest,
        ),
    ];
    Ok(reps
        .into_iter()
        .map(|r| if applicable || r.status == Status::Anomaly { r } else { r.with_status(Status::NotApplicable) })
        .collect())
}

/// One-sided maximum principle for the Bernoulli pressure on a force-free annulus.
///
/// Values are shifted by the annulus minimum of `Phi` so the comparison is
/// between nonnegative numbers: `max_interior - min <= (max_boundary - min) (1 + slack)`.
pub fn check_bernoulli_max(sol: &Solution, r1: f64, r2: f64, slack: f64) -> Result<EstimateReport> {
    let phi = bernoulli(sol);
    let digest = solution_digest(sol, "bernoulli_max", &[r1, r2, slack]);
    let rep = bernoulli_max_of(&phi, r1, r2, slack, digest)?;
    Ok(if force_vanishes(&sol.force, r1, r2) { rep } else { rep.with_status(Status::NotApplicable) })
}

pub fn bernoulli_max_of(phi: &ScalarField, r1: f64, r2: f64, slack: f64, digest: String) -> Result<EstimateReport> {
    check_annulus(r1, r2, phi.grid.r_out)?;
    let g = &phi.grid;
    let inner = phi.circle_values(r1)?;
    let outer = phi.circle_values(r2)?;
    let interior: Vec<f64> = (0..g.n_r)
        .filter(|&i| g.radii[i] > r1 && g.radii[i] < r2)
        .flat_map(|i| phi.ring(i).iter().copied())
        .collect();
    let bmax = inner.iter().chain(&outer).cloned().fold(f64::NEG_INFINITY, f64::max);
    let imax = interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = inner.iter().chain(&outer).chain(&interior).cloned().fold(f64::INFINITY, f64::min);
    // an interior excess at rounding level of the field is not counted
    let floor = 1e-12 * phi.max_abs();
    let lhs = if interior.is_empty() {
        0.0
    } else if imax <= bmax + floor {
        (imax - lo).min(bmax - lo)
    } else {
        imax - lo
    };
    Ok(EstimateReport::inequality(
        "bernoulli_max",
        "interior maximum of the Bernoulli pressure bounded by its maximum on the two boundary circles",
        lhs,
        bmax - lo,
        slack,
        digest,
    )
    .with_detail("interior_max", imax)
    .with_detail("boundary_max", bmax))
}

/// Oscillation of the pressure on a far annulus against `D(r1, r2)`, with
/// the pressure normalized to zero circle mean at `r1`.
pub fn check_blowdown_pressure(sol: &Solution, r1: f64, r2: f64) -> Result<EstimateReport> {
    check_annulus(r1, r2, sol.grid.r_out)?;
    let g = &sol.grid;
    let shift = sol.p.circle_average(r1)?;
    let mut vals: Vec<f64> = sol.p.circle_values(r1)?;
    vals.extend(sol.p.circle_values(r2)?);
    for i in 0..g.n_r {
        if g.radii[i] > r1 && g.radii[i] < r2 {
            vals.extend_from_slice(sol.p.ring(i));
        }
    }
    let hi = vals.iter().map(|v| v - shift).fold(f64::NEG_INFINITY, f64::max);
    let lo = vals.iter().map(|v| v - shift).fold(f64::INFINITY, f64::min);
    let d = dirichlet_integral(&sol.w, r1, r2)?;
    let rep = EstimateReport::measured(
        "blowdown_pressure",
        "pressure oscillation on a far annulus bounded by C times its Dirichlet integral",
        hi - lo,
        d,
        solution_digest(sol, "blowdown_pressure", &[r1, r2]),
    )
    .with_detail("sup_abs_normalized", hi.abs().max(lo.abs()));
    let applicable = force_vanishes(&sol.force, r1, r2) && r1 >= 4.0 * sol.support_radius * (1.0 - 1e-12);
    Ok(if !applicable {
        rep.with_status(Status::NotApplicable)
    } else if sol.lambda == 0.0 && rep.status != Status::Anomaly {
        rep.with_detail("zero_far_speed", 1.0)
    } else {
        rep
    })
}

/// Fraction of the disk radius beyond which the outer boundary closure
/// dominates the discretization error; diagnostics stay inside it.
pub const INNER_FRACTION: f64 = 0.8;

/// Annuli `[2R 2^j, 2R 2^{j+1}]` inside `INNER_FRACTION` of the disk.
pub fn annulus_ladder(sol: &Solution) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut r = 2.0 * sol.support_radius;
    while 2.0 * r <= INNER_FRACTION * sol.grid.r_out * (1.0 + 1e-12) {
        out.push((r, 2.0 * r));
        r *= 2.0;
    }
    out
}

/// Largest relative gap accepted between the Dirichlet integral and the work of the force.
pub const ENERGY_IDENTITY_TOLERANCE: f64 = 1e-3;

/// `|D - int f . (w - w_inf)| / max(D, 1e-12)` against [`ENERGY_IDENTITY_TOLERANCE`].
pub fn check_energy_identity(sol: &Solution) -> EstimateReport {
    let e = sol.energy;
    let digest = solution_digest(sol, "energy_identity", &[e.dirichlet, e.work]);
    EstimateReport::inequality(
        "energy_identity",
        "Dirichlet integral equals the work of the force on the perturbation",
        e.relative_gap(),
        ENERGY_IDENTITY_TOLERANCE,
        0.0,
        digest,
    )
    .with_detail("dirichlet", e.dirichlet)
    .with_detail("work", e.work)
}

/// Every check that applies to a single solution, over the doubling annulus ladder.
pub fn verify_solution(sol: &Solution) -> Result<Vec<EstimateReport>> {
    let mut out = vec![check_energy_identity(sol)];
    let ladder = annulus_ladder(sol);
    for &(a, b) in &ladder {
        out.push(check_pressure_mean(sol, a, b)?);
        out.push(check_angle(sol, a, b)?);
        out.push(check_basic_estimate1(sol, a, b)?);
        out.push(check_bernoulli_max(sol, a, b, 0.01)?);
        if a >= 4.0 * sol.support_radius * (1.0 - 1e-12) {
            out.push(check_blowdown_pressure(sol, a, b)?);
        }
    }
    let mut rho = 2.0 * sol.support_radius;
    while 5.0 * rho <= INNER_FRACTION * sol.grid.r_out * (1.0 + 1e-12) {
        out.extend(good_radii_vorticity(sol, rho)?.certificates);
        out.extend(check_vorticity_gradient(sol, rho)?);
        rho *= 2.0;
    }
    Ok(out)
}

/// Checks that need a whole invading run.
pub fn verify_run(run: &InvadingRun) -> Result<Vec<EstimateReport>> {
    let limit = crate::invading::estimate_limit_velocity(run)?;
    let tail = crate::invading::estimate_tail_energy(run)?;
    let mut out = vec![crate::invading::check_tail_identity(run, &limit, &tail), check_basic_estimate2(run, &limit, &tail)];
    if let Some(sol) = run.solutions.last() {
        out.extend(verify_solution(sol)?);
    }
    Ok(out)
}
