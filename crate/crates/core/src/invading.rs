//! Invading domains: solve on a growing sequence of disks, each solve warm
//! started from the previous one, and extract the limit behaviour.
//!
//! Recorded per disk: the Dirichlet integral, the largest circle-mean speed
//! outside the force support, circle means on a doubling probe ladder and the
//! tail energy outside each probe. From the largest disks the module
//! estimates the limit velocity at infinity, the tail energy that escapes to
//! infinity, and evaluates the small-data hypotheses on the configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::report::{EstimateReport, Fingerprint, Status};
use crate::field::{ring_means, CircleMean};
use crate::forcing::ForceSummary;
use crate::nse::{solve_disk, ProblemConfig, Solution};
use crate::operators::dirichlet_integral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvadingConfig {
    /// Problem data; `r_k` is overwritten by the schedule.
    pub problem: ProblemConfig,
    /// Strictly increasing disk radii, the first at least twice the support radius.
    pub schedule: Vec<f64>,
    /// Window `[a, b]` (fractions of the largest radius) over which the limit velocity is averaged.
    pub window: [f64; 2],
    /// Largest acceptable uncertainty of the limit velocity before it is flagged inconclusive.
    pub confidence: f64,
    /// Stand-in for the unquantified small constant in the small-data hypotheses.
    pub epsilon: f64,
}

impl InvadingConfig {
    pub fn new(problem: ProblemConfig, schedule: Vec<f64>) -> Self {
        Self { problem, schedule, window: [0.4, 0.8], confidence: 1e-2, epsilon: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        validate_schedule(&self.schedule, self.problem.force.support_radius)?;
        let [a, b] = self.window;
        if !(0.0 < a && a < b && b <= 1.0) {
            return Err(Error::Config(format!("window [{a}, {b}] must satisfy 0 < a < b <= 1")));
        }
        if !(self.confidence > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config("confidence and epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// `2R 2^k` for `k = 0..count`.
pub fn geometric_schedule(support_radius: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| 2.0 * support_radius * 2f64.powi(k as i32)).collect()
}

pub fn validate_schedule(schedule: &[f64], support_radius: f64) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Config("empty schedule".into()));
    }
    if !(schedule[0] >= 2.0 * support_radius * (1.0 - 1e-12)) {
        return Err(Error::Config(format!(
            "first disk radius {} is below twice the support radius {}",
            schedule[0], support_radius
        )));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) || schedule.iter().any(|r| !r.is_finite()) {
        return Err(Error::Config("schedule must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Probe radii `2R, 4R, ...` up to `r_max`.
pub fn probe_ladder(support_radius: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 2.0 * support_radius;
    while r <= r_max * (1.0 + 1e-12) {
        out.push(r.min(r_max));
        r *= 2.0;
    }
    out
}

/// One row of the probe table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub k: usize,
    pub r_k: f64,
    pub r_probe: f64,
    pub w1: f64,
    pub w2: f64,
    pub modulus: f64,
    /// Argument of the circle mean in `[0, 2 pi)`; `NaN`-free, `None` for a vanishing mean.
    pub angle: Option<f64>,
    /// Dirichlet integral of the whole disk.
    pub dirichlet: f64,
    /// Dirichlet integral outside the probe circle.
    pub tail: f64,
}

/// Summary of one disk solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub k: usize,
    pub r_k: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub dirichlet: f64,
    pub work: f64,
    pub energy_gap: f64,
    /// `max |mean w(r)|` over `R <= r <= R_k`.
    pub max_mean_speed: f64,
    pub residual: f64,
    pub residual_momentum: f64,
    pub iterations: usize,
    pub newton_steps: usize,
    pub continuation_stages: usize,
    pub probes: Vec<ProbeSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvadingRun {
    pub config: InvadingConfig,
    pub force: Option<ForceSummary>,
    pub steps: Vec<StepSummary>,
    /// Full solutions, kept in memory for the diagnostics; not serialized.
    #[serde(skip)]
    pub solutions: Vec<Solution>,
}

/// A run that stopped early: the completed prefix and the error that stopped it.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub run: InvadingRun,
    pub error: Error,
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        Error::PartialRun {
            completed: f.run.steps.len(),
            scheduled: f.run.config.schedule.len(),
            cause: Box::new(f.error),
        }
    }
}

/// Largest circle-mean speed over `r0 <= r <= R_k`, sampled at the ring nodes and at `r0`.
pub fn max_mean_speed(sol: &Solution, r0: f64) -> Result<f64> {
    let g = &sol.grid;
    let (ux, uy) = sol.w.to_cartesian();
    let mx = ring_means(g, &ux);
    let my = ring_means(g, &uy);
    let at_r0 = sol.w.circle_average(r0)?.modulus;
    Ok((0..g.n_r).filter(|&i| g.radii[i] >= r0).fold(at_r0, |m, i| m.max(mx[i].hypot(my[i]))))
}

fn summarize(k: usize, sol: &Solution, support_radius: f64) -> Result<StepSummary> {
    let g = &sol.grid;
    let ladder = probe_ladder(support_radius, g.r_out);
    let means = sol.w.circle_averages(&ladder)?;
    let dirichlet = sol.energy.dirichlet;
    let probes = ladder
        .iter()
        .zip(&means)
        .map(|(&r, m)| {
            Ok(ProbeSample {
                k,
                r_k: g.r_out,
                r_probe: r,
                w1: m.w1,
                w2: m.w2,
                modulus: m.modulus,
                angle: m.angle,
                dirichlet,
                tail: if r < g.r_out { dirichlet_integral(&sol.w, r, g.r_out)? } else { 0.0 },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StepSummary {
        k,
        r_k: g.r_out,
        n_r: g.n_r,
        n_theta: g.n_theta,
        dirichlet,
        work: sol.energy.work,
        energy_gap: sol.energy.relative_gap(),
        max_mean_speed: max_mean_speed(sol, support_radius)?,
        residual: sol.residual,
        residual_momentum: sol.residual_momentum,
        iterations: sol.iterations,
        newton_steps: sol.newton_steps,
        continuation_stages: sol.path.len(),
        probes,
    })
}

/// Run the schedule. A failed solve ends the run and returns the completed prefix.
pub fn run_invading(config: &InvadingConfig) -> std::result::Result<InvadingRun, RunFailure> {
    let mut run = InvadingRun { config: config.clone(), force: None, steps: Vec::new(), solutions: Vec::new() };
    if let Err(error) = config.validate() {
        return Err(RunFailure { run, error });
    }
    let support = config.problem.force.support_radius;
    for (k, &r_k) in config.schedule.iter().enumerate() {
        let problem = ProblemConfig { r_k, ..config.problem };
        let step = solve_disk(&problem, run.solutions.last())
            .and_then(|sol| summarize(k, &sol, support).map(|s| (sol, s)));
        match step {
            Ok((sol, summary)) => {
                if run.force.is_none() {
                    run.force = sol.force_summary.clone();
                }
                run.steps.push(summary);
                run.solutions.push(sol);
            }
            Err(error) => return Err(RunFailure { run, error }),
        }
    }
    Ok(run)
}

/// Run several configurations on at most `workers` scoped threads (0 means
/// one per core); results keep the input order.
pub fn run_sweep(configs: &[InvadingConfig], workers: usize) -> Vec<std::result::Result<InvadingRun, RunFailure>> {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let workers = if workers == 0 { cores } else { workers }.min(configs.len()).max(1);
    let mut out: Vec<Option<std::result::Result<InvadingRun, RunFailure>>> = (0..configs.len()).map(|_| None).collect();
    for chunk_start in (0..configs.len()).step_by(workers) {
        let chunk = &configs[chunk_start..(chunk_start + workers).min(configs.len())];
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk.iter().map(|c| s.spawn(move || run_invading(c))).collect();
            handles.into_iter().map(|h| h.join().expect("invading run panicked")).collect()
        });
        for (i, r) in results.into_iter().enumerate() {
            out[chunk_start + i] = Some(r);
        }
    }
    out.into_iter().map(|r| r.expect("every slot filled")).collect()
}

impl InvadingRun {
    pub fn support_radius(&self) -> f64 {
        self.config.problem.force.support_radius
    }

    pub fn lambda(&self) -> f64 {
        self.config.problem.lambda
    }

    pub fn far_velocity(&self) -> [f64; 2] {
        [self.lambda(), 0.0]
    }

    pub fn total_force(&self) -> [f64; 2] {
        self.force.as_ref().map_or([0.0, 0.0], |f| f.total_force)
    }

    pub fn a_norm(&self) -> f64 {
        self.force.as_ref().map_or(0.0, |f| f.a_norm)
    }

    /// All probe rows, in `(k, r_probe)` order.
    pub fn probe_rows(&self) -> Vec<ProbeSample> {
        self.steps.iter().flat_map(|s| s.probes.iter().copied()).collect()
    }

    /// `|mean w_k(r) - mean w_{k+1}(r)|` for successive solves containing `r`
    /// strictly inside their disk (on the outer circle the mean is prescribed).
    pub fn probe_increments(&self, r: f64) -> Vec<f64> {
        let at = |s: &StepSummary| {
            s.probes
                .iter()
                .find(|p| (p.r_probe - r).abs() <= 1e-12 * r && p.r_probe < p.r_k * (1.0 - 1e-12))
                .map(|p| (p.w1, p.w2))
        };
        let vals: Vec<(f64, f64)> = self.steps.iter().filter_map(at).collect();
        vals.windows(2).map(|w| (w[0].0 - w[1].0).hypot(w[0].1 - w[1].1)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// Write `run.json` and every disk solution as `disk_{k}.*` into `dir`.
    pub fn save(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("run.json"), self.to_json()?)?;
        for (k, sol) in self.solutions.iter().enumerate() {
            sol.save(dir, &format!("disk_{k}"))?;
        }
        Ok(())
    }

    /// Inverse of [`InvadingRun::save`].
    pub fn load(dir: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("run.json"))?;
        let mut run: Self = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
        run.solutions = (0..run.steps.len())
            .map(|k| Solution::load(dir, &format!("disk_{k}")))
            .collect::<Result<_>>()?;
        Ok(run)
    }
}

/// Estimated velocity at infinity of the limit solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub w0: [f64; 2],
    pub uncertainty: f64,
    /// Largest deviation of the circle mean from `w0` inside the window.
    pub window_spread: f64,
    /// Change of the window average between the two largest disks.
    pub k_spread: f64,
    pub inconclusive: bool,
}

impl LimitEstimate {
    pub fn modulus(&self) -> f64 {
        self.w0[0].hypot(self.w0[1])
    }
}

/// Radially averaged circle mean over `[a R_k, b R_k]` and the largest
/// deviation from that average, from the ring-node means of `sol`.
fn window_average(sol: &Solution, window: [f64; 2]) -> Result<([f64; 2], f64)> {
    let g = &sol.grid;
    let (r1, r2) = (window[0] * g.r_out, window[1] * g.r_out);
    let mut rs = vec![r1];
    rs.extend(g.radii.iter().copied().filter(|&r| r > r1 && r < r2));
    rs.push(r2);
    let means: Vec<CircleMean> = sol.w.circle_averages(&rs)?;
    let (mut s1, mut s2) = (0.0, 0.0);
    for i in 0..rs.len() - 1 {
        let h = rs[i + 1] - rs[i];
        s1 += 0.5 * h * (means[i].w1 + means[i + 1].w1);
        s2 += 0.5 * h * (means[i].w2 + means[i + 1].w2);
    }
    let avg = [s1 / (r2 - r1), s2 / (r2 - r1)];
    let spread = means.iter().fold(0.0f64, |m, c| m.max((c.w1 - avg[0]).hypot(c.w2 - avg[1])));
    Ok((avg, spread))
}

/// Window-averaged limit velocity with its uncertainty.
pub fn estimate_limit_velocity(run: &InvadingRun) -> Result<LimitEstimate> {
    let n = run.solutions.len();
    if n < 2 {
        return Err(Error::Precondition(format!("limit estimate needs two completed solves, have {n}")));
    }
    let window = run.config.window;
    let (w0, window_spread) = window_average(&run.solutions[n - 1], window)?;
    let (prev, _) = window_average(&run.solutions[n - 2], window)?;
    let k_spread = (w0[0] - prev[0]).hypot(w0[1] - prev[1]);
    let uncertainty = window_spread + k_spread;
    Ok(LimitEstimate { w0, uncertainty, window_spread, k_spread, inconclusive: uncertainty > run.config.confidence })
}

/// `D_K(r, R_K)` of the largest solve.
pub fn tail_dirichlet(run: &InvadingRun, r: f64) -> Result<f64> {
    let sol = run.solutions.last().ok_or_else(|| Error::Precondition("run has no completed solve".into()))?;
    dirichlet_integral(&sol.w, r, sol.grid.r_out)
}

/// Tail energy table of the largest solve and the extrapolated escaping energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub radii: Vec<f64>,
    /// `D_K(r, R_K)` at each radius.
    pub tail: Vec<f64>,
    /// `D_{K-1}(r, R_{K-1})` where `r` lies inside the previous disk.
    pub previous: Vec<Option<f64>>,
    /// Extrapolated value of the tail as `r` grows.
    pub value: f64,
    pub uncertainty: f64,
}

/// Tabulate the tail over the probe ladder up to a quarter of the largest
/// radius (beyond it the outer boundary layer dominates) and extrapolate with
/// Aitken's process on the last three values, clamped at zero. The uncertainty adds the
/// extrapolation step and the change between the two largest disks.
pub fn estimate_tail_energy(run: &InvadingRun) -> Result<TailEstimate> {
    let n = run.solutions.len();
    if n == 0 {
        return Err(Error::Precondition("run has no completed solve".into()));
    }
    let last = &run.solutions[n - 1];
    let radii = probe_ladder(run.support_radius(), 0.25 * last.grid.r_out);
    let radii = if radii.is_empty() { vec![2.0 * run.support_radius()] } else { radii };
    let tail = radii
        .iter()
        .map(|&r| dirichlet_integral(&last.w, r, last.grid.r_out))
        .collect::<Result<Vec<_>>>()?;
    let previous = radii
        .iter()
        .map(|&r| match n.checked_sub(2).map(|i| &run.solutions[i]) {
            Some(p) if r <= p.grid.r_out => dirichlet_integral(&p.w, r, p.grid.r_out).map(Some),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    let m = tail.len();
    let t_last = tail[m - 1];
    let mut value = t_last;
    let mut uncertainty = if m >= 2 { (tail[m - 2] - t_last).abs() } else { t_last };
    if m >= 3 {
        let d1 = tail[m - 2] - tail[m - 3];
        let d2 = t_last - tail[m - 2];
        let q = if d1 != 0.0 { d2 / d1 } else { f64::NAN };
        if q > 0.0 && q < 1.0 {
            // the tail is nonnegative: a negative extrapolation means the limit is in [0, t_last]
            let accel = (t_last - d2 * d2 / (d2 - d1)).max(0.0);
            value = accel;
            uncertainty = t_last - accel;
        }
    }
    if let Some(Some(p)) = previous.last() {
        uncertainty += (t_last - p).abs();
    }
    Ok(TailEstimate { radii, tail, previous, value, uncertainty })
}

fn run_digest(run: &InvadingRun, tag: &str) -> String {
    let mut fp = Fingerprint::new(tag)
        .f64(run.lambda())
        .f64(run.support_radius())
        .f64s(&run.config.schedule)
        .f64(run.config.problem.force.amplitude);
    for s in &run.steps {
        fp = fp.f64(s.dirichlet).f64(s.max_mean_speed);
    }
    fp.finish()
}

fn is_zero_total_force(force: Option<&ForceSummary>) -> bool {
    match force {
        None => true,
        Some(f) => f.total_force_norm() <= 1e-9 * (f.a_norm * f.cutoff_constant).max(f64::MIN_POSITIVE),
    }
}

/// Compare the escaping tail energy with `-F . (w_inf - w0)`.
///
/// Passes when the two sides agree within the combined uncertainty
/// `u(D*) + |F| u(w0)`. When `|w0|` does not exceed its uncertainty the
/// hypothesis `w0 != 0` is not met and the report is flagged.
pub fn check_tail_identity(run: &InvadingRun, limit: &LimitEstimate, tail: &TailEstimate) -> EstimateReport {
    let big_f = run.total_force();
    let far = run.far_velocity();
    let identity = -(big_f[0] * (far[0] - limit.w0[0]) + big_f[1] * (far[1] - limit.w0[1]));
    let f_norm = big_f[0].hypot(big_f[1]);
    let lhs = (tail.value - identity).abs();
    let rhs = tail.uncertainty + f_norm * limit.uncertainty;
    let report = EstimateReport::inequality(
        "tail_identity",
        "escaping tail energy equals minus the total force dotted with (w_inf - w0)",
        lhs,
        rhs,
        0.0,
        run_digest(run, "tail_identity"),
    )
    .with_detail("tail_energy", tail.value)
    .with_detail("tail_uncertainty", tail.uncertainty)
    .with_detail("identity_value", identity)
    .with_detail("w0_modulus", limit.modulus())
    .with_detail("w0_uncertainty", limit.uncertainty);
    if limit.modulus() <= limit.uncertainty {
        report.with_status(Status::HypothesisNotMet)
    } else {
        report
    }
}

/// Per-run ratios against the uniform bounds on the invading sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub lambda: f64,
    pub amplitude: f64,
    pub support_radius: f64,
    pub a_norm: f64,
    /// `max_k D_k / [A (A + lambda + A^{1/3} R^{-2/3})]`.
    pub c1: f64,
    /// `max_k max|mean w_k| / [A + lambda + A^{1/3} R^{-2/3}]`.
    pub c2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBounds {
    pub points: Vec<BoundPoint>,
    pub c1: f64,
    pub c2: f64,
    /// `max / min` of the per-run ratios over runs with a nonzero ratio (1 when fewer than two).
    pub c1_spread: f64,
    pub c2_spread: f64,
    pub reports: Vec<EstimateReport>,
}

/// `A + lambda + A^{1/3} R^{-2/3}`.
pub fn speed_scale(a: f64, lambda: f64, support_radius: f64) -> f64 {
    a + lambda + a.cbrt() * support_radius.powf(-2.0 / 3.0)
}

pub fn bound_point(run: &InvadingRun) -> BoundPoint {
    let a = run.a_norm();
    let lambda = run.lambda();
    let rr = run.support_radius();
    let scale = speed_scale(a, lambda, rr);
    let d_max = run.steps.iter().fold(0.0f64, |m, s| m.max(s.dirichlet));
    let w_max = run.steps.iter().fold(0.0f64, |m, s| m.max(s.max_mean_speed));
    BoundPoint {
        lambda,
        amplitude: run.config.problem.force.amplitude,
        support_radius: rr,
        a_norm: a,
        c1: crate::estimates::report::safe_ratio(d_max, a * scale),
        c2: crate::estimates::report::safe_ratio(w_max, scale),
    }
}

fn spread(vals: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = vals.filter(|x| *x > 0.0).collect();
    if v.len() < 2 {
        return 1.0;
    }
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

/// Empirical constants of the uniform bounds over a sweep, and their
/// stability measured as `max / min` against the allowed factor `factor`.
pub fn check_uniform_bounds(runs: &[InvadingRun], factor: f64) -> Result<UniformBounds> {
    if runs.len() < 4 {
        return Err(Error::Precondition(format!("uniform bounds need at least 4 runs, have {}", runs.len())));
    }
    let points: Vec<BoundPoint> = runs.iter().map(bound_point).collect();
    let c1 = points.iter().fold(0.0f64, |m, p| m.max(p.c1));
    let c2 = points.iter().fold(0.0f64, |m, p| m.max(p.c2));
    let c1_spread = spread(points.iter().map(|p| p.c1));
    let c2_spread = spread(points.iter().map(|p| p.c2));
    let mut fp = Fingerprint::new("uniform_bounds");
    for p in &points {
        fp = fp.f64s(&[p.lambda, p.amplitude, p.support_radius, p.a_norm, p.c1, p.c2]);
    }
    let digest = fp.finish();
    let reports = vec![
        EstimateReport::inequality(
            "uniform_dirichlet_bound_stability",
            "Dirichlet integrals of the invading sequence bounded by C1 A (A + lambda + A^(1/3) R^(-2/3))",
            c1_spread,
            factor,
            0.0,
            digest.clone(),
        )
        .with_detail("c1", c1),
        EstimateReport::inequality(
            "uniform_mean_speed_bound_stability",
            "circle-mean speeds of the invading sequence bounded by C2 (A + lambda + A^(1/3) R^(-2/3))",
            c2_spread,
            factor,
            0.0,
            digest,
        )
        .with_detail("c2", c2),
    ];
    Ok(UniformBounds { points, c1, c2, c1_spread, c2_spread, reports })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Positive limiting speed large compared with the force.
    LargeSpeed,
    /// Zero total force and zero limiting speed.
    ZeroSpeedZeroForce,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioVerdict {
    pub scenario: Scenario,
    /// Value of the smallness hypothesis ratio (met when `<= 1`), if a positive speed is prescribed.
    pub hypothesis_ratio: Option<f64>,
    pub epsilon: f64,
    pub zero_total_force: bool,
    pub deviation: f64,
    pub uncertainty: f64,
    /// Whether `|w0 - w_inf| <= uncertainty`; `None` when the verdict is withheld.
    pub matches: Option<bool>,
    pub note: String,
}

/// Large-speed smallness ratio `A L / (eps^2 lambda)` with
/// `L = ln^{1/2}(1/(lambda R) + 2)`, and `L = 1` for zero total force.
pub fn large_speed_ratio(a: f64, lambda: f64, support_radius: f64, epsilon: f64, zero_force: bool) -> f64 {
    let log_factor = if zero_force { 1.0 } else { (1.0 / (lambda * support_radius) + 2.0).ln().sqrt() };
    a * log_factor / (epsilon * epsilon * lambda)
}

pub fn scenario_verdict(run: &InvadingRun, limit: &LimitEstimate) -> ScenarioVerdict {
    let eps = run.config.epsilon;
    let lambda = run.lambda();
    let zero_force = is_zero_total_force(run.force.as_ref());
    let far = run.far_velocity();
    let deviation = (limit.w0[0] - far[0]).hypot(limit.w0[1] - far[1]);
    let base = ScenarioVerdict {
        scenario: Scenario::Neither,
        hypothesis_ratio: None,
        epsilon: eps,
        zero_total_force: zero_force,
        deviation,
        uncertainty: limit.uncertainty,
        matches: None,
        note: String::new(),
    };
    if lambda > 0.0 {
        let ratio = large_speed_ratio(run.a_norm(), lambda, run.support_radius(), eps, zero_force);
        if ratio <= 1.0 {
            ScenarioVerdict {
                scenario: Scenario::LargeSpeed,
                hypothesis_ratio: Some(ratio),
                matches: Some(deviation <= limit.uncertainty),
                note: "smallness hypothesis met".into(),
                ..base
            }
        } else {
            ScenarioVerdict {
                hypothesis_ratio: Some(ratio),
                note: "smallness hypothesis not met; verdict withheld".into(),
                ..base
            }
        }
    } else if zero_force {
        ScenarioVerdict {
            scenario: Scenario::ZeroSpeedZeroForce,
            matches: Some(deviation <= limit.uncertainty),
            note: "zero limiting speed with zero total force".into(),
            ..base
        }
    } else {
        ScenarioVerdict { note: "outside both scenarios; verdict withheld".into(), ..base }
    }
}

impl ScenarioVerdict {
    /// The verdict as a report: deviation of the limit velocity from the
    /// prescribed one against its uncertainty.
    pub fn report(&self, run: &InvadingRun) -> EstimateReport {
        let mut fp = Fingerprint::new("scenario").f64(self.deviation).f64(self.uncertainty);
        for s in &run.steps {
            fp = fp.f64(s.dirichlet);
        }
        let rep = EstimateReport::inequality(
            "scenario_limit_velocity",
            "the limit velocity at infinity equals the prescribed one",
            self.deviation,
            self.uncertainty,
            0.0,
            fp.finish(),
        );
        let rep = match (self.matches, self.hypothesis_ratio) {
            (Some(_), _) => rep,
            (None, Some(_)) => rep.with_status(Status::HypothesisNotMet),
            (None, None) => rep.with_status(Status::NotApplicable),
        };
        match self.hypothesis_ratio {
            Some(h) => rep.with_detail("hypothesis_ratio", h),
            None => rep,
        }
    }
}
