//! Subcommands. Each one writes JSON (and CSV where tabular) into the output
//! directory and returns the process exit status.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use leray_core::estimates::{
    check_basic_estimate2, check_energy_identity, check_log_mean, good_circle_suite, verify_solution, EstimateReport,
};
use leray_core::grid::PolarGrid;
use leray_core::invading::{
    bound_point, check_tail_identity, check_uniform_bounds, estimate_limit_velocity, estimate_tail_energy, run_invading, run_sweep,
    scenario_verdict, InvadingRun,
};
use leray_core::nse::{solve_disk, GridSpec, ProblemConfig, Solution};
use leray_core::oseen::checks::{compare_decay, inner_exponent_report};
use leray_core::oseen::{
    breakdown_ramp, decay_check, fixed_point_solve, kernel_reports, random_pairs, uniqueness_crosscheck, validate_kernel,
    verify_bilinear_bounds, DiskPerturbation, FixedPointSolution, KernelTable,
};
use leray_core::{Error, ScalarField};
use serde_json::{json, Value};

use crate::config::Config;
use crate::output::{exit_status, num, write_csv, Artifacts};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OPERATIONAL: i32 = 1;
pub const EXIT_FAILED_CHECK: i32 = 2;

/// Names accepted by `--checks` / `verify.checks`.
pub const CHECK_NAMES: &[&str] = &["energy", "solution", "run", "scenario", "good_circle", "log_mean", "oseen_kernel", "bilinear"];

/// Checks run when none are named.
pub const DEFAULT_CHECKS: &[&str] = &["energy", "solution", "run", "scenario", "good_circle", "log_mean"];

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn error_value(e: &Error) -> Value {
    let history = match e {
        Error::NonConvergence { history, .. } | Error::Divergence { history, .. } => history.clone(),
        _ => Vec::new(),
    };
    json!({ "message": e.to_string(), "history": history })
}

pub fn cmd_solve(cfg: &Config, art: &Artifacts) -> anyhow::Result<i32> {
    match solve_disk(&cfg.problem, None) {
        Ok(sol) => {
            sol.save(&art.dir.join("solution"), "disk")?;
            let reports = vec![check_energy_identity(&sol)];
            art.write_json("solve", json!({ "record": to_value(&sol.record()), "reports": to_value(&reports) }))?;
            Ok(exit_status(&reports))
        }
        Err(e) => {
            art.write_json("solve", json!({ "error": error_value(&e) }))?;
            eprintln!("solve: {e}");
            Ok(EXIT_OPERATIONAL)
        }
    }
}

fn step_rows(run: &InvadingRun) -> Vec<Vec<String>> {
    run.steps
        .iter()
        .map(|s| {
            vec![
                s.k.to_string(),
                num(s.r_k),
                s.n_r.to_string(),
                s.n_theta.to_string(),
                num(s.dirichlet),
                num(s.work),
                num(s.energy_gap),
                num(s.max_mean_speed),
                num(s.residual),
                s.iterations.to_string(),
            ]
        })
        .collect()
}

const STEP_HEADER: &[&str] = &["k", "r_k", "n_r", "n_theta", "dirichlet", "work", "energy_gap", "max_mean_speed", "residual", "iterations"];

fn write_run(run: &InvadingRun, art: &Artifacts) -> anyhow::Result<()> {
    run.save(&art.dir.join("run"))?;
    write_csv(&art.dir.join("steps.csv"), STEP_HEADER, &step_rows(run))?;
    let probes: Vec<Vec<String>> = run
        .probe_rows()
        .iter()
        .map(|p| {
            vec![
                p.k.to_string(),
                num(p.r_k),
                num(p.r_probe),
                num(p.w1),
                num(p.w2),
                num(p.modulus),
                num(p.dirichlet),
                num(p.tail),
            ]
        })
        .collect();
    write_csv(&art.dir.join("probes.csv"), &["k", "r_k", "r_probe", "w1", "w2", "modulus", "dirichlet", "tail"], &probes)?;
    Ok(())
}

fn run_reports(run: &InvadingRun) -> anyhow::Result<(Value, Vec<EstimateReport>)> {
    let limit = estimate_limit_velocity(run)?;
    let tail = estimate_tail_energy(run)?;
    let verdict = scenario_verdict(run, &limit);
    let reports = vec![check_tail_identity(run, &limit, &tail), check_basic_estimate2(run, &limit, &tail), verdict.report(run)];
    Ok((json!({ "limit": to_value(&limit), "tail": to_value(&tail), "scenario": to_value(&verdict) }), reports))
}

pub fn cmd_invade(cfg: &Config, art: &Artifacts) -> anyhow::Result<i32> {
    match run_invading(&cfg.invade) {
        Ok(run) => {
            write_run(&run, art)?;
            let (summary, reports) = run_reports(&run)?;
            art.write_json("invade", json!({ "run": to_value(&run), "summary": summary, "reports": to_value(&reports) }))?;
            Ok(exit_status(&reports))
        }
        Err(failure) => {
            write_run(&failure.run, art)?;
            art.write_json("invade", json!({ "run": to_value(&failure.run), "error": error_value(&failure.error) }))?;
            eprintln!("invade: {}", failure.error);
            Ok(EXIT_OPERATIONAL)
        }
    }
}

pub fn cmd_sweep(cfg: &Config, art: &Artifacts) -> anyhow::Result<i32> {
    let configs = cfg.sweep_configs();
    let results = run_sweep(&configs, cfg.workers);
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (c, r) in configs.iter().zip(results) {
        match r {
            Ok(run) => {
                let p = bound_point(&run);
                rows.push(vec![
                    num(c.problem.lambda),
                    num(c.problem.force.amplitude),
                    num(p.a_norm),
                    num(p.c1),
                    num(p.c2),
                    "ok".to_string(),
                ]);
                runs.push(run);
            }
            Err(f) => {
                rows.push(vec![num(c.problem.lambda), num(c.problem.force.amplitude), String::new(), String::new(), String::new(), f.error.to_string()]);
                errors.push(json!({ "lambda": c.problem.lambda, "amplitude": c.problem.force.amplitude, "error": error_value(&f.error) }));
            }
        }
    }
    write_csv(&art.dir.join("sweep.csv"), &["lambda", "amplitude", "a_norm", "c1", "c2", "status"], &rows)?;
    let bounds = if runs.len() >= 4 { Some(check_uniform_bounds(&runs, cfg.sweep_factor)?) } else { None };
    let reports = bounds.as_ref().map(|b| b.reports.clone()).unwrap_or_default();
    art.write_json("sweep", json!({ "bounds": to_value(&bounds), "errors": errors, "reports": to_value(&reports) }))?;
    if !errors.is_empty() {
        eprintln!("sweep: {} of {} runs failed", errors.len(), configs.len());
        return Ok(EXIT_OPERATIONAL);
    }
    Ok(exit_status(&reports))
}

/// What `verify` found in its input directory.
pub enum Loaded {
    Run(InvadingRun),
    Single(Solution),
}

pub fn load_input(dir: &Path) -> anyhow::Result<Loaded> {
    if dir.join("run").join("run.json").exists() {
        return Ok(Loaded::Run(InvadingRun::load(&dir.join("run"))?));
    }
    if dir.join("solution").join("disk.json").exists() {
        return Ok(Loaded::Single(Solution::load(&dir.join("solution"), "disk")?));
    }
    Err(anyhow!("no solution or run found under {}", dir.display()))
}

fn resolve_checks(cfg: &Config) -> anyhow::Result<Vec<String>> {
    let names: Vec<String> = match &cfg.checks {
        None => DEFAULT_CHECKS.iter().map(|s| s.to_string()).collect(),
        Some(list) if list.iter().any(|n| n == "all") => CHECK_NAMES.iter().map(|s| s.to_string()).collect(),
        Some(list) => list.clone(),
    };
    for n in &names {
        if !CHECK_NAMES.contains(&n.as_str()) {
            return Err(anyhow!("unknown check {n:?}; known checks: {}", CHECK_NAMES.join(", ")));
        }
    }
    Ok(names)
}

/// The `log r` profile is extremal for the logarithmic mean-value inequality.
fn log_mean_self_check() -> anyhow::Result<EstimateReport> {
    let g = Arc::new(PolarGrid::new(160, 32, 8.0, 1.0)?);
    let phi = ScalarField::from_polar_fn(g, |r, _| r.ln());
    Ok(check_log_mean(&phi, 1.0, 4.0)?)
}

/// Run the named checks; inputs that a check needs but that are absent give a not-applicable report.
pub fn verify_checks(cfg: &Config, input: Option<&Loaded>, names: &[String]) -> anyhow::Result<Vec<EstimateReport>> {
    let mut out = Vec::new();
    let (solutions, run): (Vec<&Solution>, Option<&InvadingRun>) = match input {
        Some(Loaded::Run(r)) => (r.solutions.iter().collect(), Some(r)),
        Some(Loaded::Single(s)) => (vec![s], None),
        None => (Vec::new(), None),
    };
    let na = |name: &str| {
        EstimateReport::measured(name, "input not available for this check", 0.0, 0.0, String::new())
            .with_status(leray_core::Status::NotApplicable)
    };
    for name in names {
        match name.as_str() {
            "energy" => out.extend(solutions.iter().map(|s| check_energy_identity(s))),
            "solution" => match solutions.last() {
                // the energy identity has its own check name
                Some(s) => out.extend(verify_solution(s)?.into_iter().filter(|r| r.name != "energy_identity")),
                None => out.push(na("solution")),
            },
            "run" | "scenario" => match run {
                Some(r) => {
                    let (_, reps) = run_reports(r)?;
                    let keep = |rep: &EstimateReport| (rep.name == "scenario_limit_velocity") == (name == "scenario");
                    out.extend(reps.into_iter().filter(keep));
                }
                None => out.push(na(name)),
            },
            "good_circle" => out.push(good_circle_suite(cfg.seed, cfg.good_circle_fields)?),
            "log_mean" => out.push(log_mean_self_check()?),
            "oseen_kernel" => {
                let lambda = if cfg.problem.lambda > 0.0 { cfg.problem.lambda } else { 1.0 };
                let v = validate_kernel(lambda, 1.0 / lambda, 0.05 / lambda, 3.0, std::f64::consts::PI)?;
                out.extend(kernel_reports(&v));
            }
            "bilinear" => {
                let lattice = leray_core::oseen::Lattice::new(8.0, 0.25)?;
                let table = KernelTable::new(lattice, 1.0)?;
                let pairs = random_pairs(&lattice, 1.0, 1.0, cfg.seed, 8);
                out.extend(verify_bilinear_bounds(&table, 1.0, &pairs).1);
                out.push(inner_exponent_report(1.0, &[1.0, 2.0, 4.0])?);
            }
            _ => unreachable!("names validated"),
        }
    }
    Ok(out)
}

pub fn cmd_verify(cfg: &Config, art: &Artifacts) -> anyhow::Result<i32> {
    let names = resolve_checks(cfg)?;
    let dir: PathBuf = cfg.verify_input.clone().unwrap_or_else(|| art.dir.clone());
    let needs_input = names.iter().any(|n| matches!(n.as_str(), "energy" | "solution" | "run" | "scenario"));
    let input = if needs_input { Some(load_input(&dir)?) } else { None };
    let reports = verify_checks(cfg, input.as_ref(), &names)?;
    art.write_json("verify", json!({ "checks": names, "reports": to_value(&reports) }))?;
    crate::output::write_reports_csv(&art.dir.join("verify.csv"), &[("verify".to_string(), reports.clone())])?;
    Ok(exit_status(&reports))
}

fn fixed_point_payload(fp: &FixedPointSolution) -> anyhow::Result<(Value, Vec<EstimateReport>)> {
    let (decay, mut reports) = decay_check(fp, None)?;
    reports.push(EstimateReport::inequality(
        "fixed_point_contraction",
        "the fixed-point map contracts in the X norm",
        fp.contraction,
        1.0,
        0.0,
        leray_core::estimates::Fingerprint::new("contraction").f64(fp.contraction).finish(),
    ));
    let payload = json!({
        "config": to_value(&fp.config),
        "ledger": to_value(&fp.ledger),
        "norms": to_value(&fp.norms),
        "contraction": fp.contraction,
        "hypothesis_ratio": fp.hypothesis_ratio,
        "force": to_value(&fp.force),
        "discretization_error": fp.discretization_error,
        "truncation_error": fp.truncation_error,
        "tolerance": fp.tolerance(),
        "decay": to_value(&decay),
    });
    Ok((payload, reports))
}

fn write_fixed_point_ledger(path: &Path, fp: &FixedPointSolution) -> anyhow::Result<()> {
    let rows: Vec<Vec<String>> = fp
        .ledger
        .iter()
        .map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.x_norm),
                num(r.y_norm),
                num(r.l5_ball),
                num(r.update),
                r.contraction.map_or(String::new(), num),
            ]
        })
        .collect();
    write_csv(path, &["iteration", "x_norm", "y_norm", "l5_ball", "update", "contraction"], &rows)
}

pub fn cmd_oseen(cfg: &Config, art: &Artifacts) -> anyhow::Result<i32> {
    let ramp = if cfg.ramp_steps > 0 { Some(breakdown_ramp(&cfg.oseen, cfg.ramp_steps)?) } else { None };
    match fixed_point_solve(&cfg.oseen) {
        Ok(fp) => {
            write_fixed_point_ledger(&art.dir.join("oseen_ledger.csv"), &fp)?;
            let (payload, reports) = fixed_point_payload(&fp)?;
            art.write_json("oseen", json!({ "solution": payload, "ramp": to_value(&ramp), "reports": to_value(&reports) }))?;
            Ok(exit_status(&reports))
        }
        Err(e @ (Error::Divergence { .. } | Error::NonConvergence { .. })) => {
            art.write_json("oseen", json!({ "error": error_value(&e), "ramp": to_value(&ramp) }))?;
            eprintln!("oseen: {e}");
            Ok(EXIT_OPERATIONAL)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_crosscheck(cfg: &Config, art: &Artifacts) -> anyhow::Result<i32> {
    let run = run_invading(&cfg.invade).map_err(|f| anyhow!("invading run failed: {}", f.error))?;
    let last = run.solutions.last().context("invading run is empty")?;
    let coarse = if cfg.crosscheck_coarse {
        let p = ProblemConfig {
            r_k: last.grid.r_out,
            grid: GridSpec { inner_spacing: 2.0 * cfg.problem.grid.inner_spacing, ..cfg.problem.grid },
            ..cfg.invade.problem
        };
        Some(solve_disk(&p, None)?)
    } else {
        None
    };
    let fp = fixed_point_solve(&cfg.oseen);
    let mut reports = vec![uniqueness_crosscheck(&run, coarse.as_ref(), fp.as_ref())?];
    let mut payload = json!({ "invading": to_value(&run.steps.iter().map(|s| (s.r_k, s.dirichlet)).collect::<Vec<_>>()) });
    match &fp {
        Ok(fp) => {
            let disk = DiskPerturbation::new(last);
            reports.push(compare_decay(&disk, fp)?);
            let (fp_payload, fp_reports) = fixed_point_payload(fp)?;
            reports.extend(fp_reports);
            payload["fixed_point"] = fp_payload;
            write_fixed_point_ledger(&art.dir.join("oseen_ledger.csv"), fp)?;
        }
        Err(e) => payload["fixed_point"] = json!({ "error": error_value(e) }),
    }
    payload["reports"] = to_value(&reports);
    art.write_json("crosscheck", payload)?;
    Ok(exit_status(&reports))
}

pub fn cmd_report(art: &Artifacts) -> anyhow::Result<i32> {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(&art.dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    let mut groups = Vec::new();
    for path in entries {
        let text = std::fs::read_to_string(&path)?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let Some(list) = value.get("reports") else { continue };
        let reports: Vec<EstimateReport> = serde_json::from_value(list.clone()).with_context(|| format!("reports in {}", path.display()))?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        groups.push((stem, reports));
    }
    crate::output::write_reports_csv(&art.dir.join("summary.csv"), &groups)?;
    Ok(EXIT_OK)
}
