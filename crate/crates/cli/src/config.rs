//! Plain-text configuration: one `key = value` per line, dotted keys for
//! sections, `#` starts a comment. Lists are comma separated.
//!
//! | key                          | type        | default         |
//! |------------------------------|-------------|-----------------|
//! | `seed`                       | u64         | 0               |
//! | `workers`                    | usize       | 0 (all cores)   |
//! | `lambda`                     | f64 ≥ 0     | 1               |
//! | `force.family`               | name        | `none`          |
//! | `force.support_radius`       | f64 > 0     | 1               |
//! | `force.amplitude`            | f64         | 0               |
//! | `force.orientation`          | f64 (rad)   | 0               |
//! | `force.center`               | f64,f64     | 0,0             |
//! | `disk.radius`                | f64         | 8 R             |
//! | `grid.n_theta`               | usize       | 32              |
//! | `grid.inner_spacing`         | f64 (of R)  | 1/64            |
//! | `grid.max_stretch`           | f64         | 1.0025          |
//! | `grid.n_r`                   | usize       | unset           |
//! | `solver.picard_relax`        | f64         | 1               |
//! | `solver.newton_switch_tol`   | f64         | 1e-2            |
//! | `solver.tol_residual`        | f64         | 1e-12           |
//! | `solver.max_iter`            | usize       | 200             |
//! | `solver.continuation_steps`  | usize       | 4               |
//! | `solver.gmres_restart`       | usize       | 30              |
//! | `solver.pressure_ref_radius` | f64         | outer radius    |
//! | `invade.schedule`            | f64 list    | 2R, 4R, …, 64R  |
//! | `invade.window`              | f64,f64     | 0.4,0.8         |
//! | `invade.confidence`          | f64         | 1e-2            |
//! | `invade.epsilon`             | f64         | 0.1             |
//! | `sweep.lambda`               | f64 list    | `lambda`        |
//! | `sweep.amplitude`            | f64 list    | `force.amplitude` |
//! | `sweep.factor`               | f64         | 3               |
//! | `oseen.half_width`           | f64 (of R)  | 8               |
//! | `oseen.spacing`              | f64 (of R)  | 0.125           |
//! | `oseen.tol`                  | f64         | 1e-10           |
//! | `oseen.max_iter`             | usize       | 60              |
//! | `oseen.epsilon`              | f64         | 0.1             |
//! | `oseen.estimate_error`       | bool        | true            |
//! | `oseen.ramp_steps`           | usize       | 0               |
//! | `crosscheck.coarse`          | bool        | true            |
//! | `verify.checks`              | name list   | default set     |
//! | `verify.good_circle_fields`  | usize       | 1000            |
//! | `verify.input`               | path        | output dir      |

use std::collections::BTreeMap;
use std::path::PathBuf;

use leray_core::forcing::{ForceFamily, ForceSpec};
use leray_core::invading::{geometric_schedule, InvadingConfig};
use leray_core::nse::{GridSpec, ProblemConfig, SolverControls};
use leray_core::oseen::FixedPointConfig;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key `{key}` given twice (first on line {first})")]
    Duplicate { line: usize, key: String, first: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("configuration: {0}")]
    Invalid(String),
}

const KEYS: &[&str] = &[
    "seed",
    "workers",
    "lambda",
    "force.family",
    "force.support_radius",
    "force.amplitude",
    "force.orientation",
    "force.center",
    "disk.radius",
    "grid.n_theta",
    "grid.inner_spacing",
    "grid.max_stretch",
    "grid.n_r",
    "solver.picard_relax",
    "solver.newton_switch_tol",
    "solver.tol_residual",
    "solver.max_iter",
    "solver.continuation_steps",
    "solver.gmres_restart",
    "solver.pressure_ref_radius",
    "invade.schedule",
    "invade.window",
    "invade.confidence",
    "invade.epsilon",
    "sweep.lambda",
    "sweep.amplitude",
    "sweep.factor",
    "oseen.half_width",
    "oseen.spacing",
    "oseen.tol",
    "oseen.max_iter",
    "oseen.epsilon",
    "oseen.estimate_error",
    "oseen.ramp_steps",
    "crosscheck.coarse",
    "verify.checks",
    "verify.good_circle_fields",
    "verify.input",
];

/// Parsed `key -> (value, line)` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| ConfigError::Syntax { line, text: raw.to_string() })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line, text: raw.to_string() });
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            }
            if let Some((_, first)) = entries.get(key) {
                return Err(ConfigError::Duplicate { line, key: key.to_string(), first: *first });
            }
            entries.insert(key.to_string(), (value.to_string(), line));
        }
        Ok(Self { entries })
    }

    /// Set or replace a key (used for command-line overrides such as `--seed`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line: 0, key: key.to_string() });
        }
        self.entries.insert(key.to_string(), (value.to_string(), 0));
        Ok(())
    }

    /// SHA-256 of the sorted `key=value` lines; independent of layout and comments.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, (v, _)) in &self.entries {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    fn value_error(&self, key: &str, message: String) -> ConfigError {
        let line = self.entries.get(key).map_or(0, |e| e.1);
        ConfigError::Value { line, key: key.to_string(), message }
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, _)) => v.parse::<T>().map(Some).map_err(|e| self.value_error(key, format!("cannot parse {v:?}: {e}"))),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, _)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| self.value_error(key, format!("cannot parse {s:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn pair(&self, key: &str) -> Result<Option<[f64; 2]>, ConfigError> {
        match self.list(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some([v[0], v[1]])),
            Some(v) => Err(self.value_error(key, format!("expected two numbers, found {}", v.len()))),
        }
    }

    fn names(&self, key: &str) -> Option<Vec<String>> {
        self.entries.get(key).map(|(v, _)| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }
}

/// Typed configuration for every command.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub raw: RawConfig,
    pub seed: u64,
    pub workers: usize,
    pub problem: ProblemConfig,
    pub invade: InvadingConfig,
    pub sweep_lambda: Vec<f64>,
    pub sweep_amplitude: Vec<f64>,
    pub sweep_factor: f64,
    pub oseen: FixedPointConfig,
    pub ramp_steps: usize,
    pub crosscheck_coarse: bool,
    pub checks: Option<Vec<String>>,
    pub good_circle_fields: usize,
    pub verify_input: Option<PathBuf>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn digest(&self) -> String {
        self.raw.digest()
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let family = match raw.entries.get("force.family") {
            None => ForceFamily::None,
            Some((v, _)) => ForceFamily::parse(v).ok_or_else(|| raw.value_error("force.family", format!("unknown force family {v:?}")))?,
        };
        let mut force = ForceSpec::new(family, raw.get("force.support_radius")?.unwrap_or(1.0), raw.get("force.amplitude")?.unwrap_or(0.0));
        force.orientation = raw.get("force.orientation")?.unwrap_or(0.0);
        force.center = raw.pair("force.center")?.unwrap_or([0.0, 0.0]);
        let r = force.support_radius;
        let d = GridSpec::default();
        let grid = GridSpec {
            n_theta: raw.get("grid.n_theta")?.unwrap_or(d.n_theta),
            inner_spacing: raw.get("grid.inner_spacing")?.unwrap_or(d.inner_spacing),
            max_stretch: raw.get("grid.max_stretch")?.unwrap_or(d.max_stretch),
            n_r: raw.get("grid.n_r")?,
        };
        let s = SolverControls::default();
        let solver = SolverControls {
            picard_relax: raw.get("solver.picard_relax")?.unwrap_or(s.picard_relax),
            newton_switch_tol: raw.get("solver.newton_switch_tol")?.unwrap_or(s.newton_switch_tol),
            tol_residual: raw.get("solver.tol_residual")?.unwrap_or(s.tol_residual),
            max_iter: raw.get("solver.max_iter")?.unwrap_or(s.max_iter),
            continuation_steps: raw.get("solver.continuation_steps")?.unwrap_or(s.continuation_steps),
            gmres_restart: raw.get("solver.gmres_restart")?.unwrap_or(s.gmres_restart),
            pressure_ref_radius: raw.get("solver.pressure_ref_radius")?,
        };
        let lambda = raw.get("lambda")?.unwrap_or(1.0);
        let problem = ProblemConfig { lambda, force, r_k: raw.get("disk.radius")?.unwrap_or(8.0 * r), grid, solver };
        let schedule = raw.list("invade.schedule")?.unwrap_or_else(|| geometric_schedule(r, 6));
        let mut invade = InvadingConfig::new(problem, schedule);
        invade.window = raw.pair("invade.window")?.unwrap_or(invade.window);
        invade.confidence = raw.get("invade.confidence")?.unwrap_or(invade.confidence);
        invade.epsilon = raw.get("invade.epsilon")?.unwrap_or(invade.epsilon);
        let fp_default = FixedPointConfig::new(lambda, force);
        let oseen = FixedPointConfig {
            half_width: raw.get("oseen.half_width")?.unwrap_or(fp_default.half_width),
            spacing: raw.get("oseen.spacing")?.unwrap_or(fp_default.spacing),
            tol: raw.get("oseen.tol")?.unwrap_or(fp_default.tol),
            max_iter: raw.get("oseen.max_iter")?.unwrap_or(fp_default.max_iter),
            epsilon: raw.get("oseen.epsilon")?.unwrap_or(fp_default.epsilon),
            estimate_error: raw.get("oseen.estimate_error")?.unwrap_or(fp_default.estimate_error),
            ..fp_default
        };
        let cfg = Self {
            seed: raw.get("seed")?.unwrap_or(0),
            workers: raw.get("workers")?.unwrap_or(0),
            problem,
            invade,
            sweep_lambda: raw.list("sweep.lambda")?.unwrap_or_else(|| vec![lambda]),
            sweep_amplitude: raw.list("sweep.amplitude")?.unwrap_or_else(|| vec![force.amplitude]),
            sweep_factor: raw.get("sweep.factor")?.unwrap_or(3.0),
            oseen,
            ramp_steps: raw.get("oseen.ramp_steps")?.unwrap_or(0),
            crosscheck_coarse: raw.get("crosscheck.coarse")?.unwrap_or(true),
            checks: raw.names("verify.checks"),
            good_circle_fields: raw.get("verify.good_circle_fields")?.unwrap_or(1000),
            verify_input: raw.get::<String>("verify.input")?.map(PathBuf::from),
            raw,
        };
        cfg.problem.force.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.problem.solver.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    /// Invading configurations for every `(lambda, amplitude)` of the sweep, lambda outer.
    pub fn sweep_configs(&self) -> Vec<InvadingConfig> {
        let mut out = Vec::new();
        for &lambda in &self.sweep_lambda {
            for &amplitude in &self.sweep_amplitude {
                let mut c = self.invade.clone();
                c.problem.lambda = lambda;
                c.problem.force.amplitude = amplitude;
                out.push(c);
            }
        }
        out
    }
}
