//! Fixed problem instances shared by the benchmarks.

use leray_core::forcing::{ForceFamily, ForceSpec};
use leray_core::nse::{GridSpec, ProblemConfig, SolverControls};
use leray_core::oseen::FixedPointConfig;

/// Small-data disk problem with a net force, unit far speed and support radius 1.
pub fn disk_problem(r_k: f64) -> ProblemConfig {
    ProblemConfig {
        lambda: 1.0,
        force: ForceSpec::new(ForceFamily::BumpNet, 1.0, 0.05),
        r_k,
        grid: GridSpec::default(),
        solver: SolverControls::default(),
    }
}

/// Fixed-point configuration on a coarse lattice (`half_width` 4, spacing 0.25).
pub fn fixed_point_config() -> FixedPointConfig {
    FixedPointConfig { half_width: 4.0, spacing: 0.25, estimate_error: false, ..FixedPointConfig::new(1.0, disk_problem(2.0).force) }
}
