//! Rescaling `(f, lambda, R) -> (tau^3 f(tau z), tau lambda, R / tau)` maps
//! solutions to `tau w(tau z)` and leaves every normalized ratio unchanged.

use leray_core::estimates::verify_solution;
use leray_core::forcing::{ForceFamily, ForceSpec};
use leray_core::nse::{solve_disk, GridSpec, ProblemConfig, SolverControls};
use proptest::prelude::*;

fn base(amplitude: f64, lambda: f64) -> ProblemConfig {
    ProblemConfig {
        lambda,
        force: ForceSpec::new(ForceFamily::BumpNet, 1.0, amplitude),
        r_k: 8.0,
        grid: GridSpec { max_stretch: 1.01, ..GridSpec::default() },
        solver: SolverControls::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn ratios_and_fields_are_scale_invariant(tau in 0.5f64..3.0, amplitude in 0.02f64..0.5, lambda in 0.5f64..2.0) {
        let p = base(amplitude, lambda);
        let a = solve_disk(&p, None).unwrap();
        let b = solve_disk(&p.rescaled(tau), None).unwrap();
        let ra = verify_solution(&a).unwrap();
        let rb = verify_solution(&b).unwrap();
        prop_assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert_eq!(&x.name, &y.name);
            let scale = x.ratio.abs().max(y.ratio.abs());
            if scale > 1e-8 && scale < 1e300 {
                prop_assert!((x.ratio - y.ratio).abs() <= 1e-4 * scale, "{} {} {}", x.name, x.ratio, y.ratio);
            }
        }
        let (ax, ay) = a.w.cartesian_fields();
        let (bx, by) = b.w.cartesian_fields();
        let size = ax.values.iter().chain(&ay.values).fold(0.0f64, |m, v| m.max(tau * v.abs()));
        for i in 0..ax.values.len() {
            prop_assert!((bx.values[i] - tau * ax.values[i]).abs() <= 1e-8 * size);
            prop_assert!((by.values[i] - tau * ay.values[i]).abs() <= 1e-8 * size);
        }
        prop_assert!((b.energy.dirichlet - tau * tau * a.energy.dirichlet).abs() <= 1e-8 * b.energy.dirichlet.max(1e-300));
    }
}
