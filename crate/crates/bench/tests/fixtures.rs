//! The benchmark fixtures are valid, solvable problems.

use leray_bench::{disk_problem, fixed_point_config};
use leray_core::nse::solve_disk;
use leray_core::oseen::fixed_point_solve;

#[test]
fn disk_fixture_converges() {
    let p = disk_problem(4.0);
    p.validate().unwrap();
    let sol = solve_disk(&p, None).unwrap();
    assert!(sol.converged);
}

#[test]
fn fixed_point_fixture_contracts() {
    let cfg = fixed_point_config();
    cfg.validate().unwrap();
    assert!(fixed_point_solve(&cfg).unwrap().contraction < 1.0);
}
