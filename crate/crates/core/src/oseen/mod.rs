//! Oseen linearization about the uniform stream: the fundamental tensor,
//! lattice convolutions and bilinear forms, the weighted norms of the
//! perturbative theory, a fixed-point solver and the cross-checks against
//! disk solutions.

pub mod bessel;
pub mod checks;
pub mod fixed_point;
pub mod kernel;
pub mod lattice;
pub mod norms;

pub use fixed_point::{breakdown_ramp, RampStep, fixed_point_solve, FixedPointConfig, FixedPointSolution, IterationRecord};
pub use kernel::{oseen_tensor, OseenKernelSample};
pub use lattice::{KernelTable, Lattice, LatticeField};
pub use norms::{norm_ledger, NormLedger, Samples};
pub use checks::{
    decay_check, kernel_reports, random_pairs, uniqueness_crosscheck, validate_kernel, verify_bilinear_bounds, DecayLedger, DiskPerturbation,
    KernelValidation, Perturbation,
};
