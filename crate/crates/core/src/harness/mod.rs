//! Lattice sums over `{F(ℓ, m) ≤ X}` and the experiments built on them.

pub mod experiments;
pub mod lambda;
pub mod lattice;
pub mod naive;
pub mod report;
pub mod sums;

pub use experiments::{
    amn_crosscheck, bilinear_experiment, corollary2_experiment, fi_crosscheck, level_experiment,
    theorem1_experiment, RunOptions,
};
pub use lambda::{LambdaKind, LambdaSpec};
pub use lattice::lattice_iterate;
pub use report::{ExperimentConfig, ExperimentReport};
pub use sums::{SieveHarness, Twist};
