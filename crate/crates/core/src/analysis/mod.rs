//! Checks on the `T`-skeleton of the Fleming-Viot chain: the drift of
//! `exp(delta * max)`, the `log N` growth of the stationary rightmost walk,
//! and a truncated quasi-stationary distribution for comparison with the
//! empirical measure.

pub mod foster;
pub mod qsd;
pub mod scaling;

pub use foster::{check_foster_drift, parse_start_grid, DriftReport, DriftRow, Region};
pub use qsd::{compare_empirical_to_qsd, compute_qsd_oracle, QsdComparison, QsdOracle};
pub use scaling::{stationary_scaling, ScalingReport, ScalingRow};
