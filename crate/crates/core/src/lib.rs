//! Fleming-Viot systems of drifted nearest-neighbour random walks.
//!
//! `N` walks live on `{1, 2, ...}`, step right at rate `p` and left at rate
//! `q = 1 - p > p`. A walk stepping onto the origin is instantly moved to the
//! position of one of the other `N - 1` walks, chosen uniformly. The crate
//! provides an exact event-driven simulator for this system together with the
//! machinery used to study its rightmost particle:
//!
//! * [`rates`]: the log-MGF of the centered increment, its rate function and
//!   the Poissonised rate, plus exact Poisson tails against Chernoff bounds.
//! * [`model`]: parameters, configurations, the `T = A log N` schedule and
//!   reproducible random streams.
//! * [`sim`]: the Gillespie kernel, trajectory statistics, stationary sampling.
//! * [`branching`]: the dominating multitype branching random walk.
//! * [`coloring`]: the black/red/green coupling and bad-set estimators.
//! * [`analysis`]: drift checks on the `T`-skeleton, stationary scaling in
//!   `log N`, and a truncated quasi-stationary distribution oracle.
//! * [`cli`]: the `fvlab` command line front end.

// `!(x > 0.0)` is used on purpose so that NaN lands in the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod branching;
pub mod cli;
pub mod coloring;
pub mod config;
pub mod error;
pub mod model;
pub mod output;
pub mod rates;
pub mod replicas;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use model::{Configuration, RngStream, Schedule, WalkParams};
