//! Simulation and verification toolkit for stabilizing functionals of
//! Poisson point processes.
//!
//! * [`special_fn`]: Gamma, `2F1` and the limiting constants of the
//!   directed nearest-neighbour functional on the line.
//! * [`regions`]: unions of boxes, boundary distances, cube coverings.
//! * [`point_process`]: reproducible Poisson and binomial samplers.
//! * [`functionals`]: nearest-neighbour functionals, statistics and the
//!   stabilization probe.
//! * [`experiments`]: the Monte Carlo engine and CLT diagnostics.
//! * [`config`] / [`cli`]: JSON run configs and the command-line driver.
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod point_process;
pub mod regions;
pub mod rng;
pub mod special_fn;
pub mod stats;

pub use error::{Error, Result};
