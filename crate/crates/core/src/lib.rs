//! Thermodynamic evaluation of a simple genetic algorithm.
//!
//! The population of a GA running on a spin-glass cost function is tracked by
//! a Gibbs distribution whose temperature is learned generation by generation.
//! The resulting effective-temperature schedule, together with the residual
//! energy, is then analysed as an annealing schedule.
//!
//! Modules, bottom-up:
//! * [`spins`]: configurations, disorder, chain and SK Hamiltonians.
//! * [`analytic`]: thermodynamic-limit oracles (quadrature, RS equations).
//! * [`mcmc`]: Metropolis sampling and exact enumeration.
//! * [`ga`]: the simple GA.
//! * [`learner`]: the effective-temperature learning equation.
//! * [`analysis`]: residual energy, power-law fits, Holland's condition.
//! * [`experiment`]: configs, presets and campaign orchestration.

pub mod analysis;
pub mod analytic;
pub mod error;
pub mod experiment;
pub mod ga;
pub mod learner;
pub mod mcmc;
pub mod rng;
pub mod spins;

pub use error::{Error, Result};
