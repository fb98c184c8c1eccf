//! Deadtime fraction (DTF) of a multiplexed photon-counting detector array.
//!
//! A 1-by-N switch routes each incoming photon (or pulse) to the first live
//! detector of a pool. This crate computes the fraction of events lost when
//! every detector is dead, both from closed-form effective-deadtime
//! recursions ([`analytic`]) and from Monte Carlo cascades ([`simulate`]),
//! for CW Poisson and pulsed sources. [`solve`] inverts DTF curves to find the
//! operating rate at a target DTF and fits the rate-vs-pool-size trend.

pub mod analytic;
pub mod dist;
mod error;
pub mod simulate;
pub mod solve;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    dead_pulse_count, CwSource, DeadPulseCount, DetectorPool, DtfEstimate, PulsedSource,
    RandomStream, Source, SwitchPolicy,
};
