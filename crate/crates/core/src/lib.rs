//! Simulation library for the pruning and fragmentation of critical and
//! sub-critical Lévy continuum random trees.
//!
//! The crate is organized around a pipeline: a branching mechanism
//! ([`mechanism`]) drives a discretized spectrally positive Lévy path
//! ([`sampler`]); excursions of the path above the running infimum code a
//! tree whose geometry is read off the height process ([`exploration`]);
//! Poisson marks on nodes and skeleton cut the tree into fragments
//! ([`fragmentation`]); and Monte Carlo estimates of the resulting
//! dislocation transforms are checked against closed-form oracles
//! ([`dislocation`]).

// validation tests are written as !(x > 0.0) on purpose: the negation
// rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dislocation;
pub mod error;
pub mod exploration;
pub mod fragmentation;
pub mod mechanism;
pub mod quad;
pub mod rmq;
pub mod rng;
pub mod rootfind;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use mechanism::{BranchingMechanism, LevyIntegralKind, LevyMeasure, SubordinatorModel};
pub use sampler::{ExcursionRecord, PathGrid, SamplerConfig, SubordinatorPath};
