//! Correlations in local measurements (CLM) of bipartite many-body spin
//! states.
//!
//! The crate computes the total variation distance between the joint
//! statistics of two local collective-spin measurements and the product of
//! their marginals, for exactly simulated spin-1/2 states: Haar random
//! states, one-axis-twisted spin squeezed states and Heisenberg XXZ ground
//! states. It also covers finite-resolution (Gaussian coarse-grained)
//! measurements, the variance-based macroscopicity that bounds them, and the
//! Bell-CHSH function built from dichotomized coarse-grained observables.

pub mod error;
pub mod statecore;
pub mod statelib;
pub mod povm;
pub mod optim;
pub mod clm;
pub mod xxz;
pub mod macroscopicity;
pub mod coarse;
pub mod experiments;

pub use error::{ClmError, Result};
