//! Echo state networks driven by rescaled Rademacher inputs, and their total
//! memory capacity.
//!
//! The crate covers the pieces needed to show that the memory capacity of a
//! fixed nonlinear reservoir is set by the input scale alone:
//!
//! - [`ensembles`]: orthogonal, sparse conditioned and dense Gaussian
//!   connectivity matrices, spectral normalization, input masks.
//! - [`activations`]: the piecewise sigmoid (exactly linear near zero,
//!   exactly saturated far from it), tanh, ReLU, LogSig and the identity.
//! - [`dynamics`]: the state recursion, saturation/linearity thresholds,
//!   extreme states and regime classification.
//! - [`capacity`]: the covariance-based capacity estimator and the
//!   analytic oracle for the linear network.
//! - [`experiment`]: reproducible, parallel sigma sweeps with CSV and SVG
//!   output.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example` lists
//! them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod activations;
pub mod capacity;
pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod experiment;
pub mod rng;

pub use activations::Activation;
pub use capacity::{
    estimate_mc_tau, estimate_total_mc, linear_mc_oracle, CapacityProfile, EstimatorConfig, Ridge,
};
pub use dynamics::{
    classify_regime, compute_thresholds, extreme_states, generate_inputs, run, ExtremeStates,
    InputProcess, Regime, RegimeThresholds, Trajectory,
};
pub use ensembles::{Ensemble, ReservoirSpec};
pub use error::{Error, Result};
pub use experiment::{run_sweep, SweepConfig, SweepResult};
