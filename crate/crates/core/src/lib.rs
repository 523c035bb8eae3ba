//! Activation-function kernels (APTx, MISH, SWISH, the ReLU family, sigmoid
//! and tanh) with hand-written analytic derivatives, plus the machinery used
//! to check and compare them: finite-difference and minimization oracles,
//! approximation-error analysis, an operation-cost model, throughput
//! benchmarks and a from-scratch MLP trainer.
//!
//! Every activation is a strategy behind the [`Activation`] trait. Strategies
//! are looked up by name in a [`Registry`]; [`ActivationSpec`] is the
//! configuration value that selects one and carries its parameters.

pub mod activation;
pub mod analysis;
pub mod calculus;
mod error;
pub mod figures;
pub mod nn;
pub mod perf;
pub mod verify;

pub use activation::{
    eval, eval_batch, eval_grad, mish_grad_closed_form, Activation, ActivationSpec, Kind, Registry,
    ValueGrad,
};
pub use error::{Error, Result};
