//! Loss-optimal singular-value shrinkage for denoising low-rank matrices
//! observed in white noise.
//!
//! An m×n data matrix Y = X + noise, with X of low rank and the noise
//! entries white with variance σ²/n, has singular values that are biased
//! upward and singular vectors that are tilted. In the large-matrix limit
//! with aspect ratio β = m/n, both effects are known in closed form, which
//! makes it possible to pick, for a given loss function, the exact amount
//! by which each data singular value should be shrunk. This crate provides:
//!
//! - the limiting spike model (bias map, its inverse, cosines of the
//!   singular-vector rotations) — [`spike_model`];
//! - the 2×2 block reduction of unitarily invariant losses and the built-in
//!   frobenius / operator / nuclear families — [`losses`];
//! - closed-form optimal shrinkers and baselines — [`shrinkers`];
//! - a numerical minimizer that builds optimal shrinkers for custom losses
//!   and evaluates asymptotic losses — [`solver`];
//! - noise-level estimation from the singular-value bulk — [`noise`];
//! - end-to-end matrix denoising — [`denoise`];
//! - Monte Carlo verification of the asymptotic predictions — [`montecarlo`].

pub mod cli;
pub mod denoise;
pub mod error;
pub mod losses;
pub mod montecarlo;
pub mod noise;
pub mod shrinkers;
pub mod solver;
pub mod spike_model;
mod util;

pub use denoise::{denoise, DenoiseReport, Matrix};
pub use error::{Error, Result};
pub use losses::{builtin_losses, BuiltinLoss, Decomposability, LossFamily};
pub use montecarlo::{NoiseKind, SimConfig, SimSummary};
pub use noise::{mp_median, sigma_hat, MpDistribution};
pub use shrinkers::{
    baseline_shrinkers, frobenius_shrinker, nuclear_shrinker, operator_shrinker,
    optimal_shrinker, recalibrate, Shrinker,
};
pub use solver::{
    asymptotic_loss, build_optimal_shrinker, crossing_point, optimal_eta, reduced_loss,
    TabulatedShrinker,
};
pub use spike_model::SpikeModel;
