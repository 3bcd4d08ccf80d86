//! Barron–Wiener–Laguerre models for causal operator learning.
//!
//! A model is the composition of three stages:
//!
//! 1. a bank of Laguerre filters ([`laguerre`]) turning a sampled input signal
//!    into a trajectory of fading-memory latent states,
//! 2. a random-feature map ([`features`]) applied pointwise to those states,
//! 3. a conjugate Bayesian linear readout ([`bayes`]) giving a posterior
//!    predictive mean and variance for every sample.
//!
//! [`model`] wires the stages together, [`sim`] generates the synthetic
//! systems used for benchmarking.

pub mod bayes;
pub mod error;
pub mod features;
pub mod laguerre;
pub mod model;
pub mod rng;
pub mod sim;

pub use bayes::{fit_least_squares, fit_posterior, GaussianPosterior, NoiseModel, PredictiveGaussian};
pub use error::{Error, Result};
pub use features::{Activation, FeatureKind, FeatureMap};
pub use laguerre::{DiscreteFilter, LaguerreBank, LaguerreConfig, LaguerreStateMatrices};
pub use model::{BwlConfig, FeatureSpec, FittedBwl, Metrics, PredictionResult, Rollout};
pub use rng::RngSeed;
pub use sim::{FourierInputSpec, TrajectoryData, TrimodalSpec};
