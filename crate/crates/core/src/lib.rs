// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Recursive state estimation for linear systems with Gaussian process noise
//! and non-Gaussian measurement noise.
//!
//! The centerpiece is [`estimators::dpkf`], a MAP-style filter that replaces
//! the measurement log-likelihood with a quadratic anchored at the noise mode
//! and matched to its gradient at the current innovation. Around it sit the
//! baselines it is compared against (moment-matched Kalman filter, Masreliez
//! score-function filter, maximum-correntropy KF, bootstrap particle filter)
//! and a deterministic Monte Carlo harness.

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod noise;
pub mod quadratic;
pub mod simulation;

pub use error::{ConfigError, FilterError, MathError, NoiseError};

pub use estimators::{EstimatorKind, GaussianBelief, LinearSystem, MrSafeguardConfig};
pub use linalg::{Matrix, SymPdMatrix, Vector};
pub use noise::{GaussianSpec, NoiseModel};
pub use quadratic::QuadraticForm;
pub use simulation::{run_monte_carlo, ExperimentConfig};
