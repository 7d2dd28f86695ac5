//! Numerical lab for population gradient methods on a single ReLU neuron with bias.
//!
//! The learner and target are σ(w̃ᵀx̃ + b_w) and σ(ṽᵀx̃ + b_v). Inputs are
//! lifted to x = (x̃, 1) so both are bias-free neurons on R^{d+1}.
//!
//! All numerical code is generic over [`Scalar`]; the aliases below fix the
//! 64-bit instantiation used by experiments and the command line.

pub mod distributions;
pub mod experiments;
pub mod error;
pub mod objective;
pub mod optimizer;
pub mod params;
pub mod quad;
pub mod rng;
pub mod scalar;
pub mod theory;

pub use error::{LabError, Result};
pub use scalar::Scalar;

pub type Params = params::NeuronParams<f64>;
pub type Distribution = distributions::InputDistribution<f64>;
pub type Engine = objective::GradientEngine<f64>;
pub type Objective64 = objective::Objective<f64>;
