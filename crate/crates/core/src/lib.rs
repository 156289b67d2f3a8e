//! Numerical laboratory for configuration spaces over Euclidean windows.
//!
//! * [`point_config`]: finite configurations, windows, labelings.
//! * [`transport`]: the extended L²-transportation distance `d_Υ`, optimal matchings,
//!   constrained point-to-set distances and McShane extensions.
//! * [`samplers`]: Poisson, mixed Poisson, finite-volume Gibbs and Ginibre samplers, plus
//!   Monte Carlo checks of the Poisson identities.
//! * [`cylinder`]: cylinder functions and their lifted square field.
//! * [`diffusion`]: interacting Brownian particles and semigroup-level estimators.
//!
//! The geometric core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the crate
//! root fix `f64`, which is what the stochastic modules use.

pub mod cylinder;
pub mod diffusion;
pub mod error;
pub mod parallel;
pub mod point_config;
pub mod samplers;
pub mod scalar;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
pub use point_config::CountMode;
pub use scalar::Scalar;
pub use transport::McShaneSide;

pub type Point = point_config::Point<f64>;
pub type Configuration = point_config::Configuration<f64>;
pub type Window = point_config::Window<f64>;
pub type LabeledSequence = point_config::LabeledSequence<f64>;
pub type ExtendedDistance = transport::ExtendedDistance<f64>;
pub type Matching = transport::Matching<f64>;
