//! Explore-Improve-Supervise (EIS) for two-player turn-based zero-sum Markov
//! games with continuous state.
//!
//! The crate provides the game abstraction ([`game`]), the improvement
//! oracles ([`improvement`]: fixed-depth MCTS for deterministic games and
//! sparse sampling for stochastic ones), nearest-neighbor supervised learning
//! over box partitions ([`supervised`]), exploration policies with a coverage
//! harness ([`exploration`]), the outer loop ([`driver`]) and a value-iteration
//! baseline with CSV/SVG reporting ([`baseline`]).
//!
//! All numerics are generic over [`Real`]; the aliases at the crate root fix
//! the scalar to `f64`, which is what the CLI and the acceptance suite use.

pub mod baseline;
pub mod config;
pub mod driver;
mod error;
pub mod exploration;
pub mod game;
pub mod improvement;
pub mod metrics;
pub mod rng;
mod scalar;
pub mod supervised;

pub use error::{EisError, Result};
pub use scalar::{argmax, argmin, Real};

/// Double-precision instantiations.
pub type State = game::GameState<f64>;
pub type Dist = metrics::Distribution<f64>;
pub type CaseStudy = game::CaseStudyGame<f64>;
pub type GridChain = game::toy::GridChain<f64>;
pub type TwoPointNoise = game::toy::TwoPointNoiseGame<f64>;
pub type NnModel = supervised::NnModel<f64>;
pub type Partition = supervised::Partition<f64>;
pub type MctsConfig = improvement::MctsConfig<f64>;
pub type EisConfig = driver::EisConfig<f64>;
pub type IterationReport = driver::IterationReport<f64>;
pub type DiscretizedGame = baseline::DiscretizedGame<f64>;
