//! Improvement oracles: given the current model and a query state, return
//! sharper value and policy estimates.

mod mcts;
mod schedule;
mod sparse;

use serde::{Deserialize, Serialize};

use crate::game::GameState;
use crate::metrics::Distribution;
use crate::scalar::Real;

pub use mcts::{fixed_depth_mcts, improvement_query, MctsConfig, SearchTree, UcbConstants};
pub use schedule::{mcts_depth_schedule, mcts_sim_schedule, Scheduled};
pub use sparse::{sparse_sampling_estimate, sparse_sampling_query, sparse_sample_count, SamplingMode};

/// A value estimate and an action distribution for every state.
///
/// Models must be immutable while improvement queries run against them.
pub trait Model<T: Real>: Send + Sync {
    fn value(&self, state: &GameState<T>) -> T;
    fn policy(&self, state: &GameState<T>) -> Distribution<T>;
}

impl<T: Real, M: Model<T> + ?Sized> Model<T> for &M {
    fn value(&self, state: &GameState<T>) -> T {
        (**self).value(state)
    }
    fn policy(&self, state: &GameState<T>) -> Distribution<T> {
        (**self).policy(state)
    }
}

/// `V ≡ 0` with a uniform policy; the starting point of every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformZeroModel {
    pub actions: usize,
}

impl<T: Real> Model<T> for UniformZeroModel {
    fn value(&self, _state: &GameState<T>) -> T {
        T::zero()
    }
    fn policy(&self, _state: &GameState<T>) -> Distribution<T> {
        Distribution::uniform(self.actions)
    }
}

/// Model backed by a value closure, with a uniform policy.
pub struct ValueFnModel<F> {
    value: F,
    actions: usize,
}

impl<F> ValueFnModel<F> {
    pub fn new(actions: usize, value: F) -> Self {
        ValueFnModel { value, actions }
    }
}

impl<T: Real, F> Model<T> for ValueFnModel<F>
where
    F: Fn(&GameState<T>) -> T + Send + Sync,
{
    fn value(&self, state: &GameState<T>) -> T {
        (self.value)(state)
    }
    fn policy(&self, _state: &GameState<T>) -> Distribution<T> {
        Distribution::uniform(self.actions)
    }
}

/// Output of one improvement query.
///
/// `v_hat` is the max (player one) or min (player two) of `q_hat`, and
/// `pi_hat` its Boltzmann transform at the query temperature.
#[derive(Clone, Debug, PartialEq)]
pub struct ImprovementResult<T> {
    pub v_hat: T,
    pub pi_hat: Distribution<T>,
    pub q_hat: Vec<T>,
    pub samples_used: u64,
}
