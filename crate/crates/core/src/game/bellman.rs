use super::Player;
use crate::error::{check_len, Result};
use crate::scalar::{argmax, argmin, Real};

/// A tabulated game: a finite state set with exact one-step expectations.
///
/// `expected_value(s, a, v)` must return `E[v(s') | s, a]` for a value table
/// `v` indexed like the states.
pub trait ExpectationModel<T: Real> {
    fn num_states(&self) -> usize;
    fn player(&self, state: usize) -> Player;
    fn num_actions(&self, state: usize) -> usize;
    fn gamma(&self) -> T;
    fn mean_reward(&self, state: usize, action: usize) -> T;
    fn expected_value(&self, state: usize, action: usize, values: &[T]) -> T;
}

/// `Q(s, a) = E r(s, a) + gamma E v(s')` for every tabulated state.
pub fn bellman_q<T: Real, M: ExpectationModel<T> + ?Sized>(
    values: &[T],
    model: &M,
) -> Result<Vec<Vec<T>>> {
    check_len(model.num_states(), values.len())?;
    let gamma = model.gamma();
    Ok((0..model.num_states())
        .map(|s| {
            (0..model.num_actions(s))
                .map(|a| model.mean_reward(s, a) + gamma * model.expected_value(s, a, values))
                .collect()
        })
        .collect())
}

/// Max over actions for the maximizer, min for the minimizer, with the
/// lowest action index winning ties. Returns the value and the chosen index.
pub fn backup<T: Real>(q: &[T], player: Player) -> (T, usize) {
    let best = match player {
        Player::P1 => argmax(q),
        Player::P2 => argmin(q),
    }
    .expect("backup over an empty action set");
    (q[best], best)
}

/// One application of the game Bellman operator.
pub fn bellman_apply<T: Real, M: ExpectationModel<T> + ?Sized>(
    values: &[T],
    model: &M,
) -> Result<Vec<T>> {
    let q = bellman_q(values, model)?;
    Ok(q.iter()
        .enumerate()
        .map(|(s, row)| backup(row, model.player(s)).0)
        .collect())
}
