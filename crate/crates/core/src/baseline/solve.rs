use crate::error::Result;
use crate::game::toy::GridChain;
use crate::game::{backup, bellman_q, boltzmann_policy, ExpectationModel, GameState};
use crate::metrics::Distribution;
use crate::scalar::Real;

/// Tabulated output of value iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct ViSolution<T> {
    /// `V_k = backup(Q_k)`, so `values[s]` is exactly the max (player one)
    /// or min (player two) of `q[s]`.
    pub values: Vec<T>,
    /// `Q_k = r + gamma E V_{k-1}` from the last sweep.
    pub q: Vec<Vec<T>>,
    /// `||V_k - V_{k-1}||_inf` per sweep, starting from `V_0 = 0`.
    pub residuals: Vec<T>,
}

/// Value iteration from `V_0 = 0` for at most `iterations` sweeps, stopping
/// early once the sup residual falls to `tolerance`.
pub fn value_iteration<T: Real, M: ExpectationModel<T> + ?Sized>(
    model: &M,
    iterations: usize,
    tolerance: T,
) -> Result<ViSolution<T>> {
    let n = model.num_states();
    let mut values = vec![T::zero(); n];
    let mut q = (0..n).map(|s| vec![T::zero(); model.num_actions(s)]).collect();
    let mut residuals = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        q = bellman_q(&values, model)?;
        let next: Vec<T> = q
            .iter()
            .enumerate()
            .map(|(s, row)| backup(row, model.player(s)).0)
            .collect();
        let residual = next
            .iter()
            .zip(&values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max);
        values = next;
        residuals.push(residual);
        if residual <= tolerance {
            break;
        }
    }
    Ok(ViSolution { values, q, residuals })
}

/// Boltzmann transform of every row of a tabulated `Q`.
pub fn reference_boltzmann<T: Real, M: ExpectationModel<T> + ?Sized>(
    q: &[Vec<T>],
    model: &M,
    tau: T,
) -> Result<Vec<Distribution<T>>> {
    q.iter()
        .enumerate()
        .map(|(s, row)| boltzmann_policy(row, tau, model.player(s)))
        .collect()
}

/// Exact solution of a grid-chain game on its cell representatives.
#[derive(Clone, Debug)]
pub struct ExactSolution<T> {
    pub values: Vec<T>,
    pub q: Vec<Vec<T>>,
    pub residual: T,
    cells: usize,
    lo: [T; 2],
}

impl<T: Real> ExactSolution<T> {
    fn index(&self, state: &GameState<T>) -> usize {
        let p = state.player.index();
        let raw = ((state.x() - self.lo[p]) * T::lit(self.cells as f64)).floor();
        let cell = raw.to_i64().unwrap_or(0).clamp(0, self.cells as i64 - 1) as usize;
        p * self.cells + cell
    }

    /// `V*` at any state of the game.
    pub fn value_at(&self, state: &GameState<T>) -> T {
        self.values[self.index(state)]
    }

    pub fn q_at(&self, state: &GameState<T>) -> &[T] {
        &self.q[self.index(state)]
    }
}

/// Fixed point of a grid chain by value iteration to a `1e-12` residual.
pub fn brute_force_solve<T: Real>(game: &GridChain<T>) -> Result<ExactSolution<T>> {
    let sol = value_iteration(game, 100_000, T::lit(1e-12))?;
    let residual = *sol.residuals.last().unwrap_or(&T::zero());
    // one more sweep makes Q consistent with the returned values
    let q = bellman_q(&sol.values, game)?;
    let values = q
        .iter()
        .enumerate()
        .map(|(s, row)| backup(row, game.player(s)).0)
        .collect();
    Ok(ExactSolution {
        values,
        q,
        residual,
        cells: game.cells(),
        lo: [T::lit(0.1), T::lit(-1.1)],
    })
}
