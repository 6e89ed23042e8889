//! Small games with exactly computable solutions, used as oracles.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActionSet, CaseStudyGame, ExpectationModel, Game, GameState, Outcome, Player, Region, Step};
use crate::error::{param, Result};
use crate::scalar::Real;

/// Deterministic game on cells of two intervals.
///
/// Each player owns `cells` equal-width cells of its interval (player one
/// `[0.1, 1.1]`, player two `[-1.1, -0.1]`). Rewards and transitions depend
/// only on the current cell: action `k` moves from cell `i` to cell
/// `clamp(i + moves[k])` of the opponent, landing on its center. Every state
/// of a cell therefore has the value of the cell, which is exactly solvable
/// on the `2 * cells` cell representatives.
///
/// Optional reward noise is uniform on `[-reward_noise, reward_noise]`;
/// transitions stay deterministic either way.
#[derive(Clone, Debug)]
pub struct GridChain<T> {
    cells: usize,
    moves: Vec<i64>,
    actions: ActionSet<T>,
    rewards: [Vec<Vec<T>>; 2],
    gamma: T,
    reward_noise: T,
    regions: [Region<T>; 2],
    r_max: T,
}

impl<T: Real> GridChain<T> {
    /// `rewards[p][cell][action]` with `p = 0` for player one.
    pub fn new(moves: Vec<i64>, rewards: [Vec<Vec<T>>; 2], gamma: T) -> Result<Self> {
        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(param("gamma must lie in [0, 1)"));
        }
        let cells = rewards[0].len();
        if cells == 0 || rewards[1].len() != cells {
            return Err(param("both players need the same non-zero number of cells"));
        }
        let actions = ActionSet::new(moves.iter().map(|&m| T::lit(m as f64)).collect())?;
        for table in &rewards {
            for row in table {
                crate::error::check_len(moves.len(), row.len())?;
                if row.iter().any(|r| !r.is_finite()) {
                    return Err(param("rewards must be finite"));
                }
            }
        }
        let r_max = rewards
            .iter()
            .flatten()
            .flatten()
            .fold(T::zero(), |m, r| m.max(r.abs()));
        let l = T::lit;
        Ok(GridChain {
            cells,
            moves,
            actions,
            rewards,
            gamma,
            reward_noise: T::zero(),
            regions: [
                Region::interval(l(0.1), l(1.1), Player::P1),
                Region::interval(l(-1.1), l(-0.1), Player::P2),
            ],
            r_max,
        })
    }

    /// Rewards drawn uniformly from `[-1, 1]` with a seeded generator.
    pub fn random(cells: usize, moves: Vec<i64>, gamma: T, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = || -> Vec<Vec<T>> {
            (0..cells)
                .map(|_| {
                    moves
                        .iter()
                        .map(|_| T::lit(rng.gen_range(-1.0..=1.0)))
                        .collect()
                })
                .collect()
        };
        let p1 = table();
        let p2 = table();
        Self::new(moves.clone(), [p1, p2], gamma)
    }

    /// Adds uniform reward noise of the given half-width.
    pub fn with_reward_noise(mut self, half_width: T) -> Self {
        self.r_max = self.r_max - self.reward_noise + half_width;
        self.reward_noise = half_width;
        self
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn moves(&self) -> &[i64] {
        &self.moves
    }

    pub fn reward_noise(&self) -> T {
        self.reward_noise
    }

    pub fn reward(&self, player: Player, cell: usize, action: usize) -> T {
        self.rewards[player.index()][cell][action]
    }

    fn cell_width(&self) -> T {
        T::one() / T::lit(self.cells as f64)
    }

    /// Cell containing the state, clamped at the interval ends.
    pub fn cell_of(&self, state: &GameState<T>) -> usize {
        let lo = self.regions[state.player.index()].lo[0];
        let raw = ((state.x() - lo) / self.cell_width()).floor();
        let raw = raw.to_i64().unwrap_or(0);
        raw.clamp(0, self.cells as i64 - 1) as usize
    }

    pub fn cell_center(&self, player: Player, cell: usize) -> GameState<T> {
        let lo = self.regions[player.index()].lo[0];
        let w = self.cell_width();
        GameState::scalar(lo + w * (T::lit(cell as f64) + T::lit(0.5)), player)
    }

    /// Index of a cell in player-major order (player one first).
    pub fn flat_index(&self, player: Player, cell: usize) -> usize {
        player.index() * self.cells + cell
    }

    pub fn next_cell(&self, cell: usize, action: usize) -> usize {
        (cell as i64 + self.moves[action]).clamp(0, self.cells as i64 - 1) as usize
    }
}

impl<T: Real> Game<T> for GridChain<T> {
    fn gamma(&self) -> T {
        self.gamma
    }

    fn r_max(&self) -> T {
        self.r_max
    }

    fn actions(&self, _state: &GameState<T>) -> &ActionSet<T> {
        &self.actions
    }

    fn regions(&self) -> &[Region<T>] {
        &self.regions
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn next_state(&self, state: &GameState<T>, action: usize) -> Result<GameState<T>> {
        self.actions.label(action)?;
        let cell = self.next_cell(self.cell_of(state), action);
        Ok(self.cell_center(state.player.opponent(), cell))
    }

    fn sample_step(
        &self,
        state: &GameState<T>,
        action: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Step<T>> {
        let next = self.next_state(state, action)?;
        let mut reward = self.reward(state.player, self.cell_of(state), action);
        if self.reward_noise > T::zero() {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            reward = reward + self.reward_noise * T::lit(u);
        }
        Ok(Step { next, reward })
    }

    fn mean_reward(&self, state: &GameState<T>, action: usize) -> Option<T> {
        (action < self.moves.len()).then(|| self.reward(state.player, self.cell_of(state), action))
    }

    fn outcomes(&self, state: &GameState<T>, action: usize) -> Option<Vec<Outcome<T>>> {
        let next = self.next_state(state, action).ok()?;
        let reward = Game::mean_reward(self, state, action)?;
        Some(vec![Outcome {
            prob: T::one(),
            next,
            reward,
        }])
    }
}

impl<T: Real> ExpectationModel<T> for GridChain<T> {
    fn num_states(&self) -> usize {
        2 * self.cells
    }

    fn player(&self, state: usize) -> Player {
        if state < self.cells {
            Player::P1
        } else {
            Player::P2
        }
    }

    fn num_actions(&self, _state: usize) -> usize {
        self.moves.len()
    }

    fn gamma(&self) -> T {
        self.gamma
    }

    fn mean_reward(&self, state: usize, action: usize) -> T {
        let player = ExpectationModel::player(self, state);
        self.reward(player, state % self.cells, action)
    }

    fn expected_value(&self, state: usize, action: usize, values: &[T]) -> T {
        let player = ExpectationModel::player(self, state);
        let next = self.next_cell(state % self.cells, action);
        values[self.flat_index(player.opponent(), next)]
    }
}

/// The benchmark game with its Gaussian noise replaced by `a ± delta`, each
/// with probability one half. Finite support makes exact expectimax
/// computable.
#[derive(Clone, Debug)]
pub struct TwoPointNoiseGame<T> {
    base: CaseStudyGame<T>,
    delta: T,
}

impl<T: Real> TwoPointNoiseGame<T> {
    pub fn new(delta: T) -> Result<Self> {
        if !(delta >= T::zero() && delta.is_finite()) {
            return Err(param("delta must be a finite non-negative number"));
        }
        Ok(TwoPointNoiseGame {
            base: CaseStudyGame::new(),
            delta,
        })
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn base(&self) -> &CaseStudyGame<T> {
        &self.base
    }
}

impl<T: Real> Game<T> for TwoPointNoiseGame<T> {
    fn gamma(&self) -> T {
        self.base.gamma()
    }

    fn r_max(&self) -> T {
        self.base.r_max()
    }

    fn actions(&self, state: &GameState<T>) -> &ActionSet<T> {
        self.base.actions(state)
    }

    fn regions(&self) -> &[Region<T>] {
        self.base.regions()
    }

    fn is_deterministic(&self) -> bool {
        self.delta == T::zero()
    }

    fn next_state(&self, state: &GameState<T>, action: usize) -> Result<GameState<T>> {
        if !self.is_deterministic() {
            return Err(crate::EisError::UnsupportedDynamics(
                "two-point noise game is stochastic".into(),
            ));
        }
        let a = self.base.action_set().label(action)?;
        Ok(self.base.step_with_noise(state, action, a)?.next)
    }

    fn sample_step(
        &self,
        state: &GameState<T>,
        action: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Step<T>> {
        let a = self.base.action_set().label(action)?;
        let z = if rng.gen_bool(0.5) {
            a + self.delta
        } else {
            a - self.delta
        };
        self.base.step_with_noise(state, action, z)
    }

    fn mean_reward(&self, state: &GameState<T>, action: usize) -> Option<T> {
        self.base.mean_reward(state, action)
    }

    fn outcomes(&self, state: &GameState<T>, action: usize) -> Option<Vec<Outcome<T>>> {
        let a = self.base.action_set().label(action).ok()?;
        let half = T::lit(0.5);
        [a + self.delta, a - self.delta]
            .into_iter()
            .map(|z| {
                let step = self.base.step_with_noise(state, action, z).ok()?;
                Some(Outcome {
                    prob: half,
                    next: step.next,
                    reward: step.reward,
                })
            })
            .collect()
    }
}
