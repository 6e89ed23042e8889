use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{ImprovementResult, Model};
use crate::error::{param, EisError, Result};
use crate::game::{backup, boltzmann_policy, Game, GameState};
use crate::scalar::Real;

/// How children of a sparse-sampling node are generated.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMode {
    /// `width` independent draws from the generative model per action.
    Sampled,
    /// Every outcome of a finite-support game with its exact probability;
    /// `width` is ignored.
    Exhaustive,
}

struct Sparse<'a, T: Real, G: ?Sized, M: ?Sized> {
    game: &'a G,
    leaf: &'a M,
    width: usize,
    mode: SamplingMode,
    clip: T,
    samples: u64,
}

impl<T, G, M> Sparse<'_, T, G, M>
where
    T: Real,
    G: Game<T> + ?Sized,
    M: Model<T> + ?Sized,
{
    /// Mean of `reward + gamma * child` for one action.
    fn action_value(
        &mut self,
        state: &GameState<T>,
        action: usize,
        depth: usize,
        rng: &mut dyn RngCore,
    ) -> Result<T> {
        let gamma = self.game.gamma();
        match self.mode {
            SamplingMode::Sampled => {
                let mut acc = T::zero();
                for _ in 0..self.width {
                    let step = self.game.sample_step(state, action, rng)?;
                    self.samples += 1;
                    acc = acc + step.reward + gamma * self.value(&step.next, depth - 1, rng)?;
                }
                Ok(acc / T::lit(self.width as f64))
            }
            SamplingMode::Exhaustive => {
                let outcomes = self.game.outcomes(state, action).ok_or_else(|| {
                    EisError::Unsupported("exhaustive mode needs finite-support dynamics".into())
                })?;
                let mut acc = T::zero();
                for o in outcomes {
                    acc = acc + o.prob * (o.reward + gamma * self.value(&o.next, depth - 1, rng)?);
                }
                Ok(acc)
            }
        }
    }

    fn q_values(&mut self, state: &GameState<T>, depth: usize, rng: &mut dyn RngCore) -> Result<Vec<T>> {
        (0..self.game.actions(state).len())
            .map(|a| self.action_value(state, a, depth, rng))
            .collect()
    }

    fn value(&mut self, state: &GameState<T>, depth: usize, rng: &mut dyn RngCore) -> Result<T> {
        if depth == 0 {
            return Ok(self.leaf.value(state).clip_abs(self.clip));
        }
        let q = self.q_values(state, depth, rng)?;
        Ok(backup(&q, state.player).0.clip_abs(self.clip))
    }
}

fn check(width: usize, mode: SamplingMode) -> Result<()> {
    if width == 0 && mode == SamplingMode::Sampled {
        return Err(param("sparse sampling width must be at least 1"));
    }
    Ok(())
}

/// Depth-`depth` sparse-sampling estimate of the value at `state`.
///
/// Leaves are valued by `leaf_model`; each internal node averages
/// `reward + gamma * child` over its children per action and then takes the
/// max (player one) or min (player two). Node estimates are clipped to
/// `[-v_max, v_max]`.
pub fn sparse_sampling_estimate<T, G, M>(
    game: &G,
    state: &GameState<T>,
    leaf_model: &M,
    depth: usize,
    width: usize,
    mode: SamplingMode,
    rng: &mut dyn RngCore,
) -> Result<T>
where
    T: Real,
    G: Game<T> + ?Sized,
    M: Model<T> + ?Sized,
{
    check(width, mode)?;
    let mut s = Sparse {
        game,
        leaf: leaf_model,
        width,
        mode,
        clip: game.v_max(),
        samples: 0,
    };
    s.value(state, depth, rng)
}

/// Transitions drawn by one sampled-mode query: `sum_{k=1..H} (|A| C)^k`.
pub fn sparse_sample_count(actions: usize, depth: usize, width: usize) -> u64 {
    let branch = (actions * width) as u64;
    (1..=depth as u32).map(|k| branch.pow(k)).sum()
}

/// Improvement query backed by sparse sampling; works for stochastic games.
pub fn sparse_sampling_query<T, G, M>(
    game: &G,
    model: &M,
    state: &GameState<T>,
    depth: usize,
    width: usize,
    mode: SamplingMode,
    tau: T,
    rng: &mut dyn RngCore,
) -> Result<ImprovementResult<T>>
where
    T: Real,
    G: Game<T> + ?Sized,
    M: Model<T> + ?Sized,
{
    if depth == 0 {
        return Err(param("sparse sampling query needs depth >= 1"));
    }
    check(width, mode)?;
    let mut s = Sparse {
        game,
        leaf: model,
        width,
        mode,
        clip: game.v_max(),
        samples: 0,
    };
    let q_hat = s.q_values(state, depth, rng)?;
    let v_hat = backup(&q_hat, state.player).0.clip_abs(game.v_max());
    let pi_hat = boltzmann_policy(&q_hat, tau, state.player)?;
    Ok(ImprovementResult {
        v_hat,
        pi_hat,
        q_hat,
        samples_used: s.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::toy::{GridChain, TwoPointNoiseGame};
    use crate::game::{CaseStudyGame, CountingGame, Player};
    use crate::improvement::{UniformZeroModel, ValueFnModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn depth_zero_is_leaf_value() {
        let game = CaseStudyGame::<f64>::new();
        let leaf = ValueFnModel::new(5, |s: &GameState<f64>| s.x() * 2.0);
        let s = GameState::scalar(0.7, Player::P1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = sparse_sampling_estimate(&game, &s, &leaf, 0, 4, SamplingMode::Sampled, &mut rng).unwrap();
        assert_eq!(v, 1.4);
    }

    /// Full-width deterministic minimax, written directly on the cell tables.
    fn minimax(g: &GridChain<f64>, player: Player, cell: usize, depth: usize, leaf: &dyn Fn(Player, usize) -> f64) -> f64 {
        if depth == 0 {
            return leaf(player, cell);
        }
        let q: Vec<f64> = (0..g.moves().len())
            .map(|a| g.reward(player, cell, a) + g.gamma() * minimax(g, player.opponent(), g.next_cell(cell, a), depth - 1, leaf))
            .collect();
        match player {
            Player::P1 => q.iter().copied().fold(f64::MIN, f64::max),
            Player::P2 => q.iter().copied().fold(f64::MAX, f64::min),
        }
    }

    #[test]
    fn deterministic_game_matches_minimax() {
        let g = GridChain::<f64>::random(7, vec![-1, 0, 2], 0.85, 21).unwrap();
        let leaf_fn = |p: Player, c: usize| if p == Player::P1 { 0.1 * c as f64 } else { -0.2 };
        let leaf = ValueFnModel::new(3, |s: &GameState<f64>| leaf_fn(s.player, g.cell_of(s)));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for cell in 0..7 {
            for player in [Player::P1, Player::P2] {
                let s = g.cell_center(player, cell);
                let est = sparse_sampling_estimate(&g, &s, &leaf, 3, 2, SamplingMode::Sampled, &mut rng).unwrap();
                let exact = minimax(&g, player, cell, 3, &leaf_fn);
                assert!((est - exact).abs() < 1e-12, "{est} vs {exact}");
            }
        }
    }

    #[test]
    fn exhaustive_needs_finite_support() {
        let game = CaseStudyGame::<f64>::new();
        let leaf = UniformZeroModel { actions: 5 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = GameState::scalar(0.5, Player::P1);
        assert!(matches!(
            sparse_sampling_estimate(&game, &s, &leaf, 1, 1, SamplingMode::Exhaustive, &mut rng),
            Err(EisError::Unsupported(_))
        ));
        let two = TwoPointNoiseGame::new(0.2).unwrap();
        assert!(sparse_sampling_estimate(&two, &s, &leaf, 2, 0, SamplingMode::Exhaustive, &mut rng).is_ok());
    }

    #[test]
    fn sample_accounting_and_bounds() {
        let game = CountingGame::new(CaseStudyGame::<f64>::new());
        let leaf = ValueFnModel::new(5, |_: &GameState<f64>| 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = GameState::scalar(-0.4, Player::P2);
        let res = sparse_sampling_query(&game, &leaf, &s, 2, 3, SamplingMode::Sampled, 0.5, &mut rng).unwrap();
        assert_eq!(res.samples_used, sparse_sample_count(5, 2, 3));
        assert_eq!(res.samples_used, 15 + 225);
        assert_eq!(game.count(), res.samples_used);
        let vmax = game.v_max();
        let rmax = game.r_max();
        for q in &res.q_hat {
            assert!(q.abs() <= vmax + rmax);
        }
        assert!(res.v_hat.abs() <= vmax);
        assert_eq!(res.pi_hat, boltzmann_policy(&res.q_hat, 0.5, Player::P2).unwrap());
        let min = res.q_hat.iter().copied().fold(f64::MAX, f64::min);
        assert_eq!(res.v_hat, min.clamp(-vmax, vmax));
    }
}
