use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{clip_to_region, ActionSet, Game, GameState, Player, Region, Step};
use crate::error::{EisError, Result};
use crate::scalar::Real;

/// The one-dimensional stochastic benchmark game.
///
/// Player one owns `[0.1, 1.1]`, player two owns `[-1.1, -0.1]`, both pick an
/// action from `{0.1, ..., 0.5}` and receive `3(|s| - 0.5)^2 - a`. The next
/// state is `-|s| + N(a, 1)` projected onto the opponent's interval.
#[derive(Clone, Debug)]
pub struct CaseStudyGame<T> {
    regions: [Region<T>; 2],
    actions: ActionSet<T>,
    gamma: T,
    noise_std: T,
    r_max: T,
}

impl<T: Real> Default for CaseStudyGame<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> CaseStudyGame<T> {
    pub fn new() -> Self {
        let l = T::lit;
        let actions = ActionSet::new(vec![l(0.1), l(0.2), l(0.3), l(0.4), l(0.5)])
            .expect("static action set is valid");
        let regions = [
            Region::interval(l(0.1), l(1.1), Player::P1),
            Region::interval(l(-1.1), l(-0.1), Player::P2),
        ];
        let mut game = CaseStudyGame {
            regions,
            actions,
            gamma: l(0.8),
            noise_std: T::one(),
            r_max: T::zero(),
        };
        game.r_max = game.reward_bound();
        game
    }

    /// max over |s| in [0.1, 1.1] and actions of |3(|s|-0.5)^2 - a|.
    fn reward_bound(&self) -> T {
        let quad_max = T::lit(3.0) * T::lit(0.6) * T::lit(0.6);
        let a_min = self.actions.labels()[0];
        let a_max = *self.actions.labels().last().unwrap();
        (quad_max - a_min).max(a_max)
    }

    pub fn noise_std(&self) -> T {
        self.noise_std
    }

    pub fn action_set(&self) -> &ActionSet<T> {
        &self.actions
    }

    pub fn region(&self, player: Player) -> &Region<T> {
        &self.regions[player.index()]
    }

    /// `(min S_i, max S_i)` for the given player.
    pub fn bounds(&self, player: Player) -> (T, T) {
        let r = self.region(player);
        (r.lo[0], r.hi[0])
    }

    /// Projection onto the interval of `player`.
    pub fn clip(&self, u: T, player: Player) -> T {
        let (lo, hi) = self.bounds(player);
        clip_to_region(u, lo, hi)
    }

    /// Reward for an action given by its label.
    pub fn reward(&self, state: &GameState<T>, action: T) -> Result<T> {
        self.actions.index_of(action)?;
        Ok(self.reward_for_label(state.x(), action))
    }

    fn reward_for_label(&self, x: T, a: T) -> T {
        let d = x.abs() - T::lit(0.5);
        T::lit(3.0) * d * d - a
    }

    /// Transition with the Gaussian draw `z ~ N(a, 1)` supplied by the caller.
    pub fn step_with_noise(&self, state: &GameState<T>, action: usize, z: T) -> Result<Step<T>> {
        let a = self.actions.label(action)?;
        let target = state.player.opponent();
        let next = self.clip(-state.x().abs() + z, target);
        Ok(Step {
            next: GameState::scalar(next, target),
            reward: self.reward_for_label(state.x(), a),
        })
    }
}

impl<T: Real> Game<T> for CaseStudyGame<T> {
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
        false
    }

    fn sample_step(
        &self,
        state: &GameState<T>,
        action: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Step<T>> {
        let a = self.actions.label(action)?;
        let n: f64 = rng.sample(StandardNormal);
        self.step_with_noise(state, action, a + self.noise_std * T::lit(n))
    }

    fn mean_reward(&self, state: &GameState<T>, action: usize) -> Option<T> {
        let a = self.actions.label(action).ok()?;
        Some(self.reward_for_label(state.x(), a))
    }
}

impl<T: Real> CaseStudyGame<T> {
    /// Validates that `state` is a legal position of this game.
    pub fn check_state(&self, state: &GameState<T>) -> Result<()> {
        if self.region(state.player).contains(&state.coords) {
            Ok(())
        } else {
            Err(EisError::Domain(format!(
                "state {:?} is outside the region of {:?}",
                state.coords, state.player
            )))
        }
    }
}
