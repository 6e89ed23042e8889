//! Two-player turn-based zero-sum Markov games.
//!
//! Player one ([`Player::P1`]) is the reward maximizer and the value
//! reference; player two minimizes the same reward. Each player controls a
//! disjoint region of the state space and every transition hands the move to
//! the opponent.

mod bellman;
mod boltzmann;
mod case_study;
pub mod toy;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{param, EisError, Result};
use crate::scalar::Real;

pub use bellman::{backup, bellman_apply, bellman_q, ExpectationModel};
pub use boltzmann::boltzmann_policy;
pub use case_study::CaseStudyGame;

/// Identity of the player to move.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    P1,
    P2,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::P1 => Player::P2,
            Player::P2 => Player::P1,
        }
    }

    /// `+1` for the maximizer, `-1` for the minimizer.
    pub fn sign<T: Real>(self) -> T {
        match self {
            Player::P1 => T::one(),
            Player::P2 => -T::one(),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Player::P1 => 0,
            Player::P2 => 1,
        }
    }
}

/// A point of the state space together with the player to move.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameState<T> {
    pub coords: Vec<T>,
    pub player: Player,
}

impl<T: Real> GameState<T> {
    pub fn new(coords: Vec<T>, player: Player) -> Self {
        GameState { coords, player }
    }

    /// One-dimensional state.
    pub fn scalar(x: T, player: Player) -> Self {
        GameState {
            coords: vec![x],
            player,
        }
    }

    /// First coordinate; the whole state for one-dimensional games.
    pub fn x(&self) -> T {
        self.coords[0]
    }
}

/// Finite ordered set of real-valued action labels.
///
/// Order is fixed: tie-breaking everywhere favours the lowest index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSet<T> {
    labels: Vec<T>,
}

impl<T: Real> ActionSet<T> {
    pub fn new(labels: Vec<T>) -> Result<Self> {
        if labels.is_empty() {
            return Err(param("action set must be non-empty"));
        }
        for (i, a) in labels.iter().enumerate() {
            if !a.is_finite() {
                return Err(param("action labels must be finite"));
            }
            if labels[..i].contains(a) {
                return Err(param(format!("duplicate action label {a}")));
            }
        }
        Ok(ActionSet { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Result<T> {
        self.labels
            .get(index)
            .copied()
            .ok_or_else(|| EisError::InvalidAction(format!("index {index} out of {}", self.len())))
    }

    /// Index of an action label, compared exactly.
    pub fn index_of(&self, label: T) -> Result<usize> {
        self.labels
            .iter()
            .position(|&a| a == label)
            .ok_or_else(|| EisError::InvalidAction(format!("{label} is not a legal action")))
    }
}

/// Axis-aligned box owned by one player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    pub player: Player,
}

impl<T: Real> Region<T> {
    pub fn interval(lo: T, hi: T, player: Player) -> Self {
        Region {
            lo: vec![lo],
            hi: vec![hi],
            player,
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.len() == self.hi.len()
            && self
                .lo
                .iter()
                .zip(&self.hi)
                .all(|(l, h)| l.is_finite() && h.is_finite() && l <= h)
    }

    pub fn volume(&self) -> T {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(T::one(), |acc, (&l, &h)| acc * (h - l))
    }

    pub fn contains(&self, coords: &[T]) -> bool {
        coords.len() == self.dim()
            && coords
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&l, &h))| x >= l && x <= h)
    }

    /// Componentwise projection onto the box.
    pub fn clip(&self, coords: &[T]) -> Vec<T> {
        coords
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&x, (&l, &h))| x.max(l).min(h))
            .collect()
    }

    pub fn center(&self) -> Vec<T> {
        let two = T::lit(2.0);
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| (l + h) / two)
            .collect()
    }
}

/// Result of one call to the generative model.
#[derive(Clone, Debug, PartialEq)]
pub struct Step<T> {
    pub next: GameState<T>,
    pub reward: T,
}

/// One branch of a finite-support transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome<T> {
    pub prob: T,
    pub next: GameState<T>,
    pub reward: T,
}

/// The game interface consumed by the improvement, exploration and
/// evaluation components.
///
/// Actions are addressed by their index in [`Game::actions`]. Rewards are
/// those received by player one. Implementations hold no mutable state, so a
/// game may be queried from several workers as long as each owns its rng.
pub trait Game<T: Real>: Send + Sync {
    fn gamma(&self) -> T;

    /// Bound on the magnitude of every reward.
    fn r_max(&self) -> T;

    fn v_max(&self) -> T {
        self.r_max() / (T::one() - self.gamma())
    }

    fn actions(&self, state: &GameState<T>) -> &ActionSet<T>;

    fn regions(&self) -> &[Region<T>];

    fn is_deterministic(&self) -> bool;

    /// `s ∘ a` for deterministic games.
    fn next_state(&self, state: &GameState<T>, action: usize) -> Result<GameState<T>> {
        let _ = (state, action);
        Err(EisError::UnsupportedDynamics(
            "next_state is only defined for deterministic games".into(),
        ))
    }

    /// Draws a transition and its reward from the generative model.
    fn sample_step(&self, state: &GameState<T>, action: usize, rng: &mut dyn RngCore)
        -> Result<Step<T>>;

    /// Exact expected reward, when the game can provide it.
    fn mean_reward(&self, state: &GameState<T>, action: usize) -> Option<T> {
        let _ = (state, action);
        None
    }

    /// Every outcome with its probability, for finite-support dynamics.
    fn outcomes(&self, state: &GameState<T>, action: usize) -> Option<Vec<Outcome<T>>> {
        let _ = (state, action);
        None
    }

    /// Player owning `coords`, by region membership.
    fn player_at(&self, coords: &[T]) -> Option<Player> {
        self.regions()
            .iter()
            .find(|r| r.contains(coords))
            .map(|r| r.player)
    }

    fn dim(&self) -> usize {
        self.regions().first().map_or(1, Region::dim)
    }
}

impl<T: Real, G: Game<T> + ?Sized> Game<T> for &G {
    fn gamma(&self) -> T {
        (**self).gamma()
    }
    fn r_max(&self) -> T {
        (**self).r_max()
    }
    fn v_max(&self) -> T {
        (**self).v_max()
    }
    fn actions(&self, state: &GameState<T>) -> &ActionSet<T> {
        (**self).actions(state)
    }
    fn regions(&self) -> &[Region<T>] {
        (**self).regions()
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
    fn next_state(&self, state: &GameState<T>, action: usize) -> Result<GameState<T>> {
        (**self).next_state(state, action)
    }
    fn sample_step(
        &self,
        state: &GameState<T>,
        action: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Step<T>> {
        (**self).sample_step(state, action, rng)
    }
    fn mean_reward(&self, state: &GameState<T>, action: usize) -> Option<T> {
        (**self).mean_reward(state, action)
    }
    fn outcomes(&self, state: &GameState<T>, action: usize) -> Option<Vec<Outcome<T>>> {
        (**self).outcomes(state, action)
    }
    fn player_at(&self, coords: &[T]) -> Option<Player> {
        (**self).player_at(coords)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
}

/// Wraps a game and counts every call to [`Game::sample_step`].
pub struct CountingGame<G> {
    inner: G,
    count: AtomicU64,
}

impl<G> CountingGame<G> {
    pub fn new(inner: G) -> Self {
        CountingGame {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &G {
        &self.inner
    }
}

impl<T: Real, G: Game<T>> Game<T> for CountingGame<G> {
    fn gamma(&self) -> T {
        self.inner.gamma()
    }
    fn r_max(&self) -> T {
        self.inner.r_max()
    }
    fn v_max(&self) -> T {
        self.inner.v_max()
    }
    fn actions(&self, state: &GameState<T>) -> &ActionSet<T> {
        self.inner.actions(state)
    }
    fn regions(&self) -> &[Region<T>] {
        self.inner.regions()
    }
    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }
    fn next_state(&self, state: &GameState<T>, action: usize) -> Result<GameState<T>> {
        self.inner.next_state(state, action)
    }
    fn sample_step(
        &self,
        state: &GameState<T>,
        action: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Step<T>> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.sample_step(state, action, rng)
    }
    fn mean_reward(&self, state: &GameState<T>, action: usize) -> Option<T> {
        self.inner.mean_reward(state, action)
    }
    fn outcomes(&self, state: &GameState<T>, action: usize) -> Option<Vec<Outcome<T>>> {
        self.inner.outcomes(state, action)
    }
    fn player_at(&self, coords: &[T]) -> Option<Player> {
        self.inner.player_at(coords)
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
}

/// Projects `u` onto the one-dimensional interval of `player`.
pub fn clip_to_region<T: Real>(u: T, lo: T, hi: T) -> T {
    u.max(lo).min(hi)
}
