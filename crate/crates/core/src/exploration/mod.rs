//! Exploration policies and the coverage-time harness.

use rand::{Rng, RngCore};

use crate::error::{param, Result};
use crate::game::{boltzmann_policy, Game, GameState, Region};
use crate::improvement::Model;
use crate::rng::derived;
use crate::scalar::Real;
use crate::supervised::Partition;

/// Next state produced by an exploration policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ExploreStep<T> {
    pub state: GameState<T>,
    /// Calls made to the game's generative model.
    pub samples: u64,
}

/// An exploration module: proposes the next state from the current one.
pub trait Explorer<T: Real> {
    fn next_state(&self, current: &GameState<T>, rng: &mut dyn RngCore) -> Result<ExploreStep<T>>;
}

/// Uniform draw over the union of regions, weighted by volume.
pub fn uniform_sample<T: Real>(regions: &[Region<T>], rng: &mut dyn RngCore) -> GameState<T> {
    let volumes: Vec<f64> = regions.iter().map(|r| r.volume().as_f64()).collect();
    let total: f64 = volumes.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut chosen = regions.len() - 1;
    for (i, v) in volumes.iter().enumerate() {
        if u < *v {
            chosen = i;
            break;
        }
        u -= v;
    }
    let region = &regions[chosen];
    let coords = region
        .lo
        .iter()
        .zip(&region.hi)
        .map(|(&lo, &hi)| lo + (hi - lo) * T::lit(rng.gen::<f64>()))
        .collect();
    GameState::new(coords, region.player)
}

/// State-free i.i.d. uniform sampling; ignores the current state.
#[derive(Clone, Debug)]
pub struct UniformSampler<T> {
    regions: Vec<Region<T>>,
}

impl<T: Real> UniformSampler<T> {
    pub fn new(regions: &[Region<T>]) -> Result<Self> {
        if regions.is_empty() || regions.iter().any(|r| !r.is_bounded()) {
            return Err(param("uniform sampling needs bounded regions"));
        }
        Ok(UniformSampler {
            regions: regions.to_vec(),
        })
    }
}

impl<T: Real> Explorer<T> for UniformSampler<T> {
    fn next_state(&self, _current: &GameState<T>, rng: &mut dyn RngCore) -> Result<ExploreStep<T>> {
        Ok(ExploreStep {
            state: uniform_sample(&self.regions, rng),
            samples: 0,
        })
    }
}

/// Trajectory exploration driven by a softmax over one-step lookahead values.
///
/// At `s`, each action is sampled once from the generative model to give
/// `q(a) = r + gamma V(s')` under the model; an action is then drawn from the
/// Boltzmann distribution of `q` (negated for player two) and its sampled
/// successor becomes the next state.
pub struct BoltzmannExplorer<'a, T, G: ?Sized, M: ?Sized> {
    game: &'a G,
    model: &'a M,
    tau: T,
}

impl<'a, T: Real, G: Game<T> + ?Sized, M: Model<T> + ?Sized> BoltzmannExplorer<'a, T, G, M> {
    pub fn new(game: &'a G, model: &'a M, tau: T) -> Result<Self> {
        if !(tau > T::zero()) {
            return Err(param("temperature must be positive"));
        }
        Ok(BoltzmannExplorer { game, model, tau })
    }
}

impl<T: Real, G: Game<T> + ?Sized, M: Model<T> + ?Sized> Explorer<T> for BoltzmannExplorer<'_, T, G, M> {
    fn next_state(&self, current: &GameState<T>, rng: &mut dyn RngCore) -> Result<ExploreStep<T>> {
        let width = self.game.actions(current).len();
        let gamma = self.game.gamma();
        let mut successors = Vec::with_capacity(width);
        let mut q = Vec::with_capacity(width);
        for a in 0..width {
            let step = self.game.sample_step(current, a, rng)?;
            q.push(step.reward + gamma * self.model.value(&step.next));
            successors.push(step.next);
        }
        let dist = boltzmann_policy(&q, self.tau, current.player)?;
        let action = sample_index(dist.probs(), rng);
        Ok(ExploreStep {
            state: successors.swap_remove(action),
            samples: width as u64,
        })
    }
}

/// Inverse-CDF draw of an index from a probability vector.
pub fn sample_index<T: Real>(probs: &[T], rng: &mut dyn RngCore) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// States drawn until the sample became representative or the budget ran out.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationOutcome<T> {
    pub states: Vec<GameState<T>>,
    pub steps: u64,
    pub success: bool,
    /// Generative-model calls made by the explorer.
    pub samples: u64,
}

/// Queries `explorer` from `start` until every cell of `partition` holds
/// `k` states or `max_steps` states were drawn. The start state itself is not
/// part of the sample.
pub fn explore_until_representative<T: Real, E: Explorer<T> + ?Sized>(
    explorer: &E,
    start: &GameState<T>,
    partition: &Partition<T>,
    k: usize,
    max_steps: u64,
    rng: &mut dyn RngCore,
) -> Result<ExplorationOutcome<T>> {
    let mut counts = vec![0usize; partition.len()];
    let mut deficient = if k == 0 { 0 } else { partition.len() };
    let mut states = Vec::new();
    let mut samples = 0u64;
    let mut current = start.clone();
    let mut steps = 0u64;
    while deficient > 0 && steps < max_steps {
        let step = explorer.next_state(&current, rng)?;
        samples += step.samples;
        steps += 1;
        let cell = partition.locate(&step.state);
        counts[cell] += 1;
        if counts[cell] == k {
            deficient -= 1;
        }
        current = step.state.clone();
        states.push(step.state);
    }
    Ok(ExplorationOutcome {
        states,
        steps,
        success: deficient == 0,
        samples,
    })
}

/// Empirical stopping-time statistics over independent trials.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageStats {
    pub mean: f64,
    /// Population standard deviation; zero for a single trial.
    pub stddev: f64,
    /// Stopping time of each trial, by trial index.
    pub times: Vec<u64>,
    pub failures: usize,
    pub samples: u64,
}

impl CoverageStats {
    /// Fraction of trials whose stopping time exceeds `e * mean * log(1/delta)`.
    pub fn exceedance(&self, delta: f64) -> f64 {
        let threshold = std::f64::consts::E * self.mean * (1.0 / delta).ln();
        let over = self.times.iter().filter(|&&t| t as f64 > threshold).count();
        over as f64 / self.times.len().max(1) as f64
    }
}

/// Runs `trials` independent explorations, trial `i` on stream `i` of `seed`.
pub fn coverage_time_estimate<T: Real, E: Explorer<T> + ?Sized>(
    explorer: &E,
    start: &GameState<T>,
    partition: &Partition<T>,
    k: usize,
    trials: usize,
    max_steps: u64,
    seed: u64,
) -> Result<CoverageStats> {
    if trials == 0 {
        return Err(param("coverage estimate needs at least one trial"));
    }
    let mut times = Vec::with_capacity(trials);
    let mut failures = 0;
    let mut samples = 0;
    for trial in 0..trials {
        let mut rng = derived(seed, trial as u64);
        let out = explore_until_representative(explorer, start, partition, k, max_steps, &mut rng)?;
        if !out.success {
            failures += 1;
        }
        samples += out.samples;
        times.push(out.steps);
    }
    let n = trials as f64;
    let mean = times.iter().map(|&t| t as f64).sum::<f64>() / n;
    let var = times.iter().map(|&t| (t as f64 - mean).powi(2)).sum::<f64>() / n;
    Ok(CoverageStats {
        mean,
        stddev: var.sqrt(),
        times,
        failures,
        samples,
    })
}

/// `n * H_n`, the expected number of uniform draws to see all `n` cells.
pub fn coupon_collector_mean(n: usize) -> f64 {
    n as f64 * (1..=n).map(|i| 1.0 / i as f64).sum::<f64>()
}
