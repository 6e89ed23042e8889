//! The explore / improve / supervise loop.

use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::baseline::{DiscretizedGame, ExactSolution, ViSolution};
use crate::error::{param, EisError, Result};
use crate::exploration::{
    coverage_time_estimate, explore_until_representative, uniform_sample, BoltzmannExplorer, Explorer,
    UniformSampler,
};
use crate::game::toy::GridChain;
use crate::game::{boltzmann_policy, CountingGame, Game, GameState};
use crate::improvement::{
    improvement_query, mcts_depth_schedule, mcts_sim_schedule, sparse_sampling_query, MctsConfig, Model,
    SamplingMode, UcbConstants, UniformZeroModel,
};
use crate::metrics::{policy_error, Distribution};
use crate::rng::{derived, stream_id};
use crate::scalar::Real;
use crate::supervised::{build_partition, knn_sample_count, knn_schedule, nn_fit, NnModel, Partition, TrainingDatum};

const EXPLORE: u8 = 0;
const BUDGET: u8 = 1;
const IMPROVE: u8 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields, bound = "T: Real")]
pub enum ImprovementKind<T> {
    /// Fixed-depth MCTS, deterministic games only. Depth and simulation
    /// count follow the schedules unless overridden.
    Mcts {
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        simulations: Option<usize>,
        #[serde(default = "one")]
        c1: T,
        #[serde(default)]
        depth_cap: Option<usize>,
        #[serde(default)]
        sim_cap: Option<usize>,
        #[serde(default = "half")]
        eta: T,
        #[serde(default = "default_ucb")]
        ucb: Vec<UcbConstants<T>>,
    },
    /// Sparse sampling, any game.
    SparseSampling {
        depth: usize,
        width: usize,
        #[serde(default = "sampled")]
        mode: SamplingMode,
    },
}

fn one<T: Real>() -> T {
    T::one()
}
fn half<T: Real>() -> T {
    T::lit(0.5)
}
fn default_ucb<T: Real>() -> Vec<UcbConstants<T>> {
    vec![UcbConstants::default()]
}
fn sampled() -> SamplingMode {
    SamplingMode::Sampled
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplorationKind {
    Uniform,
    Boltzmann,
}

/// Partition width and per-cell count: fixed values or the schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct SamplingSchedule<T> {
    #[serde(default)]
    pub h: Option<T>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "one")]
    pub lipschitz_v: T,
    #[serde(default = "one")]
    pub lipschitz_p: T,
    #[serde(default = "h_min")]
    pub h_min: T,
    #[serde(default)]
    pub k_cap: Option<usize>,
}

fn h_min<T: Real>() -> T {
    T::lit(1e-3)
}

impl<T: Real> Default for SamplingSchedule<T> {
    fn default() -> Self {
        SamplingSchedule {
            h: None,
            k: None,
            lipschitz_v: T::one(),
            lipschitz_p: T::one(),
            h_min: h_min(),
            k_cap: None,
        }
    }
}

/// Exploration step budget `e B log(L / delta)` with `B` estimated by a
/// short coverage pre-run each iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default = "delta")]
    pub delta: f64,
    /// Pre-run trials; zero skips the pre-run and uses `max_steps`.
    #[serde(default = "trials")]
    pub estimate_trials: usize,
    /// Hard cap on steps for one exploration (and one pre-run trial).
    #[serde(default = "max_steps")]
    pub max_steps: u64,
}

fn delta() -> f64 {
    0.1
}
fn trials() -> usize {
    20
}
fn max_steps() -> u64 {
    10_000_000
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            delta: delta(),
            estimate_trials: trials(),
            max_steps: max_steps(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct EisConfig<T> {
    pub tau: T,
    pub rho: T,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    pub improvement: ImprovementKind<T>,
    #[serde(default = "uniform")]
    pub exploration: ExplorationKind,
    #[serde(default)]
    pub sampling: SamplingSchedule<T>,
    #[serde(default)]
    pub budget: BudgetConfig,
    /// Start of the first exploration trajectory of each iteration; drawn
    /// uniformly when absent.
    #[serde(default)]
    pub start: Option<GameState<T>>,
    /// Measure wall time per iteration. Off, `wall_ms` is zero and reports
    /// are bitwise reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

fn uniform() -> ExplorationKind {
    ExplorationKind::Uniform
}

impl<T: Real> EisConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return Err(EisError::Config("tau must be positive".into()));
        }
        if !(self.rho > T::zero() && self.rho < T::one()) {
            return Err(EisError::Config("rho must lie in (0, 1)".into()));
        }
        if !(self.budget.delta > 0.0 && self.budget.delta < 1.0) {
            return Err(EisError::Config("budget delta must lie in (0, 1)".into()));
        }
        match &self.improvement {
            ImprovementKind::Mcts { depth, simulations, .. } => {
                if *depth == Some(0) || *simulations == Some(0) {
                    return Err(EisError::Config("MCTS depth and simulations must be positive".into()));
                }
            }
            ImprovementKind::SparseSampling { depth, width, mode } => {
                if *depth == 0 || (*width == 0 && *mode == SamplingMode::Sampled) {
                    return Err(EisError::Config("sparse sampling depth and width must be positive".into()));
                }
            }
        }
        if let Some(h) = self.sampling.h {
            if !(h > T::zero()) {
                return Err(EisError::Config("fixed h must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Per-iteration record. Error fields are present only when a reference
/// was supplied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport<T> {
    pub iteration: usize,
    /// Search depth `H` (MCTS) or tree depth (sparse sampling).
    pub depth: usize,
    /// Simulations `m` (MCTS) or width `C` (sparse sampling).
    pub simulations: usize,
    pub h: T,
    pub k: usize,
    /// Cells of the partition, `N(h)`.
    pub cells: usize,
    /// States collected by exploration, `n_l`.
    pub states: usize,
    /// Generative-model calls made during the iteration.
    pub samples: u64,
    pub sup_err: Option<T>,
    pub mean_err: Option<T>,
    pub max_kl: Option<T>,
    pub wall_ms: u64,
}

/// Reference values (and optionally Q rows) tabulated on evaluation states.
#[derive(Clone, Debug, PartialEq)]
pub struct TabulatedReference<T> {
    pub states: Vec<GameState<T>>,
    pub values: Vec<T>,
    pub q: Option<Vec<Vec<T>>>,
}

impl<T: Real> TabulatedReference<T> {
    pub fn new(states: Vec<GameState<T>>, values: Vec<T>, q: Option<Vec<Vec<T>>>) -> Result<Self> {
        crate::error::check_len(states.len(), values.len())?;
        if let Some(q) = &q {
            crate::error::check_len(states.len(), q.len())?;
        }
        Ok(TabulatedReference { states, values, q })
    }

    /// The value-iteration table on its own grid.
    pub fn from_vi(game: &DiscretizedGame<T>, sol: &ViSolution<T>) -> Result<Self> {
        Self::new(game.states(), sol.values.clone(), Some(sol.q.clone()))
    }

    /// The exact solution on `points` equally spaced interior states per
    /// player (midpoints of a uniform split of each interval).
    pub fn from_exact(game: &GridChain<T>, sol: &ExactSolution<T>, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(param("need at least one evaluation point"));
        }
        let mut states = Vec::with_capacity(2 * points);
        for region in game.regions() {
            let (lo, hi) = (region.lo[0], region.hi[0]);
            for i in 0..points {
                let t = T::lit((i as f64 + 0.5) / points as f64);
                states.push(GameState::scalar(lo + (hi - lo) * t, region.player));
            }
        }
        let values = states.iter().map(|s| sol.value_at(s)).collect();
        let q = states.iter().map(|s| sol.q_at(s).to_vec()).collect();
        Self::new(states, values, Some(q))
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ModelError<T> {
    pub sup: T,
    pub mean: T,
    /// Largest `KL(model || Boltzmann(Q_ref))`; needs reference Q rows.
    pub max_kl: Option<T>,
}

/// Value and policy error of `model` over the reference states.
pub fn evaluate_model<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    reference: &TabulatedReference<T>,
    tau: T,
) -> Result<ModelError<T>> {
    let n = reference.states.len();
    if n == 0 {
        return Err(param("empty evaluation grid"));
    }
    let diffs: Vec<T> = reference
        .states
        .iter()
        .zip(&reference.values)
        .map(|(s, &v)| (model.value(s) - v).abs())
        .collect();
    let sup = diffs.iter().copied().fold(T::zero(), T::max);
    let mean = diffs.iter().copied().sum::<T>() / T::lit(n as f64);
    let max_kl = match &reference.q {
        None => None,
        Some(q) => {
            let targets = q
                .iter()
                .zip(&reference.states)
                .map(|(row, s)| boltzmann_policy(row, tau, s.player))
                .collect::<Result<Vec<Distribution<T>>>>()?;
            let mut worst = T::zero();
            for (i, s) in reference.states.iter().enumerate() {
                let one = std::slice::from_ref(s);
                worst = worst.max(policy_error(|s| model.policy(s), |_| targets[i].clone(), one)?);
            }
            Some(worst)
        }
    };
    Ok(ModelError { sup, mean, max_kl })
}

/// The model produced by each iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EisModel<T> {
    /// `V ≡ 0`, uniform policy.
    Initial(UniformZeroModel),
    Nn(NnModel<T>),
}

impl<T: Real> Model<T> for EisModel<T> {
    fn value(&self, state: &GameState<T>) -> T {
        match self {
            EisModel::Initial(m) => m.value(state),
            EisModel::Nn(m) => m.value(state),
        }
    }

    fn policy(&self, state: &GameState<T>) -> Distribution<T> {
        match self {
            EisModel::Initial(m) => m.policy(state),
            EisModel::Nn(m) => m.policy(state),
        }
    }
}

impl<T: Real> EisModel<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug)]
pub struct EisOutcome<T> {
    pub model: EisModel<T>,
    pub reports: Vec<IterationReport<T>>,
    /// Error of the initial model, when a reference was supplied.
    pub initial_error: Option<ModelError<T>>,
    /// Iterations whose exploration ran out of budget before reaching a
    /// representative sample.
    pub exploration_failures: Vec<usize>,
    /// Iterations where a schedule cap (depth, simulations or K) engaged.
    pub capped_iterations: Vec<usize>,
    /// Generative-model calls over the whole run.
    pub total_samples: u64,
}

struct Plan<T> {
    capped: bool,
    depth: usize,
    simulations: usize,
    partition: Partition<T>,
    k: usize,
}

fn plan<T: Real, G: Game<T> + ?Sized>(game: &G, cfg: &EisConfig<T>, l: usize) -> Result<Plan<T>> {
    let probe = game
        .regions()
        .first()
        .ok_or_else(|| param("game has no regions"))?;
    let actions = game.actions(&GameState::new(probe.center(), probe.player)).len();
    let mut capped = false;
    let (depth, simulations) = match &cfg.improvement {
        ImprovementKind::Mcts {
            depth,
            simulations,
            c1,
            depth_cap,
            sim_cap,
            ..
        } => {
            let h = match depth {
                Some(d) => *d,
                None => {
                    let s = mcts_depth_schedule(cfg.tau, cfg.rho, actions, game.gamma(), *depth_cap)?;
                    capped |= s.capped;
                    s.value
                }
            };
            let m = match simulations {
                Some(m) => *m,
                None => {
                    let s = mcts_sim_schedule(l, cfg.tau, cfg.rho, game.v_max(), actions, *c1, *sim_cap)?;
                    capped |= s.capped;
                    s.value
                }
            };
            (h, m)
        }
        ImprovementKind::SparseSampling { depth, width, .. } => (*depth, *width),
    };
    let s = &cfg.sampling;
    let regions = game.regions();
    let (partition, scheduled_k) = match s.h {
        Some(h) => (build_partition(regions, h)?, None),
        None => {
            let mut built = None;
            let sched = knn_schedule(l, cfg.rho, game.v_max(), s.lipschitz_v, s.lipschitz_p, s.h_min, |h| {
                let p = build_partition(regions, h)?;
                let n = p.len();
                built = Some(p);
                Ok(n)
            })?;
            (built.expect("schedule builds the partition"), Some(sched.k))
        }
    };
    let k = match (s.k, scheduled_k) {
        (Some(k), _) => k,
        (None, Some(k)) => k,
        (None, None) => {
            let xi = game.v_max() * cfg.rho.powi(l as i32) / T::lit(4.0);
            knn_sample_count(xi, xi, game.v_max(), partition.len())
        }
    };
    if s.k_cap.is_some_and(|cap| k > cap) {
        capped = true;
    }
    let k = s.k_cap.map_or(k, |cap| k.min(cap));
    Ok(Plan {
        capped,
        depth,
        simulations,
        partition,
        k,
    })
}

/// Runs `config.iterations` rounds of explore, improve, supervise.
///
/// Iteration `l` explores until the sample is `(h_l, K_l)`-representative or
/// the step budget runs out, queries the improvement oracle at every
/// collected state against the previous model, and fits a new
/// nearest-neighbor model. An exhausted budget is recorded and the fit then
/// falls back to borrowing values for empty cells.
pub fn eis_run<T: Real, G: Game<T> + ?Sized>(
    game: &G,
    reference: Option<&TabulatedReference<T>>,
    config: &EisConfig<T>,
) -> Result<EisOutcome<T>> {
    config.validate()?;
    if matches!(config.improvement, ImprovementKind::Mcts { .. }) && !game.is_deterministic() {
        return Err(EisError::Config(
            "MCTS improvement needs a deterministic game; use sparse sampling".into(),
        ));
    }
    let counted = CountingGame::new(game);
    let probe = &game.regions()[0];
    let actions = game.actions(&GameState::new(probe.center(), probe.player)).len();
    let mut model = EisModel::Initial(UniformZeroModel { actions });
    let initial_error = reference
        .map(|r| evaluate_model(&model, r, config.tau))
        .transpose()?;
    let mut reports = Vec::with_capacity(config.iterations);
    let mut failures = Vec::new();
    let mut capped = Vec::new();
    let seed = config.seed;

    for l in 1..=config.iterations {
        let clock = Instant::now();
        let before = counted.count();
        let plan = plan(game, config, l)?;
        if plan.capped {
            capped.push(l);
        }
        let previous = &model;

        let uniform;
        let boltzmann;
        let explorer: &dyn Explorer<T> = match config.exploration {
            ExplorationKind::Uniform => {
                uniform = UniformSampler::new(game.regions())?;
                &uniform
            }
            ExplorationKind::Boltzmann => {
                boltzmann = BoltzmannExplorer::new(&counted, previous, config.tau)?;
                &boltzmann
            }
        };
        let mut rng = derived(seed, stream_id(l, EXPLORE, 0));
        let start = match &config.start {
            Some(s) => s.clone(),
            None => uniform_sample(game.regions(), &mut rng),
        };
        let budget = if config.budget.estimate_trials == 0 {
            config.budget.max_steps
        } else {
            let pre_seed = derived(seed, stream_id(l, BUDGET, 0)).next_u64();
            let stats = coverage_time_estimate(
                explorer,
                &start,
                &plan.partition,
                plan.k,
                config.budget.estimate_trials,
                config.budget.max_steps,
                pre_seed,
            )?;
            let factor = std::f64::consts::E * (config.iterations as f64 / config.budget.delta).ln().max(1.0);
            ((factor * stats.mean).ceil() as u64).clamp(1, config.budget.max_steps)
        };
        let explored = explore_until_representative(explorer, &start, &plan.partition, plan.k, budget, &mut rng)?;
        if !explored.success {
            failures.push(l);
        }

        let mut data = Vec::with_capacity(explored.states.len());
        let mcts_cfg = match &config.improvement {
            ImprovementKind::Mcts { eta, ucb, .. } => {
                let mut c = MctsConfig::new(plan.depth, plan.simulations, game.v_max());
                c.eta = *eta;
                c.ucb = ucb.clone();
                c.validate()?;
                Some(c)
            }
            ImprovementKind::SparseSampling { .. } => None,
        };
        for (i, state) in explored.states.iter().enumerate() {
            let mut qrng = derived(seed, stream_id(l, IMPROVE, i));
            let res = match (&config.improvement, &mcts_cfg) {
                (ImprovementKind::Mcts { .. }, Some(c)) => {
                    improvement_query(&counted, previous, state, c, config.tau, &mut qrng)?
                }
                (ImprovementKind::SparseSampling { depth, width, mode }, _) => {
                    sparse_sampling_query(&counted, previous, state, *depth, *width, *mode, config.tau, &mut qrng)?
                }
                _ => unreachable!("MCTS config is built for MCTS runs"),
            };
            data.push(TrainingDatum {
                state: state.clone(),
                v_hat: res.v_hat,
                pi_hat: res.pi_hat,
            });
        }
        if !data.is_empty() {
            model = EisModel::Nn(nn_fit(&data, &plan.partition, explored.success)?);
        }

        let err = reference
            .map(|r| evaluate_model(&model, r, config.tau))
            .transpose()?;
        reports.push(IterationReport {
            iteration: l,
            depth: plan.depth,
            simulations: plan.simulations,
            h: plan.partition.h(),
            k: plan.k,
            cells: plan.partition.len(),
            states: explored.states.len(),
            samples: counted.count() - before,
            sup_err: err.map(|e| e.sup),
            mean_err: err.map(|e| e.mean),
            max_kl: err.and_then(|e| e.max_kl),
            wall_ms: if config.record_timing {
                clock.elapsed().as_millis() as u64
            } else {
                0
            },
        });
    }
    Ok(EisOutcome {
        model,
        reports,
        initial_error,
        exploration_failures: failures,
        capped_iterations: capped,
        total_samples: counted.count(),
    })
}
