//! Declarative run configuration read from TOML.
//!
//! ```toml
//! seed = 7                      # overridden by --seed
//!
//! [game]                        # case-study | grid-chain | two-point-noise
//! kind = "grid-chain"
//! cells = 10                    # grid-chain only
//! moves = [-1, 0, 1]
//! gamma = 0.8
//! reward_seed = 1
//! reward_noise = 0.0
//! # delta = 0.3                 # two-point-noise only
//!
//! [eis]                         # see driver::EisConfig
//! tau = 1.0
//! rho = 0.6
//! iterations = 6
//! improvement = { kind = "mcts", depth = 3, simulations = 200 }
//!
//! [reference]
//! enabled = true                # grid-chain: exact solve, case-study: VI
//! eval_points = 64              # per player, grid-chain only
//!
//! [vi]
//! points = 1500
//! iterations = 30
//! tolerance = 0.0
//!
//! [mcts_eval]
//! tau = 1.0
//! depth = 3
//! simulations = 200
//! width = 30                    # sparse sampling width for stochastic games
//! model = "model.json"          # optional; V = 0 and uniform policy otherwise
//! states = [{ coords = [0.5], player = "P1" }]
//!
//! [coverage]
//! h = 0.04
//! k = 1
//! trials = 500
//! max_steps = 1000000
//! deltas = [0.1, 0.2]
//! ```

use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::driver::EisConfig;
use crate::error::{EisError, Result};
use crate::game::toy::{GridChain, TwoPointNoiseGame};
use crate::game::{ActionSet, CaseStudyGame, Game, GameState, Outcome, Region, Step};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GameSpec {
    CaseStudy,
    GridChain {
        cells: usize,
        moves: Vec<i64>,
        gamma: f64,
        #[serde(default)]
        reward_seed: u64,
        #[serde(default)]
        reward_noise: f64,
    },
    TwoPointNoise {
        delta: f64,
    },
}

impl Default for GameSpec {
    fn default() -> Self {
        GameSpec::CaseStudy
    }
}

impl GameSpec {
    pub fn build(&self) -> Result<AnyGame> {
        Ok(match self {
            GameSpec::CaseStudy => AnyGame::CaseStudy(CaseStudyGame::new()),
            GameSpec::GridChain {
                cells,
                moves,
                gamma,
                reward_seed,
                reward_noise,
            } => AnyGame::GridChain(
                GridChain::random(*cells, moves.clone(), *gamma, *reward_seed)?.with_reward_noise(*reward_noise),
            ),
            GameSpec::TwoPointNoise { delta } => AnyGame::TwoPoint(TwoPointNoiseGame::new(*delta)?),
        })
    }
}

/// One of the built-in games.
#[derive(Clone, Debug)]
pub enum AnyGame {
    CaseStudy(CaseStudyGame<f64>),
    GridChain(GridChain<f64>),
    TwoPoint(TwoPointNoiseGame<f64>),
}

impl AnyGame {
    fn inner(&self) -> &dyn Game<f64> {
        match self {
            AnyGame::CaseStudy(g) => g,
            AnyGame::GridChain(g) => g,
            AnyGame::TwoPoint(g) => g,
        }
    }
}

impl Game<f64> for AnyGame {
    fn gamma(&self) -> f64 {
        self.inner().gamma()
    }
    fn r_max(&self) -> f64 {
        self.inner().r_max()
    }
    fn v_max(&self) -> f64 {
        self.inner().v_max()
    }
    fn actions(&self, state: &GameState<f64>) -> &ActionSet<f64> {
        self.inner().actions(state)
    }
    fn regions(&self) -> &[Region<f64>] {
        self.inner().regions()
    }
    fn is_deterministic(&self) -> bool {
        self.inner().is_deterministic()
    }
    fn next_state(&self, state: &GameState<f64>, action: usize) -> Result<GameState<f64>> {
        self.inner().next_state(state, action)
    }
    fn sample_step(&self, state: &GameState<f64>, action: usize, rng: &mut dyn RngCore) -> Result<Step<f64>> {
        self.inner().sample_step(state, action, rng)
    }
    fn mean_reward(&self, state: &GameState<f64>, action: usize) -> Option<f64> {
        self.inner().mean_reward(state, action)
    }
    fn outcomes(&self, state: &GameState<f64>, action: usize) -> Option<Vec<Outcome<f64>>> {
        self.inner().outcomes(state, action)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "eval_points")]
    pub eval_points: usize,
}

fn yes() -> bool {
    true
}
fn eval_points() -> usize {
    64
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            enabled: true,
            eval_points: eval_points(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViSection {
    #[serde(default = "vi_points")]
    pub points: usize,
    #[serde(default = "vi_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub tolerance: f64,
}

fn vi_points() -> usize {
    1500
}
fn vi_iterations() -> usize {
    30
}

impl Default for ViSection {
    fn default() -> Self {
        ViSection {
            points: vi_points(),
            iterations: vi_iterations(),
            tolerance: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MctsEvalSection {
    #[serde(default = "tau")]
    pub tau: f64,
    #[serde(default = "depth")]
    pub depth: usize,
    #[serde(default = "simulations")]
    pub simulations: usize,
    #[serde(default = "width")]
    pub width: usize,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub states: Vec<GameState<f64>>,
}

fn tau() -> f64 {
    1.0
}
fn depth() -> usize {
    3
}
fn simulations() -> usize {
    200
}
fn width() -> usize {
    30
}

impl Default for MctsEvalSection {
    fn default() -> Self {
        MctsEvalSection {
            tau: tau(),
            depth: depth(),
            simulations: simulations(),
            width: width(),
            model: None,
            states: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSection {
    #[serde(default = "cov_h")]
    pub h: f64,
    #[serde(default = "cov_k")]
    pub k: usize,
    #[serde(default = "cov_trials")]
    pub trials: usize,
    #[serde(default = "cov_steps")]
    pub max_steps: u64,
    #[serde(default = "cov_deltas")]
    pub deltas: Vec<f64>,
}

fn cov_h() -> f64 {
    0.04
}
fn cov_k() -> usize {
    1
}
fn cov_trials() -> usize {
    500
}
fn cov_steps() -> u64 {
    1_000_000
}
fn cov_deltas() -> Vec<f64> {
    vec![0.1, 0.2]
}

impl Default for CoverageSection {
    fn default() -> Self {
        CoverageSection {
            h: cov_h(),
            k: cov_k(),
            trials: cov_trials(),
            max_steps: cov_steps(),
            deltas: cov_deltas(),
        }
    }
}

/// Top-level configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub game: GameSpec,
    #[serde(default)]
    pub eis: Option<EisConfig<f64>>,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub vi: ViSection,
    #[serde(default)]
    pub mcts_eval: MctsEvalSection,
    #[serde(default)]
    pub coverage: CoverageSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            game: GameSpec::default(),
            eis: None,
            reference: ReferenceSection::default(),
            vi: ViSection::default(),
            mcts_eval: MctsEvalSection::default(),
            coverage: CoverageSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| EisError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| EisError::Config(e.to_string()))
    }
}
