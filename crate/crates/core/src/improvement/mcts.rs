use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{ImprovementResult, Model};
use crate::error::{param, EisError, Result};
use crate::game::{backup, boltzmann_policy, Game, GameState, Player};
use crate::scalar::Real;

/// Constants of the polynomial upper-confidence bonus at one tree level.
///
/// The bonus added to (player one) or subtracted from (player two) an
/// action's empirical mean is `beta^(1/xi) * N^(alpha/xi) / n^(1 - eta)`,
/// where `N` counts visits of the node and `n` visits of the action.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcbConstants<T> {
    pub beta: T,
    pub xi: T,
    pub alpha: T,
}

impl<T: Real> Default for UcbConstants<T> {
    fn default() -> Self {
        UcbConstants {
            beta: T::lit(2.0),
            xi: T::lit(4.0),
            alpha: T::lit(1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MctsConfig<T> {
    /// Search depth `H`; leaves at this depth are valued by the model.
    pub depth: usize,
    /// Number of root-to-leaf simulations `m`.
    pub simulations: usize,
    pub eta: T,
    /// Either one entry shared by every level or one entry per level.
    pub ucb: Vec<UcbConstants<T>>,
    /// Estimates are clipped to `[-value_clip, value_clip]`.
    pub value_clip: T,
}

impl<T: Real> MctsConfig<T> {
    pub fn new(depth: usize, simulations: usize, value_clip: T) -> Self {
        MctsConfig {
            depth,
            simulations,
            eta: T::lit(0.5),
            ucb: vec![UcbConstants::default()],
            value_clip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(param("MCTS depth must be at least 1"));
        }
        if self.simulations == 0 {
            return Err(param("MCTS needs at least one simulation"));
        }
        if !(self.eta >= T::lit(0.5) && self.eta < T::one()) {
            return Err(param("eta must lie in [1/2, 1)"));
        }
        if self.ucb.len() != 1 && self.ucb.len() != self.depth {
            return Err(param("ucb constants must be given once or once per level"));
        }
        for c in &self.ucb {
            if !(c.beta > T::one() && c.xi > T::one() && c.alpha >= T::zero()) {
                return Err(param("ucb constants need beta > 1, xi > 1, alpha >= 0"));
            }
        }
        if !(self.value_clip > T::zero()) {
            return Err(param("value clip must be positive"));
        }
        Ok(())
    }

    fn ucb_at(&self, level: usize) -> UcbConstants<T> {
        if self.ucb.len() == 1 {
            self.ucb[0]
        } else {
            self.ucb[level]
        }
    }
}

#[derive(Clone, Debug)]
struct Edge<T> {
    visits: u64,
    reward_sum: T,
    value_sum: T,
    child: Option<usize>,
}

#[derive(Clone, Debug)]
struct Node<T> {
    state: GameState<T>,
    level: usize,
    visits: u64,
    edges: Vec<Edge<T>>,
}

/// Fixed-depth search tree for a deterministic game.
///
/// Every simulation descends exactly `depth` edges from the root, sampling
/// one reward per edge, and values the final state with the leaf model.
/// Player-one nodes pick the action maximizing mean plus bonus, player-two
/// nodes the action minimizing mean minus bonus; untried actions are taken
/// first, lowest index first.
pub struct SearchTree<'a, T: Real, G: ?Sized, M: ?Sized> {
    game: &'a G,
    leaf: &'a M,
    cfg: &'a MctsConfig<T>,
    nodes: Vec<Node<T>>,
    return_sum: T,
    simulations: u64,
    samples: u64,
}

impl<'a, T, G, M> SearchTree<'a, T, G, M>
where
    T: Real,
    G: Game<T> + ?Sized,
    M: Model<T> + ?Sized,
{
    pub fn new(game: &'a G, leaf: &'a M, cfg: &'a MctsConfig<T>, root: GameState<T>) -> Result<Self> {
        if !game.is_deterministic() {
            return Err(EisError::UnsupportedDynamics(
                "fixed-depth MCTS requires deterministic transitions".into(),
            ));
        }
        cfg.validate()?;
        let mut tree = SearchTree {
            game,
            leaf,
            cfg,
            nodes: Vec::new(),
            return_sum: T::zero(),
            simulations: 0,
            samples: 0,
        };
        tree.push_node(root, 0);
        Ok(tree)
    }

    fn push_node(&mut self, state: GameState<T>, level: usize) -> usize {
        let width = self.game.actions(&state).len();
        self.nodes.push(Node {
            state,
            level,
            visits: 0,
            edges: vec![
                Edge {
                    visits: 0,
                    reward_sum: T::zero(),
                    value_sum: T::zero(),
                    child: None,
                };
                width
            ],
        });
        self.nodes.len() - 1
    }

    fn select(&self, node: &Node<T>) -> usize {
        if let Some(fresh) = node.edges.iter().position(|e| e.visits == 0) {
            return fresh;
        }
        let gamma = self.game.gamma();
        let c = self.cfg.ucb_at(node.level);
        let numerator = c.beta.powf(T::one() / c.xi)
            * T::lit(node.visits as f64).powf(c.alpha / c.xi);
        let sign = node.state.player.sign::<T>();
        let scores: Vec<T> = node
            .edges
            .iter()
            .map(|e| {
                let n = T::lit(e.visits as f64);
                let mean = (e.reward_sum + gamma * e.value_sum) / n;
                mean + sign * numerator / n.powf(T::one() - self.cfg.eta)
            })
            .collect();
        backup(&scores, node.state.player).1
    }

    /// Runs one simulation and returns its discounted return.
    pub fn simulate(&mut self, rng: &mut dyn RngCore) -> Result<T> {
        let depth = self.cfg.depth;
        let clip = self.cfg.value_clip;
        let gamma = self.game.gamma();
        let mut path: Vec<(usize, usize, T)> = Vec::with_capacity(depth);
        let mut current = 0usize;
        for level in 0..depth {
            let action = self.select(&self.nodes[current]);
            let step = self
                .game
                .sample_step(&self.nodes[current].state, action, rng)?;
            self.samples += 1;
            path.push((current, action, step.reward));
            current = match self.nodes[current].edges[action].child {
                Some(child) => child,
                None => {
                    let child = self.push_node(step.next, level + 1);
                    self.nodes[current].edges[action].child = Some(child);
                    child
                }
            };
        }
        let mut ret = self.leaf.value(&self.nodes[current].state).clip_abs(clip);
        self.nodes[current].visits += 1;
        for &(node, action, reward) in path.iter().rev() {
            let edge = &mut self.nodes[node].edges[action];
            edge.visits += 1;
            edge.reward_sum = edge.reward_sum + reward;
            edge.value_sum = edge.value_sum + ret;
            self.nodes[node].visits += 1;
            ret = reward + gamma * ret;
        }
        self.return_sum = self.return_sum + ret;
        self.simulations += 1;
        Ok(ret)
    }

    /// Mean simulated return at the root, clipped.
    pub fn estimate(&self) -> T {
        if self.simulations == 0 {
            return T::zero();
        }
        (self.return_sum / T::lit(self.simulations as f64)).clip_abs(self.cfg.value_clip)
    }

    /// Transitions drawn so far.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn root_player(&self) -> Player {
        self.nodes[0].state.player
    }

    /// Visit counts of the root's actions.
    pub fn root_visits(&self) -> Vec<u64> {
        self.nodes[0].edges.iter().map(|e| e.visits).collect()
    }

    /// Checks that every node's visit count equals the sum over its edges.
    pub fn visits_consistent(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.level == self.cfg.depth || n.visits == n.edges.iter().map(|e| e.visits).sum::<u64>()
        })
    }
}

/// Value estimate at `root` from `cfg.simulations` fixed-depth simulations.
pub fn fixed_depth_mcts<T, G, M>(
    game: &G,
    root: &GameState<T>,
    leaf_model: &M,
    cfg: &MctsConfig<T>,
    rng: &mut dyn RngCore,
) -> Result<T>
where
    T: Real,
    G: Game<T> + ?Sized,
    M: Model<T> + ?Sized,
{
    let mut tree = SearchTree::new(game, leaf_model, cfg, root.clone())?;
    for _ in 0..cfg.simulations {
        tree.simulate(rng)?;
    }
    Ok(tree.estimate())
}

/// Improvement query for deterministic games.
///
/// For each action `a`, every one of the `m` simulations first samples the
/// edge `(s, a)`, contributing to the reward mean, and then runs one search
/// simulation from `s ∘ a`. Hence `samples_used = m (1 + H) |A|`.
pub fn improvement_query<T, G, M>(
    game: &G,
    model: &M,
    state: &GameState<T>,
    cfg: &MctsConfig<T>,
    tau: T,
    rng: &mut dyn RngCore,
) -> Result<ImprovementResult<T>>
where
    T: Real,
    G: Game<T> + ?Sized,
    M: Model<T> + ?Sized,
{
    if !game.is_deterministic() {
        return Err(EisError::UnsupportedDynamics(
            "MCTS improvement requires deterministic transitions".into(),
        ));
    }
    cfg.validate()?;
    let width = game.actions(state).len();
    let gamma = game.gamma();
    let m = T::lit(cfg.simulations as f64);
    let mut q_hat = Vec::with_capacity(width);
    let mut samples = 0u64;
    for action in 0..width {
        let first = game.sample_step(state, action, rng)?;
        let mut reward_sum = first.reward;
        let mut tree = SearchTree::new(game, model, cfg, first.next)?;
        tree.simulate(rng)?;
        for _ in 1..cfg.simulations {
            reward_sum = reward_sum + game.sample_step(state, action, rng)?.reward;
            tree.simulate(rng)?;
        }
        samples += cfg.simulations as u64 + tree.samples();
        q_hat.push(reward_sum / m + gamma * tree.estimate());
    }
    debug_assert_eq!(samples, (cfg.simulations * (1 + cfg.depth) * width) as u64);
    let (v_hat, _) = backup(&q_hat, state.player);
    let pi_hat = boltzmann_policy(&q_hat, tau, state.player)?;
    Ok(ImprovementResult {
        v_hat,
        pi_hat,
        q_hat,
        samples_used: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::toy::GridChain;
    use crate::game::{ActionSet, CaseStudyGame, CountingGame, Region, Step};
    use crate::improvement::{UniformZeroModel, ValueFnModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Single-action chain: rewards r_k at cell k, always moving one cell right.
    fn single_action_chain() -> GridChain<f64> {
        let p1: Vec<Vec<f64>> = (0..6).map(|k| vec![0.1 * k as f64]).collect();
        let p2: Vec<Vec<f64>> = (0..6).map(|k| vec![-0.05 * k as f64]).collect();
        GridChain::new(vec![1], [p1, p2], 0.9).unwrap()
    }

    /// Closed-form single-path rollup `sum gamma^k r_k + gamma^H leaf`.
    fn rollup(game: &GridChain<f64>, start: &GameState<f64>, depth: usize, leaf: impl Fn(&GameState<f64>) -> f64) -> f64 {
        let mut s = start.clone();
        let mut total = 0.0;
        let mut discount = 1.0;
        for _ in 0..depth {
            let cell = game.cell_of(&s);
            total += discount * game.reward(s.player, cell, 0);
            s = game.next_state(&s, 0).unwrap();
            discount *= 0.9;
        }
        total + discount * leaf(&s)
    }

    #[test]
    fn single_path_is_exact() {
        let game = single_action_chain();
        let leaf = ValueFnModel::new(1, |s: &GameState<f64>| 0.3 * s.x());
        let root = GameState::scalar(0.15, Player::P1);
        let cfg = MctsConfig::new(4, 7, game.v_max());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = fixed_depth_mcts(&game, &root, &leaf, &cfg, &mut rng).unwrap();
        let expect = rollup(&game, &root, 4, |s| 0.3 * s.x());
        assert!((est - expect).abs() < 1e-12);
    }

    #[test]
    fn leaf_bias_shifts_by_discounted_amount() {
        let game = single_action_chain();
        let b = 0.2;
        let base = ValueFnModel::new(1, |_: &GameState<f64>| 0.0);
        let biased = ValueFnModel::new(1, move |_: &GameState<f64>| b);
        let root = GameState::scalar(-0.95, Player::P2);
        let cfg = MctsConfig::new(3, 5, game.v_max());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v0 = fixed_depth_mcts(&game, &root, &base, &cfg, &mut rng).unwrap();
        let v1 = fixed_depth_mcts(&game, &root, &biased, &cfg, &mut rng).unwrap();
        assert!((v1 - v0 - 0.9f64.powi(3) * b).abs() < 1e-12);
    }

    #[test]
    fn rejects_stochastic_games_and_zero_depth() {
        let game = CaseStudyGame::<f64>::new();
        let leaf = UniformZeroModel { actions: 5 };
        let root = GameState::scalar(0.5, Player::P1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = MctsConfig::new(2, 5, 4.9);
        assert!(matches!(
            fixed_depth_mcts(&game, &root, &leaf, &cfg, &mut rng),
            Err(EisError::UnsupportedDynamics(_))
        ));
        let chain = single_action_chain();
        let cfg = MctsConfig::new(0, 5, 4.9);
        assert!(matches!(
            fixed_depth_mcts(&chain, &root, &leaf, &cfg, &mut rng),
            Err(EisError::InvalidParameter(_))
        ));
    }

    #[test]
    fn visit_counts_add_up() {
        let game = GridChain::<f64>::random(6, vec![-1, 0, 1], 0.8, 3).unwrap();
        let leaf = UniformZeroModel { actions: 3 };
        let cfg = MctsConfig::new(3, 100, game.v_max());
        let mut tree = SearchTree::new(&game, &leaf, &cfg, GameState::scalar(0.5, Player::P1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            tree.simulate(&mut rng).unwrap();
            assert!(tree.visits_consistent());
        }
        assert_eq!(tree.root_visits().iter().sum::<u64>(), 100);
        assert_eq!(tree.samples(), 300);
    }

    /// Every action leads to an absorbing zero-reward, zero-value sink.
    struct Absorbing {
        actions: ActionSet<f64>,
        rewards: Vec<f64>,
        regions: [Region<f64>; 2],
    }

    impl Absorbing {
        fn new(rewards: Vec<f64>) -> Self {
            Absorbing {
                actions: ActionSet::new((0..rewards.len()).map(|i| i as f64).collect()).unwrap(),
                rewards,
                regions: [
                    Region::interval(0.0, 1.0, Player::P1),
                    Region::interval(-1.0, -0.1, Player::P2),
                ],
            }
        }
        fn is_sink(s: &GameState<f64>) -> bool {
            s.x() == 1.0 || s.x() == -1.0
        }
    }

    impl Game<f64> for Absorbing {
        fn gamma(&self) -> f64 {
            0.9
        }
        fn r_max(&self) -> f64 {
            self.rewards.iter().fold(0.0, |m, r| m.max(r.abs()))
        }
        fn actions(&self, _: &GameState<f64>) -> &ActionSet<f64> {
            &self.actions
        }
        fn regions(&self) -> &[Region<f64>] {
            &self.regions
        }
        fn is_deterministic(&self) -> bool {
            true
        }
        fn next_state(&self, s: &GameState<f64>, _a: usize) -> Result<GameState<f64>> {
            let p = s.player.opponent();
            Ok(GameState::scalar(if p == Player::P1 { 1.0 } else { -1.0 }, p))
        }
        fn sample_step(&self, s: &GameState<f64>, a: usize, _: &mut dyn RngCore) -> Result<Step<f64>> {
            let reward = if Self::is_sink(s) { 0.0 } else { self.rewards[a] };
            Ok(Step {
                next: self.next_state(s, a)?,
                reward,
            })
        }
    }

    #[test]
    fn absorbing_construction_gives_exact_q() {
        let game = CountingGame::new(Absorbing::new(vec![0.3, -0.2, 0.7]));
        let model = UniformZeroModel { actions: 3 };
        let cfg = MctsConfig::new(2, 10, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p1 = improvement_query(&game, &model, &GameState::scalar(0.5, Player::P1), &cfg, 0.5, &mut rng).unwrap();
        for (q, want) in p1.q_hat.iter().zip([0.3, -0.2, 0.7]) {
            assert!((q - want).abs() < 1e-12);
        }
        assert_eq!(p1.v_hat, p1.q_hat[2]);
        assert_eq!(p1.pi_hat, boltzmann_policy(&p1.q_hat, 0.5, Player::P1).unwrap());
        assert_eq!(p1.samples_used, 10 * 3 * 3);
        assert_eq!(game.count(), p1.samples_used);

        let p2 = improvement_query(&game, &model, &GameState::scalar(-0.5, Player::P2), &cfg, 0.5, &mut rng).unwrap();
        assert_eq!(p2.v_hat, p2.q_hat[1]);
        assert_eq!(p2.pi_hat, boltzmann_policy(&p2.q_hat, 0.5, Player::P2).unwrap());
    }

    #[test]
    fn symmetric_rewards_give_uniform_policy() {
        let game = Absorbing::new(vec![0.4; 4]);
        let model = UniformZeroModel { actions: 4 };
        let cfg = MctsConfig::new(1, 3, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let res = improvement_query(&game, &model, &GameState::scalar(0.2, Player::P1), &cfg, 1.0, &mut rng).unwrap();
        for p in res.pi_hat.probs() {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = MctsConfig::new(2, 4, 1.0f64);
        assert!(cfg.validate().is_ok());
        cfg.eta = 0.4;
        assert!(cfg.validate().is_err());
        cfg.eta = 0.5;
        cfg.ucb = vec![UcbConstants { beta: 1.0, xi: 4.0, alpha: 1.0 }];
        assert!(cfg.validate().is_err());
        cfg.ucb = vec![UcbConstants::default(); 3];
        assert!(cfg.validate().is_err());
    }
}
