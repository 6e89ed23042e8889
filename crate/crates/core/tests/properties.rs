use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eis::exploration::{coverage_time_estimate, UniformSampler};
use eis::game::toy::GridChain;
use eis::game::{CaseStudyGame, CountingGame, Game, GameState, Player};
use eis::improvement::{
    fixed_depth_mcts, improvement_query, sparse_sample_count, sparse_sampling_query, MctsConfig, Model,
    SamplingMode, UcbConstants, UniformZeroModel, ValueFnModel,
};
use eis::metrics::{kl_divergence, Distribution, Kl};
use eis::rng::derived;
use eis::supervised::{build_partition, nn_fit, TrainingDatum};

/// Depth-limited minimax of a grid chain, straight from its tables.
fn minimax(game: &GridChain<f64>, player: Player, cell: usize, depth: usize, leaf: &dyn Fn(Player, usize) -> f64) -> f64 {
    if depth == 0 {
        return leaf(player, cell);
    }
    let q = (0..game.moves().len()).map(|a| {
        game.reward(player, cell, a) + game.gamma() * minimax(game, player.opponent(), game.next_cell(cell, a), depth - 1, leaf)
    });
    match player {
        Player::P1 => q.fold(f64::NEG_INFINITY, f64::max),
        Player::P2 => q.fold(f64::INFINITY, f64::min),
    }
}

#[test]
fn mcts_converges_to_depth_limited_minimax() {
    let game = GridChain::<f64>::random(8, vec![-1, 0, 1, 2], 0.8, 3).unwrap();
    let leaf_fn = |p: Player, c: usize| p.sign::<f64>() * 0.1 * c as f64;
    let leaf = ValueFnModel::new(4, |s: &GameState<f64>| leaf_fn(s.player, game.cell_of(s)));
    let mut cfg = MctsConfig::new(3, 3000, game.v_max());
    cfg.ucb = vec![UcbConstants::default()];
    let mut worst: f64 = 0.0;
    for c in 0..8 {
        for player in [Player::P1, Player::P2] {
            let s = game.cell_center(player, c);
            let truth = minimax(&game, player, c, 3, &leaf_fn);
            let mut total = 0.0;
            for seed in 0..5 {
                total += fixed_depth_mcts(&game, &s, &leaf, &cfg, &mut derived(seed, c as u64)).unwrap();
            }
            worst = worst.max((total / 5.0 - truth).abs());
        }
    }
    assert!(worst <= 0.05 * game.v_max(), "worst deviation {worst}");
}

#[test]
fn improvement_queries_use_the_advertised_samples() {
    let game = CountingGame::new(GridChain::<f64>::random(5, vec![-1, 0, 1], 0.8, 2).unwrap());
    let model = UniformZeroModel { actions: 3 };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (depth, m) in [(1, 1), (2, 17), (4, 40)] {
        game.reset();
        let mut cfg = MctsConfig::new(depth, m, game.v_max());
        cfg.ucb = vec![UcbConstants::default(); depth.max(1)];
        let s = GameState::scalar(0.3, Player::P1);
        let res = improvement_query(&game, &model, &s, &cfg, 1.0, &mut rng).unwrap();
        let expected = (m * (1 + depth) * 3) as u64;
        assert_eq!(res.samples_used, expected);
        assert_eq!(game.count(), expected);
    }

    let stochastic = CountingGame::new(CaseStudyGame::<f64>::new());
    for (depth, width) in [(1, 4), (2, 3)] {
        stochastic.reset();
        let s = GameState::scalar(-0.4, Player::P2);
        let res = sparse_sampling_query(&stochastic, &UniformZeroModel { actions: 5 }, &s, depth, width, SamplingMode::Sampled, 1.0, &mut rng)
            .unwrap();
        let expected = sparse_sample_count(5, depth, width);
        assert_eq!(res.samples_used, expected);
        assert_eq!(stochastic.count(), expected);
    }
}

#[test]
fn nn_averages_out_bounded_noise() {
    let game = CaseStudyGame::<f64>::new();
    let (h, eps, k) = (0.05, 0.2, 100);
    let part = build_partition(game.regions(), h).unwrap();
    let f = |x: f64| x.sin();
    let bound = h + 3.0 * eps / (k as f64).sqrt();
    let uniform = Distribution::uniform(5);
    let mut good = 0;
    for trial in 0..200 {
        let mut rng = derived(99, trial);
        let mut data = Vec::with_capacity(part.len() * k);
        for cell in part.cells() {
            for _ in 0..k {
                let x = rng.gen_range(cell.lo[0]..cell.hi[0]);
                data.push(TrainingDatum {
                    state: GameState::scalar(x, cell.player),
                    v_hat: f(x) + rng.gen_range(-eps..eps),
                    pi_hat: uniform.clone(),
                });
            }
        }
        let model = nn_fit(&data, &part, true).unwrap();
        let all_cells = part.cells().iter().enumerate().all(|(i, cell)| {
            (0..=10).all(|j| {
                let x = cell.lo[0] + (cell.hi[0] - cell.lo[0]) * j as f64 / 10.0;
                let s = GameState::scalar(x, cell.player);
                // shared faces belong to one neighbour only
                part.locate(&s) != i || (model.value(&s) - f(x)).abs() <= bound
            })
        });
        if all_cells {
            good += 1;
        }
    }
    assert!(good >= 190, "{good}/200 trials within the bound");
}

#[test]
fn coverage_tail_is_controlled() {
    let game = CaseStudyGame::<f64>::new();
    let part = build_partition(game.regions(), 0.1).unwrap();
    let sampler = UniformSampler::new(game.regions()).unwrap();
    let start = GameState::scalar(0.5, Player::P1);
    let stats = coverage_time_estimate(&sampler, &start, &part, 3, 300, 1_000_000, 5).unwrap();
    assert_eq!(stats.failures, 0);
    for delta in [0.1, 0.2] {
        assert!(stats.exceedance(delta) <= delta, "delta {delta}: {}", stats.exceedance(delta));
    }
}

fn datum_strategy() -> impl Strategy<Value = Vec<(f64, bool, f64, Vec<f64>)>> {
    prop::collection::vec(
        (0.1f64..1.1, any::<bool>(), -4.9f64..4.9, prop::collection::vec(0.01f64..1.0, 5)),
        1..120,
    )
}

fn to_data(raw: &[(f64, bool, f64, Vec<f64>)]) -> Vec<TrainingDatum<f64>> {
    raw.iter()
        .map(|(m, p1, v, w)| {
            let (x, player) = if *p1 { (*m, Player::P1) } else { (-*m, Player::P2) };
            TrainingDatum {
                state: GameState::scalar(x, player),
                v_hat: *v,
                pi_hat: Distribution::normalize(w.clone()).unwrap(),
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn kl_is_nonnegative(
        p in prop::collection::vec(0.0f64..1.0, 2..9),
        seed in any::<u64>(),
    ) {
        prop_assume!(p.iter().sum::<f64>() > 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = p.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
        let p = Distribution::normalize(p).unwrap();
        let q = Distribution::normalize(q).unwrap();
        match kl_divergence(&p, &q).unwrap() {
            Kl::Finite(v) => prop_assert!(v >= -1e-15),
            Kl::Infinite => prop_assert!(false, "full-support reference"),
        }
    }

    #[test]
    fn nn_fit_cell_means(raw in datum_strategy(), h in 0.05f64..0.6) {
        let game = CaseStudyGame::<f64>::new();
        let part = build_partition(game.regions(), h).unwrap();
        let data = to_data(&raw);
        let model = nn_fit(&data, &part, false).unwrap();
        for (i, fit) in model.fits().iter().enumerate() {
            let members: Vec<_> = data.iter().filter(|d| part.locate(&d.state) == i).collect();
            if members.is_empty() {
                continue;
            }
            let mean = members.iter().map(|d| d.v_hat).sum::<f64>() / members.len() as f64;
            prop_assert!((fit.value - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn nn_is_piecewise_constant_with_valid_policies(raw in datum_strategy(), h in 0.05f64..0.6, probe in prop::collection::vec(0.1f64..1.1, 20)) {
        let game = CaseStudyGame::<f64>::new();
        let part = build_partition(game.regions(), h).unwrap();
        let model = nn_fit(&to_data(&raw), &part, false).unwrap();
        for m in probe {
            for s in [GameState::scalar(m, Player::P1), GameState::scalar(-m, Player::P2)] {
                let cell = part.cell(part.locate(&s));
                let c = GameState::new(cell.center(), s.player);
                prop_assert_eq!(model.value(&s), model.value(&c));
                let pi = model.policy(&s);
                let pc = model.policy(&c);
                prop_assert_eq!(pi.probs(), pc.probs());
                let total: f64 = pi.probs().iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                prop_assert!(pi.probs().iter().all(|&p| p >= 0.0));
            }
        }
    }
}
