use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use eis::baseline::{
    brute_force_solve, discretize_case_study, export_reports, plot_error_curves, value_iteration,
};
use eis::config::{AnyGame, RunConfig};
use eis::driver::{eis_run, EisModel, TabulatedReference};
use eis::exploration::{coupon_collector_mean, coverage_time_estimate, UniformSampler};
use eis::game::{ExpectationModel, Game, GameState, Player};
use eis::improvement::{
    improvement_query, sparse_sampling_query, ImprovementResult, MctsConfig, Model, SamplingMode,
    UcbConstants, UniformZeroModel,
};
use eis::rng::derived;
use eis::supervised::build_partition;

/// Explore-improve-supervise experiments on turn-based zero-sum games.
#[derive(Parser, Debug)]
#[command(name = "eis", version)]
struct Cli {
    /// TOML run configuration; every section is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Value iteration on the discretized benchmark game; writes the V/Q table.
    ViBaseline,
    /// Full EIS run; writes reports.csv, errors.svg, model.json.
    EisRun,
    /// Improvement oracle at configured states; prints V, Q, pi, samples.
    MctsEval,
    /// Coverage-time statistics of uniform exploration.
    CoverageBench,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn player_name(p: Player) -> &'static str {
    match p {
        Player::P1 => "P1",
        Player::P2 => "P2",
    }
}

fn write_sidecar(out: &Path, name: &str, seed: u64, cfg: &RunConfig, extra: serde_json::Value) -> Result<()> {
    let meta = json!({
        "command": name,
        "seed": seed,
        "config": cfg,
        "result": extra,
    });
    fs::write(out.join("run.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn vi_baseline(cfg: &RunConfig, out: &Path, seed: u64) -> Result<()> {
    let dg = discretize_case_study::<f64>(cfg.vi.points)?;
    let sol = value_iteration(&dg, cfg.vi.iterations, cfg.vi.tolerance)?;
    let actions = dg.num_actions(0);
    let mut w = csv_writer(&out.join("vi_values.csv"))?;
    let mut header = vec!["index".to_string(), "x".into(), "player".into(), "v".into()];
    header.extend((0..actions).map(|a| format!("q{a}")));
    w.write_record(&header)?;
    for i in 0..dg.num_states() {
        let s = dg.state(i);
        let mut row = vec![i.to_string(), s.x().to_string(), player_name(s.player).into(), sol.values[i].to_string()];
        row.extend(sol.q[i].iter().map(|q| q.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let mut w = csv_writer(&out.join("vi_residuals.csv"))?;
    w.write_record(["sweep", "residual"])?;
    for (k, r) in sol.residuals.iter().enumerate() {
        w.write_record([(k + 1).to_string(), r.to_string()])?;
    }
    w.flush()?;

    let n = dg.points();
    let argmin = |range: std::ops::Range<usize>| {
        range
            .min_by(|&a, &b| sol.values[a].total_cmp(&sol.values[b]))
            .map(|i| dg.coord(i))
            .unwrap_or(f64::NAN)
    };
    let (min1, min2) = (argmin(0..n), argmin(n..2 * n));
    let residual = sol.residuals.last().copied().unwrap_or(0.0);
    println!("states per player: {n}, sweeps: {}, final residual: {residual:e}", sol.residuals.len());
    println!("argmin V on P1 region: {min1:.4}, on P2 region: {min2:.4}");
    write_sidecar(out, "vi-baseline", seed, cfg, json!({"residual": residual, "argmin_p1": min1, "argmin_p2": min2}))
}

fn reference_for(cfg: &RunConfig, game: &AnyGame) -> Result<Option<TabulatedReference<f64>>> {
    if !cfg.reference.enabled {
        return Ok(None);
    }
    Ok(match game {
        AnyGame::GridChain(g) => {
            let sol = brute_force_solve(g)?;
            Some(TabulatedReference::from_exact(g, &sol, cfg.reference.eval_points)?)
        }
        AnyGame::CaseStudy(_) => {
            let dg = discretize_case_study::<f64>(cfg.vi.points)?;
            let sol = value_iteration(&dg, cfg.vi.iterations, cfg.vi.tolerance)?;
            Some(TabulatedReference::from_vi(&dg, &sol)?)
        }
        AnyGame::TwoPoint(_) => None,
    })
}

fn run_eis(cfg: &RunConfig, out: &Path, seed: u64) -> Result<()> {
    let Some(mut eis) = cfg.eis.clone() else {
        bail!("eis-run needs an [eis] section in the config file");
    };
    eis.seed = seed;
    let game = cfg.game.build()?;
    let reference = reference_for(cfg, &game)?;
    let outcome = eis_run(&game, reference.as_ref(), &eis)?;
    export_reports(&outcome.reports, out.join("reports.csv"))?;
    let has_errors = outcome.reports.iter().any(|r| r.sup_err.is_some());
    if has_errors {
        plot_error_curves(&outcome.reports, out.join("errors.svg"))?;
    }
    fs::write(out.join("model.json"), outcome.model.to_json()? + "\n")?;
    for r in &outcome.reports {
        let err = r.sup_err.map_or(String::from("-"), |e| format!("{e:.4}"));
        let mean = r.mean_err.map_or(String::from("-"), |e| format!("{e:.4}"));
        println!(
            "l={:>3} H={} m={} h={:.4} K={} N={} n={} samples={} sup={err} mean={mean}",
            r.iteration, r.depth, r.simulations, r.h, r.k, r.cells, r.states, r.samples
        );
    }
    let initial = outcome.initial_error.map(|e| json!({"sup": e.sup, "mean": e.mean, "max_kl": e.max_kl}));
    write_sidecar(
        out,
        "eis-run",
        seed,
        cfg,
        json!({
            "initial_error": initial,
            "exploration_failures": outcome.exploration_failures,
            "capped_iterations": outcome.capped_iterations,
            "total_samples": outcome.total_samples,
            "ucb_default": UcbConstants::<f64>::default(),
        }),
    )
}

fn default_states(game: &AnyGame) -> Vec<GameState<f64>> {
    game.regions()
        .iter()
        .flat_map(|r| {
            (0..5).map(move |i| {
                let t = (i as f64 + 0.5) / 5.0;
                GameState::scalar(r.lo[0] + (r.hi[0] - r.lo[0]) * t, r.player)
            })
        })
        .collect()
}

fn mcts_eval(cfg: &RunConfig, out: &Path, seed: u64) -> Result<()> {
    let game = cfg.game.build()?;
    let sec = &cfg.mcts_eval;
    let probe = &game.regions()[0];
    let actions = game.actions(&GameState::new(probe.center(), probe.player)).len();
    let model: EisModel<f64> = match &sec.model {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading model {path}"))?;
            EisModel::from_json(&text)?
        }
        None => EisModel::Initial(UniformZeroModel { actions }),
    };
    let states = if sec.states.is_empty() { default_states(&game) } else { sec.states.clone() };
    let mcts = MctsConfig::new(sec.depth, sec.simulations, game.v_max());
    let mut w = csv_writer(&out.join("mcts_eval.csv"))?;
    let mut header = vec!["x".to_string(), "player".into(), "v_hat".into(), "samples".into()];
    header.extend((0..actions).map(|a| format!("q{a}")));
    header.extend((0..actions).map(|a| format!("pi{a}")));
    w.write_record(&header)?;
    println!("{:>8} {:>3} {:>9} {:>9} {:>9}", "x", "p", "v_hat", "model_v", "samples");
    for (i, s) in states.iter().enumerate() {
        let mut rng = derived(seed, i as u64);
        let res: ImprovementResult<f64> = if game.is_deterministic() {
            improvement_query(&game, &model, s, &mcts, sec.tau, &mut rng)?
        } else {
            sparse_sampling_query(&game, &model, s, sec.depth, sec.width, SamplingMode::Sampled, sec.tau, &mut rng)?
        };
        println!(
            "{:>8.4} {:>3} {:>9.4} {:>9.4} {:>9}",
            s.x(),
            player_name(s.player),
            res.v_hat,
            model.value(s),
            res.samples_used
        );
        let mut row = vec![s.x().to_string(), player_name(s.player).into(), res.v_hat.to_string(), res.samples_used.to_string()];
        row.extend(res.q_hat.iter().map(|q| q.to_string()));
        row.extend(res.pi_hat.probs().iter().map(|p| p.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    write_sidecar(out, "mcts-eval", seed, cfg, json!({"states": states.len()}))
}

fn coverage_bench(cfg: &RunConfig, out: &Path, seed: u64) -> Result<()> {
    let game = cfg.game.build()?;
    let sec = &cfg.coverage;
    let partition = build_partition(game.regions(), sec.h)?;
    let sampler = UniformSampler::new(game.regions())?;
    let start = GameState::new(game.regions()[0].center(), game.regions()[0].player);
    let stats = coverage_time_estimate(&sampler, &start, &partition, sec.k, sec.trials, sec.max_steps, seed)?;

    let mut w = csv_writer(&out.join("coverage_trials.csv"))?;
    w.write_record(["trial", "steps"])?;
    for (i, t) in stats.times.iter().enumerate() {
        w.write_record([i.to_string(), t.to_string()])?;
    }
    w.flush()?;

    let coupon = coupon_collector_mean(partition.len());
    let mut w = csv_writer(&out.join("coverage_summary.csv"))?;
    w.write_record(["cells", "k", "trials", "mean", "stddev", "failures", "coupon_collector", "k_times_coupon"])?;
    w.write_record([
        partition.len().to_string(),
        sec.k.to_string(),
        sec.trials.to_string(),
        stats.mean.to_string(),
        stats.stddev.to_string(),
        stats.failures.to_string(),
        coupon.to_string(),
        (coupon * sec.k as f64).to_string(),
    ])?;
    w.flush()?;

    let mut w = csv_writer(&out.join("coverage_quantiles.csv"))?;
    w.write_record(["delta", "threshold", "fraction_exceeding"])?;
    println!("cells={} K={} trials={} mean={:.2} stddev={:.2} coupon={coupon:.2}", partition.len(), sec.k, sec.trials, stats.mean, stats.stddev);
    for &d in &sec.deltas {
        let threshold = std::f64::consts::E * stats.mean * (1.0 / d).ln();
        let frac = stats.exceedance(d);
        println!("delta={d}: threshold={threshold:.2} exceeding={frac:.4}");
        w.write_record([d.to_string(), threshold.to_string(), frac.to_string()])?;
    }
    w.flush()?;
    write_sidecar(out, "coverage-bench", seed, cfg, json!({"mean": stats.mean, "stddev": stats.stddev}))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    let seed = cli
        .seed
        .or(cfg.seed)
        .or_else(|| cfg.eis.as_ref().map(|e| e.seed))
        .unwrap_or(0);
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match cli.command {
        Command::ViBaseline => vi_baseline(&cfg, &cli.out, seed),
        Command::EisRun => run_eis(&cfg, &cli.out, seed),
        Command::MctsEval => mcts_eval(&cfg, &cli.out, seed),
        Command::CoverageBench => coverage_bench(&cfg, &cli.out, seed),
    }
}
