use crate::error::{param, Result};
use crate::game::{CaseStudyGame, ExpectationModel, Game, GameState, Player};
use crate::scalar::Real;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// The benchmark game on equally spaced grids with exact transition
/// expectations.
///
/// States `0..n` are player one's grid on `[0.1, 1.1]` in increasing order,
/// states `n..2n` player two's grid on `[-1.1, -0.1]` in increasing order.
/// Gaussian mass below the first midpoint of the target grid goes to its
/// lower end point (this includes everything clipped at the lower bound),
/// mass above the last midpoint to its upper end point and the rest to the
/// nearest grid point.
#[derive(Clone, Debug)]
pub struct DiscretizedGame<T> {
    game: CaseStudyGame<T>,
    points: usize,
    spacing: f64,
    /// `cdf[target][action][u] = Phi(lo_t + 0.1 - a + (u + 1/2) spacing)`.
    ///
    /// With `|s| = 0.1 + k spacing` and target midpoints
    /// `b_j = lo_t + (j + 1/2) spacing`, the cdf of midpoint `j` is entry
    /// `j + k`.
    cdf: [Vec<Vec<f64>>; 2],
    rewards: Vec<Vec<T>>,
}

/// Grid discretization with `points` states per player.
pub fn discretize_case_study<T: Real>(points: usize) -> Result<DiscretizedGame<T>> {
    if points < 2 {
        return Err(param("need at least two grid points per player"));
    }
    let game = CaseStudyGame::<T>::new();
    let spacing = 1.0 / (points - 1) as f64;
    let labels: Vec<f64> = game.action_set().labels().iter().map(|a| a.as_f64()).collect();
    let table = |target: Player| -> Vec<Vec<f64>> {
        let lo = game.bounds(target).0.as_f64();
        labels
            .iter()
            .map(|&a| {
                (0..2 * points - 2)
                    .map(|u| normal_cdf(lo + 0.1 - a + (u as f64 + 0.5) * spacing))
                    .collect()
            })
            .collect()
    };
    let cdf = [table(Player::P1), table(Player::P2)];
    let mut dg = DiscretizedGame {
        game,
        points,
        spacing,
        cdf,
        rewards: Vec::new(),
    };
    dg.rewards = (0..2 * points)
        .map(|i| {
            let s = dg.state(i);
            (0..labels.len())
                .map(|a| dg.game.mean_reward(&s, a).expect("valid action"))
                .collect()
        })
        .collect();
    Ok(dg)
}

impl<T: Real> DiscretizedGame<T> {
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn game(&self) -> &CaseStudyGame<T> {
        &self.game
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Grid coordinate of state `i`.
    pub fn coord(&self, i: usize) -> f64 {
        let n = self.points;
        if i < n {
            0.1 + i as f64 * self.spacing
        } else {
            -1.1 + (i - n) as f64 * self.spacing
        }
    }

    pub fn state(&self, i: usize) -> GameState<T> {
        let player = if i < self.points { Player::P1 } else { Player::P2 };
        GameState::scalar(T::lit(self.coord(i)), player)
    }

    pub fn states(&self) -> Vec<GameState<T>> {
        (0..2 * self.points).map(|i| self.state(i)).collect()
    }

    /// Position `k` of `|s|` on the lattice `0.1 + k spacing`.
    fn abs_rank(&self, i: usize) -> usize {
        let n = self.points;
        if i < n {
            i
        } else {
            n - 1 - (i - n)
        }
    }

    fn target(&self, i: usize) -> Player {
        if i < self.points {
            Player::P2
        } else {
            Player::P1
        }
    }

    fn offset(&self, player: Player) -> usize {
        player.index() * self.points
    }

    /// `Phi(b_j - mu)` for `j = 0..n-1` of the target grid.
    fn midpoint_cdf(&self, i: usize, action: usize) -> &[f64] {
        let k = self.abs_rank(i);
        let t = self.target(i).index();
        &self.cdf[t][action][k..k + self.points - 1]
    }

    /// Transition probabilities from state `i` under `action`, over all
    /// `2n` states.
    pub fn row(&self, i: usize, action: usize) -> Vec<f64> {
        let n = self.points;
        let f = self.midpoint_cdf(i, action);
        let off = self.offset(self.target(i));
        let mut row = vec![0.0; 2 * n];
        row[off] = f[0];
        for j in 1..n - 1 {
            row[off + j] = f[j] - f[j - 1];
        }
        row[off + n - 1] = 1.0 - f[n - 2];
        row
    }
}

impl<T: Real> ExpectationModel<T> for DiscretizedGame<T> {
    fn num_states(&self) -> usize {
        2 * self.points
    }

    fn player(&self, state: usize) -> Player {
        if state < self.points {
            Player::P1
        } else {
            Player::P2
        }
    }

    fn num_actions(&self, _state: usize) -> usize {
        self.game.action_set().len()
    }

    fn gamma(&self) -> T {
        self.game.gamma()
    }

    fn mean_reward(&self, state: usize, action: usize) -> T {
        self.rewards[state][action]
    }

    /// Telescoped form `v_{n-1} + sum_j F_j (v_j - v_{j+1})`.
    fn expected_value(&self, state: usize, action: usize, values: &[T]) -> T {
        let n = self.points;
        let v = &values[self.offset(self.target(state))..][..n];
        let f = self.midpoint_cdf(state, action);
        let mut acc = v[n - 1].as_f64();
        for j in 0..n - 1 {
            acc += f[j] * (v[j] - v[j + 1]).as_f64();
        }
        T::lit(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Composite Simpson rule for the standard normal density.
    fn simpson_mass(a: f64, b: f64) -> f64 {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            s += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_matches_quadrature() {
        for x in [-3.0, -1.2, -0.3, 0.0, 0.4, 2.5] {
            let q = 0.5 + simpson_mass(0.0, x);
            assert!((normal_cdf(x) - q).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn two_points_per_player() {
        let dg = discretize_case_study::<f64>(2).unwrap();
        assert_eq!(dg.num_states(), 4);
        for i in 0..4 {
            for a in 0..5 {
                let row = dg.row(i, a);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&p| p >= 0.0));
            }
        }
        assert!(discretize_case_study::<f64>(1).is_err());
    }

    #[test]
    fn boundary_mass_near_lower_end() {
        // s = 0.1, a = 0.1: next state -0.1 + 0.1 + N(0,1) on [-1.1, -0.1]
        let n = 101;
        let dg = discretize_case_study::<f64>(n).unwrap();
        let row = dg.row(0, 0);
        let mu = 0.0;
        let half = 0.5 * dg.spacing();
        let low_mid = -1.1 + half;
        let high_mid = -0.1 - half;
        let expect_low = 0.5 - simpson_mass(low_mid - mu, 0.0);
        let expect_high = 0.5 - simpson_mass(0.0, high_mid - mu);
        assert!((row[n] - expect_low).abs() < 1e-9);
        assert!((row[2 * n - 1] - expect_high).abs() < 1e-9);
        assert!((row[n] - normal_cdf(low_mid - mu)).abs() < 1e-12);
    }

    #[test]
    fn rows_depend_on_s_only_through_abs() {
        // each row equals a direct evaluation from |s|, independent of the
        // lattice shortcut
        let n = 40;
        let dg = discretize_case_study::<f64>(n).unwrap();
        for i in 0..2 * n {
            let x = dg.coord(i).abs();
            let (lo, off) = if i < n { (-1.1, n) } else { (0.1, 0) };
            for (a_idx, a) in [0.1, 0.2, 0.3, 0.4, 0.5].iter().enumerate() {
                let mu = -x + a;
                let mid = |j: usize| lo + (j as f64 + 0.5) * dg.spacing();
                let row = dg.row(i, a_idx);
                for j in 0..n {
                    let upper = if j + 1 < n { normal_cdf(mid(j) - mu) } else { 1.0 };
                    let lower = if j > 0 { normal_cdf(mid(j - 1) - mu) } else { 0.0 };
                    assert!((row[off + j] - (upper - lower)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn telescoped_expectation_matches_row() {
        let n = 30;
        let dg = discretize_case_study::<f64>(n).unwrap();
        let values: Vec<f64> = (0..2 * n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        for i in [0, 5, n - 1, n, n + 17, 2 * n - 1] {
            for a in 0..5 {
                let direct: f64 = dg.row(i, a).iter().zip(&values).map(|(p, v)| p * v).sum();
                assert!((dg.expected_value(i, a, &values) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rewards_match_game() {
        let dg = discretize_case_study::<f64>(11).unwrap();
        let s = dg.state(14);
        assert!((s.x() - (-0.8)).abs() < 1e-12);
        assert!((dg.mean_reward(14, 2) - (3.0 * 0.09 - 0.3)).abs() < 1e-12);
    }
}
