use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Partition;
use crate::error::{check_len, param, EisError, Result};
use crate::game::GameState;
use crate::improvement::Model;
use crate::metrics::Distribution;
use crate::scalar::Real;

/// One labelled state produced by an improvement query.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingDatum<T> {
    pub state: GameState<T>,
    pub v_hat: T,
    pub pi_hat: Distribution<T>,
}

/// Fitted value and policy of one partition cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFit<T> {
    pub value: T,
    pub policy: Vec<T>,
    /// Training states that fell in this cell.
    pub count: usize,
    /// For empty cells: the cell whose fit was copied.
    pub borrowed_from: Option<usize>,
}

/// Piecewise-constant cell-average regressor for value and policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnModel<T> {
    partition: Partition<T>,
    fits: Vec<CellFit<T>>,
}

impl<T: Real> NnModel<T> {
    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn fits(&self) -> &[CellFit<T>] {
        &self.fits
    }

    /// Cells that received no training data.
    pub fn empty_cells(&self) -> Vec<usize> {
        self.fits
            .iter()
            .enumerate()
            .filter(|(_, f)| f.count == 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: NnModel<T> = serde_json::from_str(text)?;
        check_len(model.partition.len(), model.fits.len())?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Averages the labels of the training states in each cell.
///
/// In strict mode every cell must hold at least one state. Otherwise empty
/// cells copy the fit of the nearest non-empty cell (l-infinity distance
/// between centers, lowest index on ties) and are flagged.
pub fn nn_fit<T: Real>(
    data: &[TrainingDatum<T>],
    partition: &Partition<T>,
    strict: bool,
) -> Result<NnModel<T>> {
    let first = data.first().ok_or_else(|| param("no training data"))?;
    let actions = first.pi_hat.len();
    let n = partition.len();
    let mut value_sum = vec![T::zero(); n];
    let mut policy_sum = vec![vec![T::zero(); actions]; n];
    let mut counts = vec![0usize; n];
    for d in data {
        check_len(actions, d.pi_hat.len())?;
        let c = partition.locate(&d.state);
        counts[c] += 1;
        value_sum[c] = value_sum[c] + d.v_hat;
        for (acc, &p) in policy_sum[c].iter_mut().zip(d.pi_hat.probs()) {
            *acc = *acc + p;
        }
    }
    if strict {
        if let Some(cell) = counts.iter().position(|&c| c == 0) {
            return Err(EisError::NotRepresentative {
                cell,
                count: 0,
                required: 1,
            });
        }
    }
    let mut fits: Vec<CellFit<T>> = (0..n)
        .map(|c| {
            if counts[c] == 0 {
                return CellFit {
                    value: T::zero(),
                    policy: vec![T::one() / T::lit(actions as f64); actions],
                    count: 0,
                    borrowed_from: None,
                };
            }
            let k = T::lit(counts[c] as f64);
            let mean: Vec<T> = policy_sum[c].iter().map(|&p| p / k).collect();
            let total: T = mean.iter().copied().sum();
            CellFit {
                value: value_sum[c] / k,
                policy: mean.into_iter().map(|p| p / total).collect(),
                count: counts[c],
                borrowed_from: None,
            }
        })
        .collect();

    let centers: Vec<Vec<T>> = partition.cells().iter().map(|c| c.center()).collect();
    for c in 0..n {
        if counts[c] > 0 {
            continue;
        }
        let mut best: Option<(usize, T)> = None;
        for (j, center) in centers.iter().enumerate() {
            if counts[j] == 0 {
                continue;
            }
            let dist = linf(&centers[c], center);
            if best.map_or(true, |(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
        let (j, _) = best.expect("at least one cell holds data");
        fits[c] = CellFit {
            value: fits[j].value,
            policy: fits[j].policy.clone(),
            count: 0,
            borrowed_from: Some(j),
        };
    }
    Ok(NnModel {
        partition: partition.clone(),
        fits,
    })
}

fn linf<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), T::max)
}

/// Value and policy stored for the cell containing `state`.
pub fn nn_predict<T: Real>(model: &NnModel<T>, state: &GameState<T>) -> (T, Distribution<T>) {
    let fit = &model.fits[model.partition.locate(state)];
    (fit.value, Distribution::from_normalized(fit.policy.clone()))
}

impl<T: Real> Model<T> for NnModel<T> {
    fn value(&self, state: &GameState<T>) -> T {
        self.fits[self.partition.locate(state)].value
    }

    fn policy(&self, state: &GameState<T>) -> Distribution<T> {
        nn_predict(self, state).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CaseStudyGame, Game, Player, Region};
    use crate::supervised::build_partition;

    fn datum(x: f64, player: Player, v: f64, pi: &[f64]) -> TrainingDatum<f64> {
        TrainingDatum {
            state: GameState::scalar(x, player),
            v_hat: v,
            pi_hat: Distribution::new(pi.to_vec()).unwrap(),
        }
    }

    fn unit() -> Partition<f64> {
        build_partition(&[Region::interval(0.0, 1.0, Player::P1)], 1.0).unwrap()
    }

    #[test]
    fn single_cell_mean() {
        let data: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| datum(0.2 * i as f64 + 0.1, Player::P1, v, &[0.5, 0.5]))
            .collect();
        let model = nn_fit(&data, &unit(), true).unwrap();
        for x in [0.0, 0.33, 0.99] {
            assert_eq!(model.value(&GameState::scalar(x, Player::P1)), 2.0);
        }
    }

    #[test]
    fn identical_policies_are_preserved() {
        let p = [0.2, 0.3, 0.5];
        let data: Vec<_> = (0..5).map(|i| datum(i as f64 / 5.0, Player::P1, 0.0, &p)).collect();
        let model = nn_fit(&data, &unit(), true).unwrap();
        let (_, pi) = nn_predict(&model, &GameState::scalar(0.5, Player::P1));
        for (a, b) in pi.probs().iter().zip(p) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn strict_mode_requires_coverage() {
        let game = CaseStudyGame::<f64>::new();
        let part = build_partition(game.regions(), 0.5).unwrap();
        let data = vec![datum(0.3, Player::P1, 1.0, &[1.0])];
        assert!(matches!(
            nn_fit(&data, &part, true),
            Err(EisError::NotRepresentative { cell: 1, .. })
        ));
    }

    #[test]
    fn empty_cells_borrow_from_nearest() {
        let part = build_partition(&[Region::interval(0.0, 4.0, Player::P1)], 1.0).unwrap();
        let data = vec![
            datum(0.5, Player::P1, 1.0, &[1.0, 0.0]),
            datum(3.5, Player::P1, -1.0, &[0.0, 1.0]),
        ];
        let model = nn_fit(&data, &part, false).unwrap();
        assert_eq!(model.empty_cells(), vec![1, 2]);
        assert_eq!(model.fits()[1].borrowed_from, Some(0));
        // cell 2 is one cell from 3 and two from 0
        assert_eq!(model.fits()[2].borrowed_from, Some(3));
        assert_eq!(model.value(&GameState::scalar(1.5, Player::P1)), 1.0);
        assert_eq!(model.value(&GameState::scalar(2.5, Player::P1)), -1.0);
    }

    #[test]
    fn equidistant_fallback_takes_lowest_index() {
        let part = build_partition(&[Region::interval(0.0, 3.0, Player::P1)], 1.0).unwrap();
        let data = vec![
            datum(0.5, Player::P1, 1.0, &[1.0]),
            datum(2.5, Player::P1, 5.0, &[1.0]),
        ];
        let model = nn_fit(&data, &part, false).unwrap();
        assert_eq!(model.fits()[1].borrowed_from, Some(0));
    }

    #[test]
    fn singleton_cell_returns_label() {
        let part = build_partition(&[Region::interval(0.0, 2.0, Player::P1)], 1.0).unwrap();
        let data = vec![
            datum(0.25, Player::P1, 0.7, &[0.1, 0.9]),
            datum(1.25, Player::P1, -0.3, &[0.6, 0.4]),
        ];
        let model = nn_fit(&data, &part, true).unwrap();
        let (v, pi) = nn_predict(&model, &data[1].state);
        assert_eq!(v, -0.3);
        assert_eq!(pi.probs(), &[0.6, 0.4]);
        assert_eq!(nn_predict(&model, &GameState::scalar(1.9, Player::P1)), (v, pi));
    }

    #[test]
    fn json_round_trip() {
        let game = CaseStudyGame::<f64>::new();
        let part = build_partition(game.regions(), 0.25).unwrap();
        let data: Vec<_> = (0..16)
            .map(|i| {
                let x = 0.1 + (i % 8) as f64 / 8.0 + 0.01;
                let p = if i < 8 { Player::P1 } else { Player::P2 };
                let x = if p == Player::P1 { x } else { -x };
                datum(x, p, i as f64 / 10.0, &[0.25, 0.75])
            })
            .collect();
        let model = nn_fit(&data, &part, false).unwrap();
        let back = NnModel::<f64>::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(model, back);
    }
}
