use super::Player;
use crate::error::{param, EisError, Result};
use crate::metrics::Distribution;
use crate::scalar::Real;

/// Softmax of `q / tau` for the maximizer, of `-q / tau` for the minimizer.
///
/// The largest exponent is subtracted before exponentiating, so any finite
/// `q` and positive `tau` yield a full-support distribution.
pub fn boltzmann_policy<T: Real>(q: &[T], tau: T, player: Player) -> Result<Distribution<T>> {
    if !(tau > T::zero()) || !tau.is_finite() {
        return Err(param(format!("temperature must be positive and finite, got {tau}")));
    }
    if q.is_empty() {
        return Err(param("empty Q vector"));
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(EisError::Numeric("non-finite Q value".into()));
    }
    let sign = player.sign::<T>();
    let logits: Vec<T> = q.iter().map(|&x| sign * x / tau).collect();
    let top = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let weights: Vec<T> = logits.iter().map(|&z| (z - top).exp()).collect();
    let total: T = weights.iter().copied().sum();
    Ok(Distribution::from_normalized(
        weights.into_iter().map(|w| w / total).collect(),
    ))
}
