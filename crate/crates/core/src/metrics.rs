//! Divergences, norms, and the classical inequalities relating them.
//!
//! The `check_*` functions evaluate both sides of an inequality and report
//! whether it holds; tests use them as oracles on randomly drawn inputs.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, EisError, Result};
use crate::game::GameState;
use crate::scalar::Real;

const INEQ_TOL: f64 = 1e-12;

/// Probability vector over an action set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution<T> {
    probs: Vec<T>,
}

impl<T: Real> Distribution<T> {
    /// Validates non-negativity and unit mass (within `1e-9`).
    pub fn new(probs: Vec<T>) -> Result<Self> {
        if probs.is_empty() {
            return Err(EisError::Domain("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(EisError::Domain(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > sum_tolerance::<T>(probs.len()) {
            return Err(EisError::Domain(format!("probabilities sum to {total}")));
        }
        Ok(Distribution { probs })
    }

    /// Scales non-negative weights to unit mass.
    pub fn normalize(weights: Vec<T>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(EisError::Domain("weights must be finite and non-negative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if !(total > T::zero()) {
            return Err(EisError::Domain("weights have zero mass".into()));
        }
        Ok(Distribution {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub(crate) fn from_normalized(probs: Vec<T>) -> Self {
        Distribution { probs }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over an empty set");
        let p = T::one() / T::lit(n as f64);
        Distribution { probs: vec![p; n] }
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn min_prob(&self) -> T {
        self.probs.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn into_vec(self) -> Vec<T> {
        self.probs
    }
}

fn sum_tolerance<T: Real>(n: usize) -> T {
    T::lit(1e-9).max(T::epsilon() * T::lit(16.0 * n as f64))
}

/// KL divergence, with support mismatch kept distinct from a large number.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Kl<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Kl<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Kl::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Kl::Finite(v) => Some(v),
            Kl::Infinite => None,
        }
    }
}

/// `sum p log(p / q)` with `0 log 0 = 0`.
pub fn kl_divergence<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<Kl<T>> {
    check_len(p.len(), q.len())?;
    let mut acc = T::zero();
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == T::zero() {
            continue;
        }
        if qi == T::zero() {
            return Ok(Kl::Infinite);
        }
        acc = acc + pi * (pi / qi).ln();
    }
    // Rounding can leave a tiny negative sum for p ≈ q.
    Ok(Kl::Finite(acc.max(T::zero())))
}

/// Half the l1 distance.
pub fn total_variation<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<T> {
    check_len(p.len(), q.len())?;
    let l1: T = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok((l1 / T::lit(2.0)).min(T::one()))
}

/// `TV(p, q) <= sqrt(KL(p || q) / 2)`.
pub fn check_pinsker<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<bool> {
    let tv = total_variation(p, q)?;
    Ok(match kl_divergence(p, q)? {
        Kl::Infinite => true,
        Kl::Finite(kl) => tv <= (kl / T::lit(2.0)).sqrt() + T::lit(INEQ_TOL),
    })
}

/// `TV(p, q) >= sqrt(min_a q(a) * KL(p || q) / 2)`; requires full-support `q`.
pub fn check_reverse_pinsker<T: Real>(p: &Distribution<T>, q: &Distribution<T>) -> Result<bool> {
    check_len(p.len(), q.len())?;
    let alpha = q.min_prob();
    if !(alpha > T::zero()) {
        return Err(EisError::Domain(
            "reverse Pinsker needs a reference with full support".into(),
        ));
    }
    let kl = kl_divergence(p, q)?
        .finite()
        .expect("full-support reference gives finite KL");
    let tv = total_variation(p, q)?;
    Ok(tv >= (alpha * kl / T::lit(2.0)).sqrt() - T::lit(INEQ_TOL))
}

fn xlogx_over<T: Real>(a: T, b: T) -> T {
    if a == T::zero() {
        T::zero()
    } else if b == T::zero() {
        T::infinity()
    } else {
        a * (a / b).ln()
    }
}

/// Log-sum inequality `(sum a) log(sum a / sum b) <= sum a_i log(a_i / b_i)`.
pub fn check_log_sum<T: Real>(a: &[T], b: &[T]) -> Result<bool> {
    check_len(a.len(), b.len())?;
    if a.iter().chain(b).any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(EisError::Domain("log-sum inputs must be finite and non-negative".into()));
    }
    let lhs = xlogx_over::<T>(a.iter().copied().sum(), b.iter().copied().sum());
    let rhs: T = a.iter().zip(b).map(|(&x, &y)| xlogx_over(x, y)).sum();
    if rhs == T::infinity() {
        return Ok(true);
    }
    Ok(lhs <= rhs + T::lit(INEQ_TOL))
}

/// `|max x - max y|` and `|min x - min y|` are both at most `max_k |x_k - y_k|`.
pub fn check_max_diff<T: Real>(x: &[T], y: &[T]) -> Result<bool> {
    check_len(x.len(), y.len())?;
    if x.is_empty() {
        return Err(EisError::Domain("empty vectors".into()));
    }
    let max = |v: &[T]| v.iter().copied().fold(T::neg_infinity(), T::max);
    let min = |v: &[T]| v.iter().copied().fold(T::infinity(), T::min);
    let gap = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (a - b).abs())
        .fold(T::zero(), T::max);
    Ok((max(x) - max(y)).abs() <= gap && (min(x) - min(y)).abs() <= gap)
}

/// Largest absolute difference over a finite set of evaluation points.
pub fn sup_error<T, F, G>(v1: F, v2: G, points: &[GameState<T>]) -> T
where
    T: Real,
    F: Fn(&GameState<T>) -> T,
    G: Fn(&GameState<T>) -> T,
{
    points
        .iter()
        .map(|s| (v1(s) - v2(s)).abs())
        .fold(T::zero(), T::max)
}

/// Largest `KL(pi(s) || reference(s))` over the evaluation points.
pub fn policy_error<T, F, G>(pi: F, reference: G, points: &[GameState<T>]) -> Result<T>
where
    T: Real,
    F: Fn(&GameState<T>) -> Distribution<T>,
    G: Fn(&GameState<T>) -> Distribution<T>,
{
    let mut worst = T::zero();
    for s in points {
        let r = reference(s);
        if !(r.min_prob() > T::zero()) {
            return Err(EisError::Domain(format!(
                "reference policy lacks full support at {:?}",
                s.coords
            )));
        }
        let kl = kl_divergence(&pi(s), &r)?
            .finite()
            .expect("full-support reference gives finite KL");
        worst = worst.max(kl);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{boltzmann_policy, Player};

    fn d(p: &[f64]) -> Distribution<f64> {
        Distribution::new(p.to_vec()).unwrap()
    }

    #[test]
    fn rejects_invalid_distributions() {
        assert!(matches!(Distribution::new(vec![0.5, 0.6]), Err(EisError::Domain(_))));
        assert!(Distribution::new(vec![-0.1, 1.1]).is_err());
        assert!(Distribution::<f64>::new(vec![]).is_err());
        assert!(Distribution::normalize(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&d(&[0.3, 0.7]), &d(&[0.3, 0.7])).unwrap(), Kl::Finite(0.0));
        let kl = kl_divergence(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap();
        assert!((kl.finite().unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])).unwrap(), Kl::Infinite);
        assert!(matches!(
            kl_divergence(&d(&[1.0]), &d(&[0.5, 0.5])),
            Err(EisError::Shape { .. })
        ));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&d(&[0.2, 0.8]), &d(&[0.2, 0.8])).unwrap(), 0.0);
        assert_eq!(total_variation(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), 1.0);
        assert!((total_variation(&d(&[0.7, 0.3]), &d(&[0.5, 0.5])).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn inequality_examples() {
        assert!(check_pinsker(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap());
        assert!(check_pinsker(&d(&[0.4, 0.6]), &d(&[0.4, 0.6])).unwrap());
        assert!(check_reverse_pinsker(&d(&[0.4, 0.6]), &d(&[0.4, 0.6])).unwrap());
        assert!(matches!(
            check_reverse_pinsker(&d(&[0.5, 0.5]), &d(&[1.0, 0.0])),
            Err(EisError::Domain(_))
        ));
        assert!(check_log_sum(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(check_log_sum(&[1.0, 2.0], &[2.0, 1.0]).unwrap());
        assert!(check_log_sum(&[0.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(check_max_diff(&[3.0, 1.0], &[1.0, 3.0]).unwrap());
        assert!(check_max_diff(&[3.0, 1.0], &[3.0, 1.0]).unwrap());
    }

    #[test]
    fn log_sum_sides() {
        // lhs = 3 log(3/3) = 0, rhs = log(1/2) + 2 log 2 = log 2
        let a = [1.0f64, 2.0];
        let b = [2.0f64, 1.0];
        let rhs: f64 = a.iter().zip(&b).map(|(x, y)| x * (x / y).ln()).sum();
        assert!((rhs - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sup_error_examples() {
        let pts: Vec<_> = (0..11).map(|i| GameState::scalar(i as f64 / 10.0, Player::P1)).collect();
        assert_eq!(sup_error(|s| s.x(), |s| s.x(), &pts), 0.0);
        let e = sup_error(|s| s.x() + 0.25, |s| s.x(), &pts);
        assert!((e - 0.25).abs() < 1e-15);
    }

    #[test]
    fn policy_error_examples() {
        let pts = vec![GameState::scalar(0.5, Player::P1)];
        let q = [0.3, -0.1, 0.2];
        let q_star = [0.25, 0.0, 0.1];
        let tau = 0.5;
        let same = policy_error(
            |_| boltzmann_policy(&q, tau, Player::P1).unwrap(),
            |_| boltzmann_policy(&q, tau, Player::P1).unwrap(),
            &pts,
        )
        .unwrap();
        assert_eq!(same, 0.0);
        let err = policy_error(
            |_| boltzmann_policy(&q, tau, Player::P1).unwrap(),
            |_| boltzmann_policy(&q_star, tau, Player::P1).unwrap(),
            &pts,
        )
        .unwrap();
        let pointwise = kl_divergence(
            &boltzmann_policy(&q, tau, Player::P1).unwrap(),
            &boltzmann_policy(&q_star, tau, Player::P1).unwrap(),
        )
        .unwrap()
        .finite()
        .unwrap();
        assert_eq!(err, pointwise);
        assert!(err <= 2.0 * 0.1 / tau);
        assert!(policy_error(|_| d(&[0.5, 0.5]), |_| d(&[1.0, 0.0]), &pts).is_err());
    }
}
