use crate::error::{param, Result};
use crate::scalar::{stable_ceil, Real};

/// Partition width and per-cell sample requirement for one iteration.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct KnnSchedule<T> {
    /// Target error level the parameters were derived from.
    pub xi: T,
    pub h: T,
    pub k: usize,
    /// Cell count `N(h)` of the partition built at `h`.
    pub n: usize,
    /// Set when `h` fell below `h_min` and was raised to it.
    pub h_clamped: bool,
}

/// `(h, K)` giving value error `eps_v` and policy error `eps_p`:
///
/// `h = min(eps_v / L_v, sqrt(eps_p / 2) / L_p)` and
/// `K = max(V²/(2 eps_v²) log(4 V N / eps_v), log(4 N / eps_p) / eps_p)`
/// with `V = v_max` and `N` the cell count returned by `cells_at(h)`.
pub fn knn_parameters<T, F>(
    eps_v: T,
    eps_p: T,
    v_max: T,
    lipschitz_v: T,
    lipschitz_p: T,
    h_min: T,
    cells_at: F,
) -> Result<KnnSchedule<T>>
where
    T: Real,
    F: FnOnce(T) -> Result<usize>,
{
    if !(eps_v > T::zero() && eps_p > T::zero() && v_max > T::zero()) {
        return Err(param("error targets and v_max must be positive"));
    }
    if !(lipschitz_v > T::zero() && lipschitz_p > T::zero()) {
        return Err(param("Lipschitz constants must be positive"));
    }
    if !(h_min > T::zero()) {
        return Err(param("h_min must be positive"));
    }
    let raw_h = (eps_v / lipschitz_v).min((eps_p / T::lit(2.0)).sqrt() / lipschitz_p);
    let (h, h_clamped) = if raw_h < h_min { (h_min, true) } else { (raw_h, false) };
    let n = cells_at(h)?;
    let k = knn_sample_count(eps_v, eps_p, v_max, n);
    Ok(KnnSchedule {
        xi: eps_v,
        h,
        k,
        n,
        h_clamped,
    })
}

/// Per-cell count `K` for targets `eps_v`, `eps_p` on `n` cells, at least 1.
pub fn knn_sample_count<T: Real>(eps_v: T, eps_p: T, v_max: T, n: usize) -> usize {
    let nf = n as f64;
    let (ev, ep, vm) = (eps_v.as_f64(), eps_p.as_f64(), v_max.as_f64());
    let k_value = vm * vm / (2.0 * ev * ev) * (4.0 * vm * nf / ev).ln();
    let k_policy = (4.0 * nf / ep).ln() / ep;
    stable_ceil(k_value.max(k_policy)).max(1.0) as usize
}

/// Iteration-`l` parameters with `xi = v_max rho^l / 4` as both targets.
pub fn knn_schedule<T, F>(
    iteration: usize,
    rho: T,
    v_max: T,
    lipschitz_v: T,
    lipschitz_p: T,
    h_min: T,
    cells_at: F,
) -> Result<KnnSchedule<T>>
where
    T: Real,
    F: FnOnce(T) -> Result<usize>,
{
    if !(rho > T::zero() && rho < T::one()) {
        return Err(param("rho must lie in (0, 1)"));
    }
    let xi = v_max * rho.powi(iteration as i32) / T::lit(4.0);
    knn_parameters(xi, xi, v_max, lipschitz_v, lipschitz_p, h_min, cells_at)
}

/// Policy generalization constant `c = 4 |A|^3 / alpha` with
/// `alpha = exp(-V/tau) / (|A| exp(V/tau))`. Reported only; it overflows
/// quickly as `tau` shrinks.
pub fn policy_generalization_constant(actions: usize, v_max: f64, tau: f64) -> f64 {
    let a = actions as f64;
    let alpha = (-v_max / tau).exp() / (a * (v_max / tau).exp());
    4.0 * a.powi(3) / alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CaseStudyGame, Game};
    use crate::supervised::build_partition;

    #[test]
    fn first_iteration_width() {
        let s = knn_schedule(1, 0.5, 1.0, 1.0, 1.0, 1e-3, |_| Ok(8)).unwrap();
        assert_eq!(s.xi, 0.125);
        // min(0.125, sqrt(0.0625) = 0.25)
        assert_eq!(s.h, 0.125);
        assert!(!s.h_clamped);
        let expect_k = (1.0f64 / (2.0 * 0.125 * 0.125) * (4.0 * 8.0 / 0.125f64).ln())
            .max((4.0 * 8.0 / 0.125f64).ln() / 0.125)
            .ceil() as usize;
        assert_eq!(s.k, expect_k);
    }

    #[test]
    fn k_grows_as_xi_shrinks() {
        let a = knn_parameters(0.2, 0.2, 1.0, 1.0, 1.0, 1e-3, |_| Ok(10)).unwrap();
        let b = knn_parameters(0.1, 0.1, 1.0, 1.0, 1.0, 1e-3, |_| Ok(10)).unwrap();
        assert!(b.k > a.k);
    }

    #[test]
    fn huge_lipschitz_clamps_h() {
        let game = CaseStudyGame::<f64>::new();
        let s = knn_schedule(1, 0.5, 1.0, 1e9, 1.0, 1e-3, |h| {
            Ok(build_partition(game.regions(), h)?.len())
        })
        .unwrap();
        assert!(s.h_clamped);
        assert_eq!(s.h, 1e-3);
        assert_eq!(s.n, 2000);
    }

    #[test]
    fn generalization_constant_explodes_with_small_tau() {
        let c1 = policy_generalization_constant(5, 1.0, 1.0);
        let c2 = policy_generalization_constant(5, 1.0, 0.1);
        assert!((c1 - 4.0 * 125.0 * 5.0 * 2f64.exp()).abs() < 1e-9 * c1);
        assert!(c2 > 1e7 * c1);
    }
}
