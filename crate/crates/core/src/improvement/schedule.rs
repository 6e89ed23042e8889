use crate::error::{param, Result};
use crate::scalar::{stable_ceil, Real};

/// A scheduled integer parameter and whether its cap was applied.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Scheduled {
    pub value: usize,
    pub capped: bool,
}

impl Scheduled {
    fn capped_at(raw: f64, cap: Option<usize>) -> Self {
        let raw = raw.max(1.0);
        match cap {
            Some(c) if raw > c as f64 => Scheduled {
                value: c,
                capped: true,
            },
            _ => Scheduled {
                value: raw as usize,
                capped: false,
            },
        }
    }
}

/// Search depth `H = ceil(log(tau rho / (16 |A|)) / log gamma)`, at least 1.
pub fn mcts_depth_schedule<T: Real>(
    tau: T,
    rho: T,
    action_count: usize,
    gamma: T,
    cap: Option<usize>,
) -> Result<Scheduled> {
    let (tau, rho, gamma) = (tau.as_f64(), rho.as_f64(), gamma.as_f64());
    if !(tau > 0.0) {
        return Err(param("tau must be positive"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(param("rho must lie in (0, 1)"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(param("gamma must lie in (0, 1)"));
    }
    if action_count == 0 {
        return Err(param("action count must be positive"));
    }
    let arg = tau * rho / (16.0 * action_count as f64);
    let raw = stable_ceil(arg.ln() / gamma.ln());
    Ok(Scheduled::capped_at(raw, cap))
}

/// Simulation count `m = ceil(c1 (tau v_max rho^l / (16 |A|))^-2)`, capped.
pub fn mcts_sim_schedule<T: Real>(
    iteration: usize,
    tau: T,
    rho: T,
    v_max: T,
    action_count: usize,
    c1: T,
    cap: Option<usize>,
) -> Result<Scheduled> {
    let (tau, rho, v_max, c1) = (tau.as_f64(), rho.as_f64(), v_max.as_f64(), c1.as_f64());
    if !(c1 > 0.0 && tau > 0.0 && v_max > 0.0) {
        return Err(param("c1, tau and v_max must be positive"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(param("rho must lie in (0, 1)"));
    }
    if action_count == 0 {
        return Err(param("action count must be positive"));
    }
    let scale = tau * v_max * rho.powi(iteration as i32) / (16.0 * action_count as f64);
    let raw = stable_ceil(c1 / (scale * scale));
    Ok(Scheduled::capped_at(raw, cap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_examples() {
        let h = mcts_depth_schedule(0.5, 0.5, 5, 0.8, None).unwrap();
        // log(0.003125) / log(0.8) = 25.86...
        assert_eq!(h, Scheduled { value: 26, capped: false });
        // tau rho = 16 |A| makes the log vanish
        let h = mcts_depth_schedule(32.0, 0.5, 1, 0.8, None).unwrap();
        assert_eq!(h.value, 1);
        let coarse = mcts_depth_schedule(0.5, 0.5, 5, 0.8, None).unwrap().value;
        let fine = mcts_depth_schedule(0.5, 0.25, 5, 0.8, None).unwrap().value;
        assert!(fine > coarse);
        assert_eq!(mcts_depth_schedule(0.5, 0.5, 5, 0.8, Some(10)).unwrap(), Scheduled { value: 10, capped: true });
        assert!(mcts_depth_schedule(0.5, 1.0, 5, 0.8, None).is_err());
    }

    #[test]
    fn simulation_examples() {
        let m = mcts_sim_schedule(1, 1.0, 0.5, 1.0, 1, 1.0, None).unwrap();
        assert_eq!(m.value, 1024);
        let next = mcts_sim_schedule(2, 1.0, 0.5, 1.0, 1, 1.0, None).unwrap();
        assert_eq!(next.value, 4 * m.value);
        let capped = mcts_sim_schedule(2, 1.0, 0.5, 1.0, 1, 1.0, Some(2000)).unwrap();
        assert_eq!(capped, Scheduled { value: 2000, capped: true });
        assert!(mcts_sim_schedule(1, 1.0, 0.5, 1.0, 1, 0.0, None).is_err());
    }
}
