//! Bellman relative error and suboptimal-action accounting.

use crate::error::{Error, Result};
use crate::oracle::{BanditOracle, RetirementSolution};

/// One recorded point of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// Environment step (tabular, deep) or episode (scheduling), from 1.
    pub step: u64,
    pub arm: usize,
    pub optimal: bool,
    /// Cumulative percentage of suboptimal choices up to `step`.
    pub suboptimal_pct: f64,
    pub bre: f64,
    /// Learned indices, table-major.
    pub indices: Vec<f64>,
    pub q_updates: u64,
    pub index_updates: u64,
}

/// Per-state mean of the last `window` recorded index vectors.
pub fn last_window_mean(rows: &[MetricsRow], window: usize) -> Option<Vec<f64>> {
    let tail = &rows[rows.len().saturating_sub(window)..];
    let first = tail.first()?;
    let mut acc = vec![0.0; first.indices.len()];
    for r in tail {
        for (a, v) in acc.iter_mut().zip(&r.indices) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= tail.len() as f64);
    Some(acc)
}

/// Whether every state's last-window mean lies within `delta` of `truth`.
pub fn converged(rows: &[MetricsRow], truth: &[f64], delta: f64, window: usize) -> bool {
    match last_window_mean(rows, window) {
        Some(m) => m.len() == truth.len() && m.iter().zip(truth).all(|(a, b)| (a - b).abs() <= delta),
        None => false,
    }
}

/// Mean absolute gap between learned diagonal values and `M*` over every
/// (table, state) pair.
///
/// `values[t][s]` is the learner's `V_t(s)` for table `t`; `oracle[t]` the
/// matching exact solution.
pub fn compute_bre(values: &[Vec<f64>], oracle: &[RetirementSolution]) -> Result<f64> {
    if values.len() != oracle.len() {
        return Err(Error::ShapeMismatch {
            expected: oracle.len(),
            got: values.len(),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (v, sol) in values.iter().zip(oracle) {
        if v.len() != sol.num_states() {
            return Err(Error::ShapeMismatch {
                expected: sol.num_states(),
                got: v.len(),
            });
        }
        for (a, b) in v.iter().zip(&sol.retirement) {
            total += (a - b).abs();
        }
        count += v.len();
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Running percentage of suboptimal choices.
///
/// `states[n]` and `available[n]` describe the system just before action
/// `actions[n]`. A choice is optimal when its oracle index attains the
/// maximum over available arms.
pub fn suboptimal_pct(
    actions: &[usize],
    states: &[Vec<usize>],
    available: &[Vec<bool>],
    oracle: &BanditOracle,
) -> Result<Vec<f64>> {
    if states.len() != actions.len() || available.len() != actions.len() {
        return Err(Error::ShapeMismatch {
            expected: actions.len(),
            got: states.len().min(available.len()),
        });
    }
    let flags = actions
        .iter()
        .zip(states)
        .zip(available)
        .map(|((&a, s), av)| oracle.is_optimal(a, s, av));
    Ok(running_suboptimal(flags))
}

/// Running percentage of `false` entries in a sequence of optimality flags.
pub fn running_suboptimal(flags: impl IntoIterator<Item = bool>) -> Vec<f64> {
    let mut bad = 0u64;
    flags
        .into_iter()
        .enumerate()
        .map(|(i, ok)| {
            if !ok {
                bad += 1;
            }
            100.0 * bad as f64 / (i + 1) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ArmModel, BanditInstance, RandomSource};
    use crate::oracle::{gittins_exact, DEFAULT_TOL};

    #[test]
    fn bre_zero_at_oracle_and_mean_at_zero() {
        let sol = gittins_exact(&ArmModel::toy(), 0.9, DEFAULT_TOL).unwrap();
        let exact = vec![sol.retirement.clone()];
        assert_eq!(compute_bre(&exact, std::slice::from_ref(&sol)).unwrap(), 0.0);
        let zero = vec![vec![0.0; 5]];
        let bre = compute_bre(&zero, std::slice::from_ref(&sol)).unwrap();
        let mean = sol.retirement.iter().sum::<f64>() / 5.0;
        assert!((bre - mean).abs() < 1e-12);
        // mean of M* from the enumerated toy indices
        let want = [0.9, 0.8343, 0.788_95, 0.755_94, 0.730_67].iter().sum::<f64>() / 0.5;
        assert!((bre - want).abs() < 1e-3, "{bre}");
    }

    #[test]
    fn bre_shape_mismatch() {
        let sol = gittins_exact(&ArmModel::toy(), 0.9, DEFAULT_TOL).unwrap();
        assert!(compute_bre(&[vec![0.0; 4]], std::slice::from_ref(&sol)).is_err());
        assert!(compute_bre(&[], std::slice::from_ref(&sol)).is_err());
    }

    #[test]
    fn greedy_oracle_policy_never_suboptimal() {
        let env = BanditInstance::toy(0.9).unwrap();
        let oracle = BanditOracle::new(&env, DEFAULT_TOL).unwrap();
        let mut rng = RandomSource::new(3);
        let mut env = env;
        let (mut acts, mut sts, mut avs) = (vec![], vec![], vec![]);
        for _ in 0..500 {
            let idx: Vec<f64> = (0..5).map(|i| oracle.index(i, env.states()[i])).collect();
            let a = crate::env::epsilon_greedy_select(&idx, &[true; 5], 0.0, &mut rng).unwrap();
            sts.push(env.states().to_vec());
            avs.push(vec![true; 5]);
            acts.push(a);
            env.step_arm(a, &mut rng).unwrap();
        }
        let pct = suboptimal_pct(&acts, &sts, &avs, &oracle).unwrap();
        assert!(pct.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn uniform_random_with_unique_argmax_is_eighty_percent() {
        // five single-state arms with distinct rewards: one optimal arm
        let arms: Vec<ArmModel> = (0..5)
            .map(|i| ArmModel::new(vec![vec![1.0]], vec![i as f64]).unwrap())
            .collect();
        let env = BanditInstance::heterogeneous(arms, 0.9, vec![0; 5]).unwrap();
        let oracle = BanditOracle::new(&env, DEFAULT_TOL).unwrap();
        let mut rng = RandomSource::new(11);
        let n = 10_000;
        let acts: Vec<usize> = (0..n).map(|_| rng.below(5)).collect();
        let pct = suboptimal_pct(&acts, &vec![vec![0; 5]; n], &vec![vec![true; 5]; n], &oracle).unwrap();
        assert!((pct[n - 1] - 80.0).abs() < 2.0, "{}", pct[n - 1]);
    }

    #[test]
    fn all_tied_is_never_suboptimal() {
        let env = BanditInstance::homogeneous(ArmModel::toy(), 3, 0.9, 2).unwrap();
        let oracle = BanditOracle::new(&env, DEFAULT_TOL).unwrap();
        let acts = [0, 1, 2, 1];
        let pct = suboptimal_pct(&acts, &vec![vec![2; 3]; 4], &vec![vec![true; 3]; 4], &oracle).unwrap();
        assert_eq!(pct, vec![0.0; 4]);
    }
}
