use std::sync::Arc;

use rand_distr::{Distribution, Gamma};

use super::rng::RandomSource;
use crate::error::{invalid, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// One arm's active-action Markov chain with per-state pull rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    num_states: usize,
    /// Row-major `num_states × num_states`.
    transition: Vec<f64>,
    reward: Vec<f64>,
    /// Nonzero entries per row, used for sampling and value iteration.
    sparse: Vec<Vec<(usize, f64)>>,
}

impl ArmModel {
    /// Builds an arm from row-major transition probabilities and rewards.
    pub fn new(transition: Vec<Vec<f64>>, reward: Vec<f64>) -> Result<Self> {
        let n = reward.len();
        if n == 0 {
            return Err(invalid("arm needs at least one state"));
        }
        if transition.len() != n {
            return Err(invalid(format!(
                "transition has {} rows for {} states",
                transition.len(),
                n
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (s, row) in transition.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!("row {s} has {} entries, expected {n}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(n, flat, reward)
    }

    pub fn from_flat(num_states: usize, transition: Vec<f64>, reward: Vec<f64>) -> Result<Self> {
        let n = num_states;
        if n == 0 || reward.len() != n || transition.len() != n * n {
            return Err(invalid(format!(
                "arm shape mismatch: {n} states, {} rewards, {} transition entries",
                reward.len(),
                transition.len()
            )));
        }
        if let Some(s) = reward.iter().position(|r| !r.is_finite()) {
            return Err(invalid(format!("reward for state {s} is not finite")));
        }
        let mut sparse = Vec::with_capacity(n);
        for s in 0..n {
            let row = &transition[s * n..(s + 1) * n];
            if let Some(j) = row.iter().position(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid(format!("P({j}|{s}) = {} outside [0,1]", row[j])));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(invalid(format!("row {s} sums to {sum}, not 1")));
            }
            sparse.push(
                row.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(j, &p)| (j, p))
                    .collect(),
            );
        }
        Ok(Self {
            num_states: n,
            transition,
            reward,
            sparse,
        })
    }

    /// The five-state restart-style arm with `r(s) = 0.9^(s+1)`.
    pub fn toy() -> Self {
        let mut p = vec![vec![0.0; 5]; 5];
        for (s, row) in p.iter_mut().enumerate() {
            row[0] = 0.3;
            row[(s + 1).min(4)] = 0.7;
        }
        let reward = (0..5).map(|s| 0.9f64.powi(s + 1)).collect();
        Self::new(p, reward).expect("toy arm is well formed")
    }

    /// The two heterogeneous two-state arms with rewards (1, 10).
    pub fn elementary_pair() -> [Self; 2] {
        let a = Self::new(vec![vec![0.3, 0.7], vec![0.7, 0.3]], vec![1.0, 10.0]);
        let b = Self::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]], vec![1.0, 10.0]);
        [a.expect("well formed"), b.expect("well formed")]
    }

    /// Random arm with Dirichlet(`concentration`) rows and `r(s) = 5 + (s+1)/10`.
    pub fn dirichlet(num_states: usize, concentration: f64, rng: &mut RandomSource) -> Result<Self> {
        if num_states < 2 || concentration <= 0.0 {
            return Err(invalid("dirichlet arm needs >= 2 states and positive concentration"));
        }
        // normalised Gamma(concentration, 1) draws are Dirichlet distributed
        let dist = Gamma::new(concentration, 1.0).map_err(|e| invalid(format!("dirichlet: {e}")))?;
        let mut flat = Vec::with_capacity(num_states * num_states);
        for _ in 0..num_states {
            let mut row: Vec<f64> = (0..num_states).map(|_| dist.sample(rng.inner())).collect();
            // renormalise so the row-sum check holds at 1e-12
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
            let drift: f64 = 1.0 - row.iter().sum::<f64>();
            let imax = (0..num_states)
                .max_by(|&a, &b| row[a].total_cmp(&row[b]))
                .unwrap_or(0);
            row[imax] += drift;
            flat.extend(row);
        }
        let reward = (0..num_states).map(|s| 5.0 + (s as f64 + 1.0) / 10.0).collect();
        Self::from_flat(num_states, flat, reward)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn reward(&self, s: usize) -> f64 {
        self.reward[s]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.num_states + to]
    }

    pub fn row(&self, s: usize) -> &[(usize, f64)] {
        &self.sparse[s]
    }

    pub fn reward_range(&self) -> (f64, f64) {
        let lo = self.reward.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.reward.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Same chain with every reward multiplied by `c`.
    pub fn scaled_rewards(&self, c: f64) -> Result<Self> {
        Self::from_flat(
            self.num_states,
            self.transition.clone(),
            self.reward.iter().map(|r| r * c).collect(),
        )
    }

    /// Draws a successor of `s`.
    pub fn sample_next(&self, s: usize, rng: &mut RandomSource) -> usize {
        rng.categorical(&self.sparse[s])
    }
}

/// Result of one pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub arm: usize,
    pub state: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// A rested K-armed bandit: only the pulled arm moves.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    arms: Vec<Arc<ArmModel>>,
    homogeneous: bool,
    gamma: f64,
    states: Vec<usize>,
    initial: Vec<usize>,
}

impl BanditInstance {
    /// `k` copies of one shared arm, all starting in `start`.
    pub fn homogeneous(arm: ArmModel, k: usize, gamma: f64, start: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("bandit needs at least one arm"));
        }
        let shared = Arc::new(arm);
        Self::build(vec![shared; k], true, gamma, vec![start; k])
    }

    pub fn heterogeneous(arms: Vec<ArmModel>, gamma: f64, start: Vec<usize>) -> Result<Self> {
        if arms.is_empty() {
            return Err(invalid("bandit needs at least one arm"));
        }
        let n = arms[0].num_states();
        if arms.iter().any(|a| a.num_states() != n) {
            return Err(invalid("all arms must share one state-space size"));
        }
        Self::build(arms.into_iter().map(Arc::new).collect(), false, gamma, start)
    }

    fn build(arms: Vec<Arc<ArmModel>>, homogeneous: bool, gamma: f64, start: Vec<usize>) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!("discount {gamma} outside (0,1)")));
        }
        if start.len() != arms.len() {
            return Err(invalid("one start state per arm required"));
        }
        if let Some(i) = (0..arms.len()).find(|&i| start[i] >= arms[i].num_states()) {
            return Err(invalid(format!("start state {} out of range for arm {i}", start[i])));
        }
        Ok(Self {
            arms,
            homogeneous,
            gamma,
            initial: start.clone(),
            states: start,
        })
    }

    /// The five-arm homogeneous toy bandit, every arm in state 0.
    pub fn toy(gamma: f64) -> Result<Self> {
        Self::homogeneous(ArmModel::toy(), 5, gamma, 0)
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_states(&self) -> usize {
        self.arms[0].num_states()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn arm(&self, i: usize) -> &ArmModel {
        &self.arms[i]
    }

    /// Distinct arm models: one when homogeneous, `K` otherwise.
    pub fn tables(&self) -> Vec<&ArmModel> {
        if self.homogeneous {
            vec![&*self.arms[0]]
        } else {
            self.arms.iter().map(|a| &**a).collect()
        }
    }

    pub fn num_tables(&self) -> usize {
        if self.homogeneous {
            1
        } else {
            self.arms.len()
        }
    }

    pub fn table_of(&self, arm: usize) -> usize {
        if self.homogeneous {
            0
        } else {
            arm
        }
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn reset(&mut self) {
        self.states.clone_from(&self.initial);
    }

    /// Pulls `arm`: returns the transition and advances only that arm.
    pub fn step_arm(&mut self, arm: usize, rng: &mut RandomSource) -> Result<Transition> {
        if arm >= self.arms.len() {
            return Err(invalid(format!("arm {arm} out of range (K = {})", self.arms.len())));
        }
        let s = self.states[arm];
        let model = &self.arms[arm];
        let next = model.sample_next(s, rng);
        self.states[arm] = next;
        Ok(Transition {
            arm,
            state: s,
            reward: model.reward(s),
            next_state: next,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = ArmModel::new(vec![vec![0.5, 0.4], vec![0.0, 1.0]], vec![0.0, 0.0]);
        assert!(err.is_err());
        let err = ArmModel::new(vec![vec![1.2, -0.2], vec![0.0, 1.0]], vec![0.0, 0.0]);
        assert!(err.is_err());
        let err = ArmModel::new(vec![vec![1.0]], vec![f64::NAN]);
        assert!(err.is_err());
    }

    #[test]
    fn identity_arm_stays_put() {
        let arm = ArmModel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 2.0]).unwrap();
        let mut env = BanditInstance::homogeneous(arm, 1, 0.9, 1).unwrap();
        let mut rng = RandomSource::new(0);
        let t = env.step_arm(0, &mut rng).unwrap();
        assert_eq!((t.next_state, t.reward), (1, 2.0));
    }

    #[test]
    fn toy_state_three_moves_to_zero_or_four() {
        let mut rng = RandomSource::new(11);
        let arm = ArmModel::toy();
        for _ in 0..2000 {
            let s = arm.sample_next(3, &mut rng);
            assert!(s == 0 || s == 4);
        }
    }

    #[test]
    fn toy_state_zero_frequency() {
        let arm = ArmModel::toy();
        let mut rng = RandomSource::new(5);
        let n = 100_000;
        let hits = (0..n).filter(|_| arm.sample_next(0, &mut rng) == 1).count();
        assert!((hits as f64 / n as f64 - 0.7).abs() < 0.01);
    }

    #[test]
    fn passive_arms_are_frozen() {
        let mut env = BanditInstance::toy(0.9).unwrap();
        let mut rng = RandomSource::new(3);
        for step in 0..200 {
            let before = env.states().to_vec();
            let arm = step % 5;
            env.step_arm(arm, &mut rng).unwrap();
            for j in (0..5).filter(|&j| j != arm) {
                assert_eq!(before[j], env.states()[j]);
            }
        }
    }

    #[test]
    fn invalid_arm_rejected() {
        let mut env = BanditInstance::toy(0.9).unwrap();
        assert!(env.step_arm(5, &mut RandomSource::new(0)).is_err());
    }

    #[test]
    fn discount_must_be_open_interval() {
        assert!(BanditInstance::homogeneous(ArmModel::toy(), 2, 1.0, 0).is_err());
        assert!(BanditInstance::homogeneous(ArmModel::toy(), 2, 0.0, 0).is_err());
    }

    #[test]
    fn dirichlet_rows_are_stochastic() {
        let mut rng = RandomSource::new(9);
        let arm = ArmModel::dirichlet(50, 1.0, &mut rng).unwrap();
        for s in 0..50 {
            let sum: f64 = (0..50).map(|j| arm.prob(s, j)).sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
        assert!((arm.reward(0) - 5.1).abs() < 1e-12);
    }
}
