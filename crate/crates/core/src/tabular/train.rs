//! The select, step, update loop for the tabular learners.

use super::learners::{Algorithm, Pull, TabularLearner, UpdateCounters};
use crate::env::rng::stream;
use crate::env::{epsilon_greedy_select, BanditInstance, EpsilonSchedule, LearningRateSchedule, RandomSource};
use crate::error::{bad_config, Result};
use crate::harness::metrics::{compute_bre, MetricsRow};
use crate::oracle::{BanditOracle, RetirementSolution, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct TabularConfig {
    pub algo: Algorithm,
    pub schedule: LearningRateSchedule,
    pub epsilon: EpsilonSchedule,
    pub steps: u64,
    pub seed: u64,
    /// Record a metrics row every `cadence` steps.
    pub cadence: u64,
    /// `Some(true)` forces one table shared by all arms, `Some(false)` one
    /// table per arm; `None` follows the environment.
    pub shared_table: Option<bool>,
}

impl TabularConfig {
    pub fn new(algo: Algorithm, schedule: LearningRateSchedule, epsilon: EpsilonSchedule, steps: u64, seed: u64) -> Self {
        Self {
            algo,
            schedule,
            epsilon,
            steps,
            seed,
            cadence: 1,
            shared_table: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TabularRun {
    pub learner: TabularLearner,
    pub counters: UpdateCounters,
    pub log: Vec<MetricsRow>,
    /// Exact solution for each learner table.
    pub reference: Vec<RetirementSolution>,
    /// Table used by each arm.
    pub table_of: Vec<usize>,
}

impl TabularRun {
    /// Exact indices laid out like [`MetricsRow::indices`].
    pub fn reference_indices(&self) -> Vec<f64> {
        self.reference.iter().flat_map(|s| s.indices.iter().copied()).collect()
    }
}

/// Arm-to-table map and per-table reference solutions for a run.
fn table_layout(
    env: &BanditInstance,
    shared: Option<bool>,
    oracle: &BanditOracle,
) -> Result<(Vec<usize>, Vec<RetirementSolution>)> {
    let k = env.num_arms();
    let shared = match shared {
        Some(true) if !env.is_homogeneous() => {
            return Err(bad_config("a shared table needs a homogeneous environment"));
        }
        Some(s) => s,
        None => env.is_homogeneous(),
    };
    if shared {
        Ok((vec![0; k], vec![oracle.solution(0).clone()]))
    } else {
        let refs = (0..k).map(|i| oracle.solution(env.table_of(i)).clone()).collect();
        Ok(((0..k).collect(), refs))
    }
}

/// Trains one tabular learner on `env` from its initial states.
pub fn train_tabular(env: &BanditInstance, cfg: &TabularConfig) -> Result<TabularRun> {
    cfg.schedule.validate()?;
    cfg.epsilon.validate()?;
    if cfg.cadence == 0 {
        return Err(bad_config("metrics cadence must be >= 1"));
    }
    let oracle = BanditOracle::new(env, DEFAULT_TOL)?;
    let (table_of, reference) = table_layout(env, cfg.shared_table, &oracle)?;
    let mut learner = TabularLearner::new(cfg.algo, env.num_states(), reference.len())?;

    let mut env = env.clone();
    env.reset();
    let gamma = env.gamma();
    let k = env.num_arms();
    let available = vec![true; k];
    let mut policy_rng = RandomSource::derive(cfg.seed, stream::POLICY);
    let mut env_rng = RandomSource::derive(cfg.seed, stream::ENVIRONMENT);

    let mut counters = UpdateCounters::default();
    let mut log = Vec::with_capacity((cfg.steps / cfg.cadence) as usize);
    let mut suboptimal = 0u64;
    let mut indices = vec![0.0; k];
    let mut passive = Vec::with_capacity(k.saturating_sub(1));

    for n in 1..=cfg.steps {
        let states = env.states();
        for (i, slot) in indices.iter_mut().enumerate() {
            *slot = learner.index(table_of[i], states[i], gamma);
        }
        let eps = cfg.epsilon.at(n - 1);
        let arm = epsilon_greedy_select(&indices, &available, eps, &mut policy_rng)?;
        let optimal = oracle.is_optimal(arm, states, &available);
        if !optimal {
            suboptimal += 1;
        }
        passive.clear();
        passive.extend((0..k).filter(|&j| j != arm).map(|j| (table_of[j], states[j])));

        let tr = env.step_arm(arm, &mut env_rng)?;
        let pull = Pull {
            table: table_of[arm],
            state: tr.state,
            reward: tr.reward,
            next_state: tr.next_state,
        };
        let alpha = cfg.schedule.alpha_at(n)?;
        let beta = cfg.schedule.beta_at(n)?;
        counters += learner.update(&pull, &passive, alpha, beta, gamma);

        if n % cfg.cadence == 0 {
            log.push(MetricsRow {
                step: n,
                arm,
                optimal,
                suboptimal_pct: 100.0 * suboptimal as f64 / n as f64,
                bre: compute_bre(&learner.state_values(), &reference)?,
                indices: learner.extract_indices(gamma).concat(),
                q_updates: counters.q_updates,
                index_updates: counters.index_updates,
            });
        }
    }
    Ok(TabularRun {
        learner,
        counters,
        log,
        reference,
        table_of,
    })
}
