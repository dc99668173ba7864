//! Learning scheduling indices online, one batch per episode.

use crate::env::rng::stream;
use crate::env::{EpsilonSchedule, RandomSource, RateRule};
use crate::error::{bad_config, Result};
use crate::harness::compute_bre;
use crate::tabular::{Algorithm, Pull, TabularLearner, UpdateCounters};

use super::batch::{episodic_regret, run_episode, EpisodePolicy, JobBatchEnv, SchedulingOracle, Serve};

/// Bisection tolerance for the scheduling oracle, in retirement units.
const ORACLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SchedulingConfig {
    pub algo: Algorithm,
    pub alpha: RateRule,
    pub beta: RateRule,
    /// Decays once per serve: serve `n` explores with `epsilon.at(n - 1)`.
    pub epsilon: EpsilonSchedule,
    pub gamma: f64,
    pub episodes: u64,
    pub seed: u64,
}

impl SchedulingConfig {
    fn validate(&self) -> Result<()> {
        if self.algo == Algorithm::Qwi {
            return Err(bad_config("scheduling supports qgi and restart"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(bad_config(format!("gamma {} outside (0,1)", self.gamma)));
        }
        if self.episodes == 0 {
            return Err(bad_config("need at least one episode"));
        }
        self.epsilon.validate()
    }
}

/// Per-episode summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: u64,
    pub flowtime: usize,
    /// Flowtime of the exact index policy on the same service draws.
    pub oracle_flowtime: usize,
    pub regret: f64,
    pub cumulative_regret: f64,
    /// Share of this episode's serves that were index-optimal, in percent.
    pub pct_optimal_actions: f64,
    pub bre: f64,
    pub run_to_completion: bool,
    pub steps: usize,
    /// Steps whose unfinished-job age spread was at most one.
    pub narrow_spread_steps: usize,
    /// Cumulative learner update counts.
    pub q_updates: u64,
    pub index_updates: u64,
}

#[derive(Debug, Clone)]
pub struct SchedulingRun {
    pub learner: TabularLearner,
    pub counters: UpdateCounters,
    pub rows: Vec<EpisodeRow>,
    pub oracle: SchedulingOracle,
}

impl SchedulingRun {
    /// Learned indices, `[table][state]`.
    pub fn indices(&self, gamma: f64) -> Vec<Vec<f64>> {
        self.learner.extract_indices(gamma)
    }
}

struct Learning<'a> {
    learner: &'a mut TabularLearner,
    counters: &'a mut UpdateCounters,
    oracle: &'a SchedulingOracle,
    table_of: Vec<usize>,
    cfg: &'a SchedulingConfig,
    n: u64,
    optimal: usize,
}

impl EpisodePolicy for Learning<'_> {
    fn index(&self, job: usize, state: usize) -> f64 {
        self.learner.index(self.table_of[job], state, self.cfg.gamma)
    }

    fn epsilon(&self) -> Option<f64> {
        Some(self.cfg.epsilon.at(self.n))
    }

    fn before_serve(&mut self, env: &JobBatchEnv, job: usize) {
        if self.oracle.is_optimal(job, env) {
            self.optimal += 1;
        }
    }

    fn after_serve(&mut self, s: &Serve) -> Result<()> {
        self.n += 1;
        let pull = Pull {
            table: self.table_of[s.job],
            state: s.state,
            reward: s.reward,
            next_state: s.next_state,
        };
        let alpha = self.cfg.alpha.at(self.n)?;
        let beta = self.cfg.beta.at(self.n)?;
        *self.counters += self.learner.update(&pull, &[], alpha, beta, self.cfg.gamma);
        Ok(())
    }
}

/// Train on fresh batches; after each episode the exact index policy replays
/// the same service draws to give a paired regret.
pub fn train_scheduling(env: &JobBatchEnv, cfg: &SchedulingConfig) -> Result<SchedulingRun> {
    cfg.validate()?;
    let mut env = env.clone();
    let oracle = SchedulingOracle::new(&env, cfg.gamma, ORACLE_TOL)?;
    let mut learner = TabularLearner::new(cfg.algo, env.num_states(), env.num_tables())?;
    let mut counters = UpdateCounters::default();
    let mut env_rng = RandomSource::derive(cfg.seed, stream::ENVIRONMENT);
    let mut policy_rng = RandomSource::derive(cfg.seed, stream::POLICY);
    let mut oracle_rng = RandomSource::derive(cfg.seed, stream::ORACLE);
    let table_of: Vec<usize> = (0..env.num_jobs()).map(|j| env.table_of(j)).collect();
    let mut rows = Vec::with_capacity(cfg.episodes as usize);
    let mut n = 0u64;
    let mut cumulative = 0.0;

    for episode in 1..=cfg.episodes {
        env.reset(&mut env_rng)?;
        let mut learning = Learning {
            learner: &mut learner,
            counters: &mut counters,
            oracle: &oracle,
            table_of: table_of.clone(),
            cfg,
            n,
            optimal: 0,
        };
        let trace = run_episode(&mut env, &mut learning, 1.0, &mut policy_rng)?;
        let optimal = learning.optimal;
        n = learning.n;

        env.rewind();
        let oracle_trace = run_episode(&mut env, &mut &oracle, 0.0, &mut oracle_rng)?;

        let regret = episodic_regret(trace.flowtime() as f64, oracle_trace.flowtime() as f64);
        cumulative += regret;
        let bre = compute_bre(&learner.state_values(), oracle.solutions())?;
        rows.push(EpisodeRow {
            episode,
            flowtime: trace.flowtime(),
            oracle_flowtime: oracle_trace.flowtime(),
            regret,
            cumulative_regret: cumulative,
            pct_optimal_actions: 100.0 * optimal as f64 / trace.steps.len() as f64,
            bre,
            run_to_completion: trace.is_run_to_completion(),
            steps: trace.steps.len(),
            narrow_spread_steps: trace.steps_with_spread_at_most(1),
            q_updates: counters.q_updates,
            index_updates: counters.index_updates,
        });
    }
    Ok(SchedulingRun {
        learner,
        counters,
        rows,
        oracle,
    })
}
