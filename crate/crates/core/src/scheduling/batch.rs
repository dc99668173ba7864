//! Episodic batch of jobs on a single preemptive server.
//!
//! Service times are drawn for every job when an episode starts, so a run of
//! the exact index policy can be replayed on the same draws with [`JobBatchEnv::rewind`].

use crate::env::{epsilon_greedy_select, ArmModel, RandomSource};
use crate::error::{invalid, Result};
use crate::oracle::{gittins_exact, RetirementSolution};

use super::jobs::JobSpec;

/// Outcome of one serve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Serve {
    pub job: usize,
    pub state: usize,
    pub next_state: usize,
    pub completed: bool,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct JobBatchEnv {
    jobs: Vec<JobSpec>,
    table_of: Vec<usize>,
    num_tables: usize,
    states: Vec<usize>,
    served: Vec<usize>,
    tau: Vec<usize>,
    done: Vec<bool>,
    episode: u64,
}

impl JobBatchEnv {
    /// Hazard jobs get a table each; identical distribution jobs share one.
    pub fn new(jobs: Vec<JobSpec>) -> Result<Self> {
        if jobs.is_empty() {
            return Err(invalid("a batch needs at least one job"));
        }
        for j in &jobs {
            if let JobSpec::Service(d) = j {
                d.validate()?;
            }
        }
        let mut reps: Vec<JobSpec> = Vec::new();
        let mut table_of = Vec::with_capacity(jobs.len());
        for j in &jobs {
            let t = match j {
                JobSpec::Service(_) => reps.iter().position(|r| r == j),
                JobSpec::Hazard(_) => None,
            };
            table_of.push(t.unwrap_or_else(|| {
                reps.push(*j);
                reps.len() - 1
            }));
        }
        let k = jobs.len();
        let states = jobs.iter().map(|j| j.start_state()).collect();
        Ok(Self {
            jobs,
            table_of,
            num_tables: reps.len(),
            states,
            served: vec![0; k],
            tau: vec![1; k],
            done: vec![false; k],
            episode: 0,
        })
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn jobs(&self) -> &[JobSpec] {
        &self.jobs
    }

    pub fn job(&self, i: usize) -> &JobSpec {
        &self.jobs[i]
    }

    pub fn num_tables(&self) -> usize {
        self.num_tables
    }

    pub fn table_of(&self, job: usize) -> usize {
        self.table_of[job]
    }

    /// Largest per-job state count; learner tables are sized to it.
    pub fn num_states(&self) -> usize {
        self.jobs.iter().map(|j| j.num_states()).max().unwrap_or(1)
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Quanta of service each job has received this episode.
    pub fn ages(&self) -> &[usize] {
        &self.served
    }

    pub fn service_times(&self) -> &[usize] {
        &self.tau
    }

    pub fn done(&self) -> &[bool] {
        &self.done
    }

    pub fn available(&self) -> Vec<bool> {
        self.done.iter().map(|d| !d).collect()
    }

    pub fn unfinished(&self) -> usize {
        self.done.iter().filter(|d| !**d).count()
    }

    pub fn all_done(&self) -> bool {
        self.done.iter().all(|&d| d)
    }

    pub fn episode(&self) -> u64 {
        self.episode
    }

    /// New episode with fresh service draws.
    pub fn reset(&mut self, rng: &mut RandomSource) -> Result<()> {
        for i in 0..self.jobs.len() {
            self.tau[i] = self.jobs[i].sample_service(rng)?;
        }
        self.episode += 1;
        self.rewind();
        Ok(())
    }

    /// New episode with given service times.
    pub fn reset_with(&mut self, tau: &[usize]) -> Result<()> {
        if tau.len() != self.jobs.len() || tau.contains(&0) {
            return Err(invalid("service times must be positive, one per job"));
        }
        self.tau.copy_from_slice(tau);
        self.episode += 1;
        self.rewind();
        Ok(())
    }

    /// Restart the current episode, keeping its service draws.
    pub fn rewind(&mut self) {
        for i in 0..self.jobs.len() {
            self.states[i] = self.jobs[i].start_state();
            self.served[i] = 0;
            self.done[i] = false;
        }
    }

    /// One quantum of service to `job`.
    pub fn serve_step(&mut self, job: usize) -> Result<Serve> {
        if job >= self.jobs.len() {
            return Err(invalid(format!("job {job} out of range")));
        }
        if self.done[job] {
            return Err(invalid(format!("job {job} is already complete")));
        }
        let state = self.states[job];
        self.served[job] += 1;
        let completed = self.served[job] >= self.tau[job];
        let next_state = if completed {
            self.done[job] = true;
            self.jobs[job].done_state()
        } else {
            self.jobs[job].advance(state)
        };
        self.states[job] = next_state;
        Ok(Serve {
            job,
            state,
            next_state,
            completed,
            reward: if completed { 1.0 } else { 0.0 },
        })
    }

    /// Max minus min age over unfinished jobs.
    pub fn age_spread(&self) -> usize {
        let ages = (0..self.jobs.len()).filter(|&i| !self.done[i]).map(|i| self.served[i]);
        let (lo, hi) = ages.fold((usize::MAX, 0), |(lo, hi), a| (lo.min(a), hi.max(a)));
        hi.saturating_sub(lo.min(hi))
    }

    /// One arm model per learner table.
    pub fn arm_models(&self) -> Result<Vec<ArmModel>> {
        let mut out = Vec::with_capacity(self.num_tables);
        for t in 0..self.num_tables {
            let job = self.table_of.iter().position(|&x| x == t).expect("every table has a job");
            out.push(self.jobs[job].arm_model()?);
        }
        Ok(out)
    }
}

/// Exact indices of every table of a batch.
#[derive(Debug, Clone)]
pub struct SchedulingOracle {
    solutions: Vec<RetirementSolution>,
    table_of: Vec<usize>,
}

impl SchedulingOracle {
    pub fn new(env: &JobBatchEnv, gamma: f64, tol: f64) -> Result<Self> {
        let solutions = env
            .arm_models()?
            .iter()
            .map(|a| gittins_exact(a, gamma, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            solutions,
            table_of: env.table_of.clone(),
        })
    }

    pub fn solutions(&self) -> &[RetirementSolution] {
        &self.solutions
    }

    pub fn index(&self, job: usize, state: usize) -> f64 {
        self.solutions[self.table_of[job]].indices[state]
    }

    /// Whether serving `job` attains the best index among unfinished jobs.
    pub fn is_optimal(&self, job: usize, env: &JobBatchEnv) -> bool {
        let s = env.states();
        let best = (0..env.num_jobs())
            .filter(|&i| !env.done()[i])
            .map(|i| self.index(i, s[i]))
            .fold(f64::NEG_INFINITY, f64::max);
        self.index(job, s[job]) >= best - 1e-9
    }
}

/// One serve as seen by the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub job: usize,
    pub completed: bool,
    /// Unfinished jobs before this serve.
    pub unfinished: usize,
    /// Age spread of unfinished jobs before this serve.
    pub age_spread: usize,
}

/// Record of one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeTrace {
    pub steps: Vec<TraceStep>,
    /// Completion time `T_i` of each job, in quanta from the episode start.
    pub completion_times: Vec<usize>,
}

impl EpisodeTrace {
    pub fn new(num_jobs: usize) -> Self {
        Self {
            steps: Vec::new(),
            completion_times: vec![0; num_jobs],
        }
    }

    /// Append a serve taken from `env` in the state just before `serve`.
    pub fn record(&mut self, unfinished: usize, age_spread: usize, serve: &Serve) {
        let step = self.steps.len() + 1;
        if serve.completed {
            self.completion_times[serve.job] = step;
        }
        self.steps.push(TraceStep {
            step,
            job: serve.job,
            completed: serve.completed,
            unfinished,
            age_spread,
        });
    }

    /// `sum_i T_i`.
    pub fn flowtime(&self) -> usize {
        self.completion_times.iter().sum()
    }

    /// The same quantity counted per step: jobs still waiting at each step.
    pub fn flowtime_by_steps(&self) -> usize {
        self.steps.iter().map(|s| s.unfinished).sum()
    }

    /// Every job is served in one contiguous block: no preemption.
    pub fn is_run_to_completion(&self) -> bool {
        let mut finished = vec![false; self.completion_times.len()];
        let mut current: Option<usize> = None;
        for s in &self.steps {
            if finished[s.job] {
                return false;
            }
            if let Some(c) = current {
                if c != s.job {
                    finished[c] = true;
                    if finished[s.job] {
                        return false;
                    }
                }
            }
            current = Some(s.job);
            if s.completed {
                finished[s.job] = true;
                current = None;
            }
        }
        true
    }

    /// Steps whose pre-serve age spread is at most `limit`.
    pub fn steps_with_spread_at_most(&self, limit: usize) -> usize {
        self.steps.iter().filter(|s| s.age_spread <= limit).count()
    }

    /// Jobs in the order they were first served.
    pub fn service_order(&self) -> Vec<usize> {
        let mut seen = vec![false; self.completion_times.len()];
        let mut order = Vec::new();
        for s in &self.steps {
            if !seen[s.job] {
                seen[s.job] = true;
                order.push(s.job);
            }
        }
        order
    }
}

/// What an episode runner needs from a policy.
pub trait EpisodePolicy {
    fn index(&self, job: usize, state: usize) -> f64;

    /// Exploration rate for the next serve, overriding the runner's fixed rate.
    fn epsilon(&self) -> Option<f64> {
        None
    }

    /// Called with the pre-serve environment once `job` has been chosen.
    fn before_serve(&mut self, _env: &JobBatchEnv, _job: usize) {}

    fn after_serve(&mut self, _serve: &Serve) -> Result<()> {
        Ok(())
    }
}

/// A fixed index table indexed `[table][state]`.
#[derive(Debug, Clone, Copy)]
pub struct IndexTable<'a> {
    pub indices: &'a [Vec<f64>],
    pub env: &'a JobBatchEnv,
}

impl EpisodePolicy for IndexTable<'_> {
    fn index(&self, job: usize, state: usize) -> f64 {
        self.indices[self.env.table_of(job)][state]
    }
}

impl EpisodePolicy for &SchedulingOracle {
    fn index(&self, job: usize, state: usize) -> f64 {
        SchedulingOracle::index(self, job, state)
    }
}

/// Serve the current episode to completion, epsilon-greedy on the policy's
/// indices over unfinished jobs.
pub fn run_episode<P: EpisodePolicy>(
    env: &mut JobBatchEnv,
    policy: &mut P,
    epsilon: f64,
    rng: &mut RandomSource,
) -> Result<EpisodeTrace> {
    let mut trace = EpisodeTrace::new(env.num_jobs());
    let mut scores = vec![0.0; env.num_jobs()];
    while !env.all_done() {
        for (i, v) in scores.iter_mut().enumerate() {
            *v = if env.done()[i] { f64::NEG_INFINITY } else { policy.index(i, env.states()[i]) };
        }
        let eps = policy.epsilon().unwrap_or(epsilon);
        let job = epsilon_greedy_select(&scores, &env.available(), eps, rng)?;
        let (unfinished, spread) = (env.unfinished(), env.age_spread());
        policy.before_serve(env, job);
        let serve = env.serve_step(job)?;
        policy.after_serve(&serve)?;
        trace.record(unfinished, spread, &serve);
    }
    Ok(trace)
}

/// Mean flowtime of the exact index policy over `trials` fresh episodes.
pub fn oracle_flowtime(env: &JobBatchEnv, gamma: f64, trials: usize, rng: &mut RandomSource) -> Result<f64> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let oracle = SchedulingOracle::new(env, gamma, 1e-8)?;
    let mut sim = env.clone();
    let mut total = 0usize;
    for _ in 0..trials {
        sim.reset(rng)?;
        total += run_episode(&mut sim, &mut &oracle, 0.0, rng)?.flowtime();
    }
    Ok(total as f64 / trials as f64)
}

/// Per-episode regret of a learner against the oracle.
pub fn episodic_regret(learner_flowtime: f64, oracle_flowtime: f64) -> f64 {
    learner_flowtime - oracle_flowtime
}

/// Running sums of per-episode regret.
pub fn cumulative_regret(regrets: &[f64]) -> Vec<f64> {
    regrets
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::{HazardKind, HazardSpec, ServiceDist, HAZARD_STATES};

    struct Prefer(Vec<f64>);

    impl EpisodePolicy for Prefer {
        fn index(&self, job: usize, _state: usize) -> f64 {
            self.0[job]
        }
    }

    fn deterministic_pair() -> JobBatchEnv {
        let d = ServiceDist::Binomial { n: 10, p: 0.5 };
        let mut env = JobBatchEnv::new(vec![JobSpec::Service(d); 2]).unwrap();
        env.reset_with(&[1, 3]).unwrap();
        env
    }

    fn check_identities(trace: &EpisodeTrace, k: usize) {
        assert_eq!(trace.flowtime(), trace.flowtime_by_steps());
        assert_eq!(trace.steps.iter().filter(|s| s.completed).count(), k);
    }

    #[test]
    fn short_job_first() {
        let mut env = deterministic_pair();
        let mut rng = RandomSource::new(0);
        let good = run_episode(&mut env, &mut Prefer(vec![1.0, 0.0]), 0.0, &mut rng).unwrap();
        assert_eq!(good.flowtime(), 5);
        check_identities(&good, 2);
        env.rewind();
        let bad = run_episode(&mut env, &mut Prefer(vec![0.0, 1.0]), 0.0, &mut rng).unwrap();
        assert_eq!(bad.flowtime(), 7);
        check_identities(&bad, 2);
        assert_eq!(episodic_regret(bad.flowtime() as f64, good.flowtime() as f64), 2.0);
        assert!(good.is_run_to_completion() && bad.is_run_to_completion());
    }

    #[test]
    fn single_job_flowtime_is_its_completion() {
        let mut env = JobBatchEnv::new(vec![JobSpec::Service(ServiceDist::Poisson { mean: 5.0 })]).unwrap();
        let mut rng = RandomSource::new(3);
        for _ in 0..50 {
            env.reset(&mut rng).unwrap();
            let tau = env.service_times()[0];
            let t = run_episode(&mut env, &mut Prefer(vec![0.0]), 0.5, &mut rng).unwrap();
            assert_eq!(t.flowtime(), tau);
            assert_eq!(t.completion_times, vec![tau]);
        }
    }

    #[test]
    fn serving_done_job_rejected() {
        let mut env = deterministic_pair();
        let s = env.serve_step(0).unwrap();
        assert!(s.completed && s.reward == 1.0);
        assert_eq!(s.next_state, env.job(0).done_state());
        assert!(env.serve_step(0).is_err());
        assert_eq!(env.available(), vec![false, true]);
        let s = env.serve_step(1).unwrap();
        assert!(!s.completed && s.reward == 0.0 && s.next_state == 1);
    }

    #[test]
    fn certain_hazard_completes_at_once() {
        let h = HazardSpec::new(HazardKind::Increasing, 1.0, 0.8).unwrap();
        let mut env = JobBatchEnv::new(vec![JobSpec::Hazard(h)]).unwrap();
        let mut rng = RandomSource::new(4);
        env.reset(&mut rng).unwrap();
        assert!(env.serve_step(0).unwrap().completed);
    }

    #[test]
    fn constant_hazard_mean_completion() {
        let mut env = JobBatchEnv::new(vec![JobSpec::Hazard(HazardSpec::constant(0.5).unwrap())]).unwrap();
        let mut rng = RandomSource::new(6);
        let n = 100_000;
        let mut total = 0;
        for _ in 0..n {
            env.reset(&mut rng).unwrap();
            let mut t = 0;
            while !env.all_done() {
                env.serve_step(0).unwrap();
                t += 1;
            }
            total += t;
        }
        assert!((total as f64 / n as f64 - 2.0).abs() < 0.05);
    }

    #[test]
    fn tables_per_kind() {
        let p = JobSpec::Service(ServiceDist::Poisson { mean: 5.0 });
        assert_eq!(JobBatchEnv::new(vec![p; 4]).unwrap().num_tables(), 1);
        let h = JobSpec::Hazard(HazardSpec::constant(0.3).unwrap());
        assert_eq!(JobBatchEnv::new(vec![h; 3]).unwrap().num_tables(), 3);
    }

    #[test]
    fn rewind_keeps_draws() {
        let d = ServiceDist::Poisson { mean: 5.0 };
        let mut env = JobBatchEnv::new(vec![JobSpec::Service(d); 4]).unwrap();
        let mut rng = RandomSource::new(8);
        env.reset(&mut rng).unwrap();
        let tau = env.service_times().to_vec();
        let a = run_episode(&mut env, &mut Prefer(vec![4.0, 3.0, 2.0, 1.0]), 0.0, &mut rng).unwrap();
        env.rewind();
        assert_eq!(env.service_times(), &tau[..]);
        let b = run_episode(&mut env, &mut Prefer(vec![4.0, 3.0, 2.0, 1.0]), 0.0, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.service_order(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn preemption_detected() {
        let mut t = EpisodeTrace::new(2);
        let serve = |job, completed| Serve {
            job,
            state: 0,
            next_state: 0,
            completed,
            reward: 0.0,
        };
        t.record(2, 0, &serve(0, false));
        t.record(2, 1, &serve(1, false));
        t.record(2, 0, &serve(0, true));
        t.record(1, 0, &serve(1, true));
        assert!(!t.is_run_to_completion());
        assert_eq!(t.steps_with_spread_at_most(0), 3);
        assert_eq!(t.flowtime(), t.flowtime_by_steps());
    }

    #[test]
    fn identical_policies_have_zero_mean_regret() {
        let d = ServiceDist::Binomial { n: 10, p: 0.5 };
        let mut env = JobBatchEnv::new(vec![JobSpec::Service(d); 4]).unwrap();
        let oracle = SchedulingOracle::new(&env, 0.99, 1e-7).unwrap();
        let mut rng = RandomSource::new(10);
        let mut sum = 0.0;
        let n = 10_000;
        for _ in 0..n {
            env.reset(&mut rng).unwrap();
            let a = run_episode(&mut env, &mut &oracle, 0.0, &mut rng).unwrap().flowtime();
            env.rewind();
            let b = run_episode(&mut env, &mut &oracle, 0.0, &mut rng).unwrap().flowtime();
            sum += episodic_regret(a as f64, b as f64);
        }
        assert!((sum / n as f64).abs() < 0.2);
    }

    #[test]
    fn oracle_serves_likelier_job_first() {
        let jobs = [0.9, 0.1].map(|r| JobSpec::Hazard(HazardSpec::constant(r).unwrap()));
        let mut env = JobBatchEnv::new(jobs.to_vec()).unwrap();
        let oracle = SchedulingOracle::new(&env, 0.99, 1e-7).unwrap();
        assert!((oracle.index(0, 1) - 0.9).abs() < 1e-5);
        assert!((oracle.index(1, 1) - 0.1).abs() < 1e-5);
        let mut rng = RandomSource::new(11);
        for _ in 0..200 {
            env.reset(&mut rng).unwrap();
            let t = run_episode(&mut env, &mut &oracle, 0.0, &mut rng).unwrap();
            assert_eq!(t.service_order()[0], 0);
            assert!(t.is_run_to_completion());
        }
    }

    #[test]
    fn oracle_increasing_hazard_is_run_to_completion() {
        let mut rng = RandomSource::new(12);
        let jobs: Vec<_> = (0..9)
            .map(|_| JobSpec::Hazard(HazardSpec::new(HazardKind::Increasing, rng.uniform(), 0.8).unwrap()))
            .collect();
        let mut env = JobBatchEnv::new(jobs).unwrap();
        let oracle = SchedulingOracle::new(&env, 0.9, 1e-7).unwrap();
        for _ in 0..100 {
            env.reset(&mut rng).unwrap();
            assert!(run_episode(&mut env, &mut &oracle, 0.0, &mut rng).unwrap().is_run_to_completion());
        }
    }

    #[test]
    fn oracle_decreasing_hazard_index_peaks_after_first_serve() {
        let h = HazardSpec::new(HazardKind::Decreasing, 0.3, 0.8).unwrap();
        let env = JobBatchEnv::new(vec![JobSpec::Hazard(h)]).unwrap();
        let o = SchedulingOracle::new(&env, 0.9, 1e-7).unwrap();
        // the hazard jumps up at the second quantum, so the index does too
        assert!(o.index(0, 2) > o.index(0, 1));
        // far from the cap, where completion becomes certain
        for s in 2..HAZARD_STATES / 2 {
            assert!(o.index(0, s + 1) <= o.index(0, s) + 1e-6, "state {s}");
        }
    }

    #[test]
    fn constant_hazard_index_flat_in_age() {
        for rho in [0.05, 0.4, 0.95] {
            let env = JobBatchEnv::new(vec![JobSpec::Hazard(HazardSpec::constant(rho).unwrap())]).unwrap();
            let o = SchedulingOracle::new(&env, 0.9, 1e-8).unwrap();
            assert!((o.index(0, 1) - rho).abs() < 1e-6);
        }
    }

    #[test]
    fn oracle_flowtime_matches_spt_on_binomial() {
        let d = ServiceDist::Binomial { n: 10, p: 0.5 };
        let env = JobBatchEnv::new(vec![JobSpec::Service(d); 1]).unwrap();
        let mut rng = RandomSource::new(14);
        let f = oracle_flowtime(&env, 0.99, 20_000, &mut rng).unwrap();
        // one job: flowtime is its clamped service time, mean 5 + P(0)
        let want = 5.0 + 0.5f64.powi(10);
        assert!((f - want).abs() < 0.05, "{f}");
        assert_eq!(cumulative_regret(&[1.0, -2.0, 3.0]), vec![1.0, -1.0, 2.0]);
    }
}
