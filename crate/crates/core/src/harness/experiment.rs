//! Seeded runs, CSV persistence and convergence maps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{AlgoChoice, EnvSpec, ExperimentConfig, SchedulingKind};
use super::metrics::{converged, MetricsRow};
use crate::deep::train_dgn;
use crate::env::rng::stream;
use crate::env::{ArmModel, BanditInstance, RandomSource};
use crate::error::{bad_config, Result};
use crate::oracle::{BanditOracle, DEFAULT_TOL};
use crate::scheduling::{train_scheduling, HazardSpec, JobBatchEnv, JobSpec, SchedulingConfig, SchedulingRun};
use crate::tabular::{train_tabular, TabularConfig};

/// The bandit described by a non-scheduling config.
pub fn build_bandit(cfg: &ExperimentConfig) -> Result<BanditInstance> {
    match cfg.env {
        EnvSpec::Toy { arms } => BanditInstance::homogeneous(ArmModel::toy(), arms, cfg.gamma, 0),
        EnvSpec::Elementary => {
            let [a, b] = ArmModel::elementary_pair();
            BanditInstance::heterogeneous(vec![a, b], cfg.gamma, vec![0, 0])
        }
        EnvSpec::Dirichlet {
            arms,
            states,
            concentration,
            heterogeneous,
            instance_seed,
        } => {
            let mut rng = RandomSource::derive(instance_seed, stream::INSTANCE);
            if heterogeneous {
                let models = (0..arms)
                    .map(|_| ArmModel::dirichlet(states, concentration, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                BanditInstance::heterogeneous(models, cfg.gamma, vec![0; arms])
            } else {
                let arm = ArmModel::dirichlet(states, concentration, &mut rng)?;
                BanditInstance::homogeneous(arm, arms, cfg.gamma, 0)
            }
        }
        EnvSpec::Scheduling { .. } => Err(bad_config("scheduling configs describe a job batch, not a bandit")),
    }
}

/// The job batch described by a scheduling config. Initial hazards are
/// drawn uniformly from `[0, 1]` with the instance seed.
pub fn build_batch(cfg: &ExperimentConfig) -> Result<JobBatchEnv> {
    let EnvSpec::Scheduling {
        kind,
        jobs,
        lambda,
        instance_seed,
    } = cfg.env
    else {
        return Err(bad_config("not a scheduling config"));
    };
    let specs = match kind {
        SchedulingKind::Hazard(h) => {
            let mut rng = RandomSource::derive(instance_seed, stream::INSTANCE);
            (0..jobs)
                .map(|_| HazardSpec::new(h, rng.uniform(), lambda).map(JobSpec::Hazard))
                .collect::<Result<Vec<_>>>()?
        }
        SchedulingKind::Service(d) => vec![JobSpec::Service(d); jobs],
    };
    JobBatchEnv::new(specs)
}

/// `arm,state,M_star,G_star` for every arm (or job) of the configured environment.
pub fn oracle_csv(cfg: &ExperimentConfig) -> Result<String> {
    let mut out = String::from("arm,state,M_star,G_star\n");
    let solutions: Vec<_> = if cfg.env.is_scheduling() {
        let env = build_batch(cfg)?;
        let oracle = crate::scheduling::SchedulingOracle::new(&env, cfg.gamma, DEFAULT_TOL)?;
        (0..env.num_jobs())
            .map(|j| oracle.solutions()[env.table_of(j)].clone())
            .collect()
    } else {
        let env = build_bandit(cfg)?;
        let oracle = BanditOracle::new(&env, DEFAULT_TOL)?;
        (0..env.num_arms()).map(|i| oracle.solution(env.table_of(i)).clone()).collect()
    };
    for (arm, sol) in solutions.iter().enumerate() {
        for s in 0..sol.num_states() {
            let _ = writeln!(out, "{arm},{s},{},{}", sol.retirement[s], sol.indices[s]);
        }
    }
    Ok(out)
}

/// CSV text of one seeded run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub seed: u64,
    pub metrics: String,
    pub indices: String,
    pub counters: String,
    pub seconds: f64,
}

fn bandit_files(log: &[MetricsRow], tables: usize, states: usize) -> (String, String, String) {
    let mut metrics = String::from("step,arm,optimal,suboptimal_pct,bre\n");
    let mut indices = String::from("step");
    for t in 0..tables {
        for s in 0..states {
            let _ = write!(indices, ",t{t}_s{s}");
        }
    }
    indices.push('\n');
    let mut counters = String::from("step,q_updates,index_updates\n");
    for r in log {
        let _ = writeln!(
            metrics,
            "{},{},{},{},{}",
            r.step, r.arm, r.optimal as u8, r.suboptimal_pct, r.bre
        );
        let _ = write!(indices, "{}", r.step);
        for v in &r.indices {
            let _ = write!(indices, ",{v}");
        }
        indices.push('\n');
        let _ = writeln!(counters, "{},{},{}", r.step, r.q_updates, r.index_updates);
    }
    (metrics, indices, counters)
}

fn scheduling_files(run: &SchedulingRun, cadence: u64, gamma: f64) -> (String, String, String) {
    let mut metrics = String::from(
        "episode,flowtime,oracle_flowtime,regret,pct_optimal_actions,cumulative_regret,bre,run_to_completion,narrow_spread_steps,steps\n",
    );
    let mut counters = String::from("episode,q_updates,index_updates\n");
    for r in run.rows.iter().filter(|r| r.episode % cadence == 0) {
        let _ = writeln!(
            metrics,
            "{},{},{},{},{},{},{},{},{},{}",
            r.episode,
            r.flowtime,
            r.oracle_flowtime,
            r.regret,
            r.pct_optimal_actions,
            r.cumulative_regret,
            r.bre,
            r.run_to_completion as u8,
            r.narrow_spread_steps,
            r.steps
        );
        let _ = writeln!(counters, "{},{},{}", r.episode, r.q_updates, r.index_updates);
    }
    let mut indices = String::from("table,state,index,oracle_index\n");
    let learned = run.indices(gamma);
    for (t, sol) in run.oracle.solutions().iter().enumerate() {
        for s in 0..sol.num_states() {
            let _ = writeln!(indices, "{t},{s},{},{}", learned[t][s], sol.indices[s]);
        }
    }
    (metrics, indices, counters)
}

/// Runs one seed of the configured experiment.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunFiles> {
    let start = Instant::now();
    let (metrics, indices, counters) = if cfg.env.is_scheduling() {
        let env = build_batch(cfg)?;
        let AlgoChoice::Tabular(algo) = cfg.algo else {
            return Err(bad_config("scheduling runs support qgi and restart"));
        };
        let sched = cfg.rates.schedule()?;
        let scfg = SchedulingConfig {
            algo,
            alpha: sched.alpha,
            beta: sched.beta,
            epsilon: cfg.epsilon,
            gamma: cfg.gamma,
            episodes: cfg.episodes,
            seed,
        };
        let run = train_scheduling(&env, &scfg)?;
        scheduling_files(&run, cfg.cadence, cfg.gamma)
    } else {
        let env = build_bandit(cfg)?;
        match cfg.algo {
            AlgoChoice::Tabular(algo) => {
                let mut tcfg = TabularConfig::new(algo, cfg.rates.schedule()?, cfg.epsilon, cfg.steps, seed);
                tcfg.cadence = cfg.cadence;
                let run = train_tabular(&env, &tcfg)?;
                bandit_files(&run.log, run.reference.len(), env.num_states())
            }
            AlgoChoice::Dgn => {
                let run = train_dgn(&env, &cfg.dgn, &cfg.epsilon, cfg.steps, seed)?;
                bandit_files(&run.log, run.reference.len(), env.num_states())
            }
        }
    };
    Ok(RunFiles {
        seed,
        metrics,
        indices,
        counters,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs every seed, then writes `metrics_<seed>.csv`, `indices_<seed>.csv`,
/// `counters_<seed>.csv` and `manifest.txt` under `cfg.out`. Returns the
/// written paths.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let runs = cfg
        .seeds
        .par_iter()
        .map(|&s| run_seed(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.out)?;
    let mut paths = Vec::new();
    let mut manifest = cfg.to_text();
    manifest.push_str("# wall-clock seconds per seed, informational\n");
    for r in &runs {
        for (name, body) in [("metrics", &r.metrics), ("indices", &r.indices), ("counters", &r.counters)] {
            let p = cfg.out.join(format!("{name}_{}.csv", r.seed));
            fs::write(&p, body)?;
            paths.push(p);
        }
        let _ = writeln!(manifest, "# seed {}: {:.3}", r.seed, r.seconds);
    }
    let p = cfg.out.join("manifest.txt");
    fs::write(&p, manifest)?;
    paths.push(p);
    Ok(paths)
}

/// One cell of a convergence map.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceMapCell {
    pub x: f64,
    pub y: f64,
    pub delta: f64,
    pub fraction_converged: f64,
}

/// For every grid cell, `grid.runs` seeded runs of the configured tabular
/// algorithm; a run converges at `delta` when every state's mean over the
/// last `grid.window` recorded indices lies within `delta` of the oracle.
/// Seeds are `seeds[0] + r` for run `r`.
pub fn grid_search(cfg: &ExperimentConfig) -> Result<Vec<ConvergenceMapCell>> {
    cfg.validate()?;
    let AlgoChoice::Tabular(algo) = cfg.algo else {
        return Err(bad_config("grid search supports tabular algorithms"));
    };
    let env = build_bandit(cfg)?;
    let g = &cfg.grid;
    let base = cfg.seeds[0];
    let mut jobs = Vec::new();
    for &x in &g.x_values {
        for &y in &g.y_values {
            let rates = cfg.rates.with(&g.x_axis, x)?.with(&g.y_axis, y)?;
            let schedule = rates.schedule()?;
            for r in 0..g.runs {
                jobs.push((x, y, schedule, base + r as u64));
            }
        }
    }
    let outcomes = jobs
        .par_iter()
        .map(|&(_, _, schedule, seed)| -> Result<Vec<bool>> {
            let tcfg = TabularConfig::new(algo, schedule, cfg.epsilon, cfg.steps, seed);
            let run = train_tabular(&env, &tcfg)?;
            let truth = run.reference_indices();
            Ok(g.deltas.iter().map(|&d| converged(&run.log, &truth, d, g.window)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    for (c, chunk) in jobs.chunks(g.runs).zip(outcomes.chunks(g.runs)) {
        for (k, &delta) in g.deltas.iter().enumerate() {
            let hits = chunk.iter().filter(|o| o[k]).count();
            cells.push(ConvergenceMapCell {
                x: c[0].0,
                y: c[0].1,
                delta,
                fraction_converged: hits as f64 / g.runs as f64,
            });
        }
    }
    Ok(cells)
}

pub fn convergence_map_csv(cells: &[ConvergenceMapCell]) -> String {
    let mut s = String::from("x_axis,y_axis,delta,fraction_converged\n");
    for c in cells {
        let _ = writeln!(s, "{},{},{},{}", c.x, c.y, c.delta, c.fraction_converged);
    }
    s
}

/// Cells with a nonzero converged fraction at `delta`.
pub fn nonzero_cells(cells: &[ConvergenceMapCell], delta: f64) -> usize {
    cells
        .iter()
        .filter(|c| c.delta == delta && c.fraction_converged > 0.0)
        .count()
}

/// Runs the grid and writes `convergence_map.csv` and `manifest.txt` into `dir`.
pub fn write_grid_search(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<ConvergenceMapCell>> {
    let cells = grid_search(cfg)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("convergence_map.csv"), convergence_map_csv(&cells))?;
    fs::write(dir.join("manifest.txt"), cfg.to_text())?;
    Ok(cells)
}
