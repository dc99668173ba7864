//! Metrics, configuration, experiment runs and grid search.

pub mod config;
pub mod experiment;
pub mod metrics;

pub use config::{parse_seeds, AlgoChoice, EnvSpec, ExperimentConfig, GridSpec, RatesSpec, SchedulingKind};
pub use experiment::{
    build_bandit, build_batch, convergence_map_csv, grid_search, nonzero_cells, oracle_csv, run_experiment, run_seed,
    write_grid_search, ConvergenceMapCell, RunFiles,
};
pub use metrics::{compute_bre, converged, last_window_mean, suboptimal_pct, MetricsRow};
