//! Batch job scheduling on a single preemptive server.

mod batch;
mod jobs;
mod train;

pub use batch::{
    cumulative_regret, episodic_regret, oracle_flowtime, run_episode, EpisodePolicy, EpisodeTrace, IndexTable,
    JobBatchEnv, SchedulingOracle, Serve, TraceStep,
};
pub use jobs::{hazard_rate, HazardKind, HazardSpec, JobSpec, ServiceDist, HAZARD_STATES};
pub use train::{train_scheduling, EpisodeRow, SchedulingConfig, SchedulingRun};
