//! Bandit arms, the rested multi-armed environment, randomness and the
//! schedules shared by every learner.

mod arm;
pub mod rng;
mod schedule;
mod select;

pub use arm::{ArmModel, BanditInstance, Transition};
pub use rng::RandomSource;
pub use schedule::{
    validate_two_timescale, EpsilonSchedule, LearningRateSchedule, LogBase, RateRule, TimescaleReport,
};
pub use select::{epsilon_greedy_select, greedy_among};
