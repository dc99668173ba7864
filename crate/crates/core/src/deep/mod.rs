//! DGN: a from-scratch MLP Q-approximator with Adam, an active-only replay
//! buffer and a soft-updated target network.

mod adam;
mod dgn;
mod mlp;
mod replay;

pub use adam::AdamState;
pub use dgn::{
    dgn_m_update, dgn_target, read_params, soft_update, train_dgn, write_params, DgnConfig, DgnCounters, DgnRun,
    DgnTable, Encoding, QNetwork,
};
pub use mlp::{MlpParams, HIDDEN};
pub use replay::{ExperienceTuple, ReplayBuffer};
