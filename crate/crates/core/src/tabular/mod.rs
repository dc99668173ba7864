//! Tabular learners for the Gittins index: QGI, restart-in-state and QWI.

mod learners;
mod train;

pub use learners::{Algorithm, Pull, QgiState, QwiState, RestartState, TabularLearner, UpdateCounters};
pub use train::{train_tabular, TabularConfig, TabularRun};
