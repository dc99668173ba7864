//! Gittins indices: exact computation, tabular and deep learners, and batch
//! job scheduling experiments.

pub mod deep;
pub mod env;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod scheduling;
pub mod tabular;

pub use error::{Error, Result};
