//! Rating experiment service.
//!
//! Observers work through every stimulus of a catalog in a per-session
//! seeded order and rate each one on four sliders that sum to 100. Sessions
//! and ratings go to an append-only log that is replayed on startup.

pub mod catalog;
pub mod http;
pub mod session;
pub mod store;

use thiserror::Error;

pub use catalog::{Catalog, CatalogEntry, CATALOG_SIZE};
pub use session::{parse_submission, trial_order, Experiment, SessionState, Submission, Trial};

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("ratings must each lie in [0, 100] and sum to 100, got sum {sum}")]
    Validation { sum: f64 },
    #[error("{0}")]
    Conflict(String),
    #[error("no session with id {0}")]
    UnknownSession(u64),
    #[error("stimulus {got} is not the current trial (expected {expected:?})")]
    OutOfOrder { expected: Option<String>, got: String },
    #[error("stimulus {0} already has a recorded rating in this session")]
    AlreadyRecorded(String),
    #[error("log: {0}")]
    Log(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
