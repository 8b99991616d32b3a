//! HTTP service and command-line front end for `inoculate-core`.

pub mod api;
pub mod cli;
pub mod envelope;
pub mod error;
pub mod logfile;
pub mod simulate;
pub mod store;

pub use api::{router, AppState};
