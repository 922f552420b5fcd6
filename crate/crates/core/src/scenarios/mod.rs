//! Configured end-to-end runs: dimensioning, TE, then RA.

mod config;
mod pipeline;
mod report;

pub use config::*;
pub use pipeline::*;
pub use report::*;
