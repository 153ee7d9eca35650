//! Multi-server coded caching in the low-memory regime.
//!
//! `K = N` users each cache `M = 1/N` of a file as the sum of one subfile of
//! every file. In the delivery phase `L` cooperating servers zero-force
//! subfiles to users over a linear network so that each user also receives
//! the sum it needs to peel its own missing subfile off its cache.
//!
//! - [`field`] / [`linalg`]: GF(p), complex, and rational arithmetic plus
//!   rank, nullspace, solves, and zero-forcing beams.
//! - [`content`]: library, subfile/minifile views, cache placement, demands.
//! - [`delivery`]: transmit blocks, row code plans, schedules, tables.
//! - [`channel`]: channel draws, receptions, per-user decoding.
//! - [`metrics`]: achieved time, converse bound, uncoded baseline, reports.
//! - [`runner`]: seeded trials, sweeps, and output writers for the CLI.

pub mod channel;
pub mod content;
pub mod delivery;
pub mod error;
pub mod field;
pub mod linalg;
pub mod metrics;
pub mod runner;

pub use error::{Error, Result};
