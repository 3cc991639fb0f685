//! Competitive analysis of paging and weighted caching.
//!
//! * [`trace`]: request traces, parsing and generators.
//! * [`strategies`]: online strategies (LRU, FIFO, FWF, Balance, Mark, GreedyDual).
//! * [`dualcert`]: GreedyDual as a primal-dual algorithm, with checkable dual certificates.
//! * [`offline`]: offline optimum via min-cost flow, farthest-in-future, and brute force.
//! * [`phases`]: k-phase decomposition and the bounds built on it.
//! * [`sweep`]: cost tables over a range of cache sizes and violator counting.
//! * [`cli`]: the `kdual` command-line tool.

pub mod cli;
pub mod dualcert;
pub mod error;
pub mod offline;
pub mod phases;
pub mod strategies;
pub mod sweep;
pub mod trace;

pub use error::{Error, Result};
