//! Multiplicity-adjusted and group-sequential inference for clinical trials.
//!
//! Everything here operates on summary statistics (estimates, standard
//! errors, event counts) rather than participant-level data. The crate
//! covers:
//!
//! - weighted graph-based multiple comparison procedures: sequentially
//!   rejective tests, adjusted p-values, and simultaneous confidence
//!   bounds, composed into two-sided inference from mirrored one-sided
//!   procedures ([`mcp`]);
//! - group-sequential designs: alpha-spending functions and efficacy
//!   boundaries computed by recursive sub-density integration ([`gsd`]);
//! - estimation after (or during) a group-sequential trial: stage-wise
//!   p-values, confidence intervals and median-unbiased estimates,
//!   repeated confidence intervals and p-values, and simulation-based
//!   bias-adjusted estimators ([`inference`]);
//! - a seeded, reproducible Monte Carlo engine for trial paths ([`mc`]);
//! - report assembly and rendering of regulatory-style result tables
//!   from a JSON trial specification ([`report`]).
//!
//! # Example
//!
//! A two-hypothesis hierarchy: the second hypothesis is tested at the
//! full level only after the first is rejected.
//!
//! ```
//! use ctinfer_core::mcp::{sequentially_rejective_test, McpGraph, PValue};
//!
//! let graph = McpGraph::new(
//!     vec!["primary".into(), "secondary".into()],
//!     vec![1.0, 0.0],
//!     vec![vec![0.0, 1.0], vec![0.0, 0.0]],
//! )?;
//! let pvals = [
//!     ("primary".to_string(), PValue::Available(0.004)),
//!     ("secondary".to_string(), PValue::Available(0.018)),
//! ]
//! .into_iter()
//! .collect();
//!
//! let outcome = sequentially_rejective_test(&graph, &pvals, 0.025)?;
//! assert!(outcome.all_rejected);
//! assert_eq!(outcome.trace[1].local_level, 0.025);
//! # Ok::<(), ctinfer_core::Error>(())
//! ```

// Comparisons like `!(x > 0.0)` are deliberate: they reject NaN where
// the un-negated form would silently accept it.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gsd;
pub mod inference;
pub mod mc;
pub mod mcp;
pub mod normal;
pub mod report;
pub mod solve;

pub use error::{Error, Result};
