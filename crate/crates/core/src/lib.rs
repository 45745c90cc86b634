//! Probabilistic adaptive segmental alignment of time series.
//!
//! The segmental pair-HMM ([`sphmm`]) jointly segments two sequences and aligns
//! the segments under affine gap rewards scored against a null model.
//! [`marginal`] sums alignment mass instead of maximizing, [`learn`] fits the
//! transition parameters, [`segmatch`] implements the relaxed equal-count
//! segment matcher with histogram bounds, and [`bench`] holds the experiment
//! harness.

pub mod bench;
pub mod error;
pub mod learn;
pub mod marginal;
pub mod metric;
pub mod segmatch;
pub mod sequence;
pub mod sphmm;

pub use error::{Result, SegalignError};
pub use sequence::{Norm, Segment, Sequence};
