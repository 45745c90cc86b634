//! Segmental matching without gap states over histogram sequences: histogram
//! distances, their range bounds, the exact matcher and its pruned top-down
//! variant.

mod bow;
mod dp;
mod hist;

pub use bow::{build_integral_histogram, BowSequence, IntegralHistogram};
pub use dp::{
    fast_sm_match, segmentation_log_lik, sm_match, sm_match_cost, sm_match_seq, FastSmResult, SegmentationPair,
    SmConfig, SmResult,
};
pub use hist::{bound_distance, histogram_distance, HistMetric, HistogramBoundInputs};
