//! Approximate forward recursion: alignment mass is summed over predecessor
//! states while the segmentation is maximized per cell.

use crate::error::Result;
use crate::metric::{PairwiseDistanceTable, SegmentCost};
use crate::sequence::Sequence;
use crate::sphmm::kernel::{self, Combine, KernelParams};
use crate::sphmm::{log_odds_params, run_with_band_fallback, AlignOptions, SphmmModel};

fn raw_params(model: &SphmmModel, band: Option<f64>, opts: AlignOptions) -> KernelParams {
    KernelParams {
        t_mm: (1.0 - 2.0 * model.delta - model.tau).ln(),
        t_gm: (1.0 - model.epsilon - model.tau).ln(),
        t_op: model.delta.ln(),
        t_ex: model.epsilon.ln(),
        match_bonus: 0.0,
        gap_per_sample: -model.sigma_g,
        combine: Combine::LogSumExp,
        l_min: model.l_min,
        l_max_x: model.l_max_x,
        l_max_y: model.l_max_y,
        band,
        prune: opts.prune,
    }
}

/// Log of the approximate marginal likelihood with unit priors.
pub fn marginal_match_cost<C: SegmentCost>(cost: &C, model: &SphmmModel, opts: AlignOptions) -> Result<f64> {
    let lat = run_with_band_fallback(cost, model, |band| raw_params(model, band, opts))?;
    Ok(kernel::final_value(&lat, Combine::LogSumExp).0)
}

/// Same recursion carried out on log-odds increments, so every summed path is
/// normalized by the null likelihood of its own segmentation. This is the
/// score used for nearest-neighbour retrieval.
pub fn marginal_score_cost<C: SegmentCost>(cost: &C, model: &SphmmModel, opts: AlignOptions) -> Result<f64> {
    let lat = run_with_band_fallback(cost, model, |band| {
        log_odds_params(model, band, opts, Combine::LogSumExp)
    })?;
    Ok(kernel::final_value(&lat, Combine::LogSumExp).0 - 2.0 * model.eta.ln())
}

pub fn marginal_match(x: &Sequence, y: &Sequence, model: &SphmmModel) -> Result<f64> {
    let table = PairwiseDistanceTable::build(x, y, model.norm)?;
    marginal_match_cost(&table, model, AlignOptions::default())
}

pub fn marginal_score(x: &Sequence, y: &Sequence, model: &SphmmModel) -> Result<f64> {
    let table = PairwiseDistanceTable::build(x, y, model.norm)?;
    marginal_score_cost(&table, model, AlignOptions::default())
}
