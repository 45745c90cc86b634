//! Segmental pair-HMM: model, null model, rewards and Viterbi decoding.

pub(crate) mod kernel;
mod model;
mod path;

pub use model::{
    eta_mle, gap_emission, match_emission, null_loglik, rewards, Rewards, SegmentLengthPrior,
    SphmmModel,
};
pub(crate) use model::{null_loglik_counts, LogPsi};
pub use path::{AlignmentPath, AlignmentResult, AlignmentStep, State};

use kernel::{Combine, KernelParams, Lattice, FROM_I, FROM_M};

use crate::error::{Result, SegalignError};
use crate::metric::{PairwiseDistanceTable, SegmentCost};
use crate::sequence::{Segment, Sequence};

/// Knobs that do not change the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    /// Skip candidates whose distance-free upper bound cannot beat the incumbent.
    pub prune: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self { prune: true }
    }
}

pub(crate) fn log_odds_params(model: &SphmmModel, band: Option<f64>, opts: AlignOptions, combine: Combine) -> KernelParams {
    let r = rewards(model);
    KernelParams {
        t_mm: r.r_mm.ln(),
        t_gm: r.r_gm.ln(),
        t_op: r.r_op.ln(),
        t_ex: r.r_ex.ln(),
        match_bonus: model.sigma_g,
        gap_per_sample: 0.0,
        combine,
        l_min: model.l_min,
        l_max_x: model.l_max_x,
        l_max_y: model.l_max_y,
        band,
        prune: opts.prune,
    }
}

/// Runs the lattice with the model's band, falling back to an unbounded band
/// when the banded problem has no admissible path.
pub(crate) fn run_with_band_fallback<C: SegmentCost>(
    cost: &C,
    model: &SphmmModel,
    make: impl Fn(Option<f64>) -> KernelParams,
) -> Result<Lattice> {
    model.validate()?;
    let lpsi = LogPsi::new(&model.psi, model.l_max_x, model.l_max_y);
    let band = model.effective_band();
    let params = make(band);
    let lat = kernel::run(cost, &lpsi, &params);
    if kernel::final_value(&lat, params.combine).0 > f64::NEG_INFINITY {
        return Ok(lat);
    }
    if band.is_some() {
        log::warn!(
            "band {:?} admits no alignment of lengths {} and {}; widening to unbounded",
            band,
            cost.len_x(),
            cost.len_y()
        );
        let params = make(None);
        let lat = kernel::run(cost, &lpsi, &params);
        if kernel::final_value(&lat, params.combine).0 > f64::NEG_INFINITY {
            return Ok(lat);
        }
    }
    Err(SegalignError::Infeasible(format!(
        "no segmentation of lengths {} and {} with segment lengths in [{}, {}] x [{}, {}]",
        cost.len_x(),
        cost.len_y(),
        model.l_min,
        model.l_max_x,
        model.l_min,
        model.l_max_y
    )))
}

fn traceback(lat: &Lattice, end_state: u8) -> AlignmentPath {
    let mut steps = Vec::new();
    let (mut i, mut j) = (lat.n, lat.m);
    let mut state = end_state;
    while i > 0 || j > 0 {
        let idx = lat.idx(i, j);
        match state {
            FROM_M => {
                let (k, z) = (lat.m_k[idx] as usize, lat.m_z[idx] as usize);
                steps.push(AlignmentStep::matched(Segment::with_len(i - k, k), Segment::with_len(j - z, z)));
                i -= k;
                j -= z;
                state = lat.pb_from[lat.idx(i, j)];
            }
            FROM_I => {
                let k = lat.i_k[idx] as usize;
                steps.push(AlignmentStep::insertion(Segment::with_len(i - k, k)));
                i -= k;
                state = lat.gi_from[lat.idx(i, j)];
            }
            _ => {
                let z = lat.d_z[idx] as usize;
                steps.push(AlignmentStep::deletion(Segment::with_len(j - z, z)));
                j -= z;
                state = lat.gd_from[lat.idx(i, j)];
            }
        }
    }
    steps.reverse();
    AlignmentPath::new(steps)
}

/// Log-likelihood of the segmented pair along a fixed path, start treated as
/// a match state and the end transition dropped.
pub fn path_loglik<C: SegmentCost>(cost: &C, path: &AlignmentPath, model: &SphmmModel) -> Result<f64> {
    let mm = (1.0 - 2.0 * model.delta - model.tau).ln();
    let gm = (1.0 - model.epsilon - model.tau).ln();
    let mut prev = State::M;
    let mut total = 0.0;
    for step in &path.steps {
        total += match (prev, step.state) {
            (State::M, State::M) => mm,
            (_, State::M) => gm,
            (State::M, _) => model.delta.ln(),
            (State::I, State::I) | (State::D, State::D) => model.epsilon.ln(),
            _ => return Err(SegalignError::InvalidArgument("path contains an I/D switch".into())),
        };
        total += match (step.sx, step.sy) {
            (Some(sx), Some(sy)) => {
                let d = cost.cost(sx.begin, sx.end + 1, sy.begin, sy.end + 1);
                let p = match_emission(d, sx.len(), sy.len(), &model.psi, model.l_max_x, model.l_max_y)?;
                p.ln()
            }
            (Some(s), None) | (None, Some(s)) => -model.sigma_g * s.len() as f64,
            (None, None) => return Err(SegalignError::InvalidArgument("empty step".into())),
        };
        prev = step.state;
    }
    Ok(total)
}

/// Viterbi alignment over any segment cost.
pub fn viterbi_align_cost<C: SegmentCost>(
    cost: &C,
    model: &SphmmModel,
    opts: AlignOptions,
) -> Result<AlignmentResult> {
    let lat = run_with_band_fallback(cost, model, |band| log_odds_params(model, band, opts, Combine::Max))?;
    let (best, end_state) = kernel::final_value(&lat, Combine::Max);
    let path = traceback(&lat, end_state);
    let (n, m) = (cost.len_x(), cost.len_y());
    let lx = path.segmentation_x().len();
    let ly = path.segmentation_y().len();
    let null = null_loglik_counts(lx, n, ly, m, model);
    let raw = path_loglik(cost, &path, model)?;
    Ok(AlignmentResult {
        log_odds: best - 2.0 * model.eta.ln(),
        raw_loglik: raw,
        null_loglik: null,
        path,
        cells_evaluated: lat.cells_evaluated,
        candidates_pruned: lat.candidates_pruned,
    })
}

/// Jointly segments and aligns `x` and `y`, maximizing the log-odds against
/// the null model.
pub fn viterbi_align(x: &Sequence, y: &Sequence, model: &SphmmModel) -> Result<AlignmentResult> {
    let table = PairwiseDistanceTable::build(x, y, model.norm)?;
    viterbi_align_cost(&table, model, AlignOptions::default())
}

/// Per-sample pair-HMM: the segmental model restricted to unit segments.
pub fn phmm_align(x: &Sequence, y: &Sequence, model: &SphmmModel) -> Result<AlignmentResult> {
    viterbi_align(x, y, &model.per_sample())
}
