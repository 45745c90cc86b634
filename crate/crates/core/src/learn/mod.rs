//! Viterbi training of the transition parameters and the segment length prior.

mod tune;

pub use tune::{objective, tune_params};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SegalignError};
use crate::metric::PairwiseDistanceTable;
use crate::sequence::Sequence;
use crate::sphmm::{
    viterbi_align_cost, AlignOptions, AlignmentPath, SegmentLengthPrior, SphmmModel, State,
};
use tune::Polytope;

/// Transition counts per alignment, plus the raw totals behind them.
///
/// The start of every path counts as a match state, so a path `M, M, M`
/// contributes three M→M transitions. This keeps the tuning objective equal
/// to the transition part of the path log-odds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransitionCounts {
    pub c_mm: f64,
    pub c_gm: f64,
    pub c_op: f64,
    pub c_ex: f64,
    pub n_alignments: usize,
    /// M→M, (I|D)→M, M→(I|D), I→I + D→D.
    pub raw: [u64; 4],
}

/// Alg-1 style re-estimates from raw counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub delta: f64,
    /// `None` when no transition leaves a gap state.
    pub epsilon: Option<f64>,
}

impl TransitionCounts {
    pub fn closed_form(&self) -> Result<ClosedForm> {
        let [mm, gm, op, ex] = self.raw;
        let m_out = mm + op;
        if m_out == 0 {
            return Err(SegalignError::DegenerateCounts("no transitions out of the match state".into()));
        }
        let g_out = gm + ex;
        Ok(ClosedForm {
            delta: op as f64 / (2.0 * m_out as f64),
            epsilon: (g_out > 0).then(|| ex as f64 / g_out as f64),
        })
    }
}

fn raw_counts(path: &AlignmentPath) -> [u64; 4] {
    let mut c = [0u64; 4];
    let mut prev = State::M;
    for step in &path.steps {
        let slot = match (prev, step.state) {
            (State::M, State::M) => 0,
            (_, State::M) => 1,
            (State::M, _) => 2,
            _ => 3,
        };
        c[slot] += 1;
        prev = step.state;
    }
    c
}

pub fn count_transitions(paths: &[AlignmentPath]) -> Result<TransitionCounts> {
    if paths.is_empty() {
        return Err(SegalignError::EmptyInput("no alignment paths".into()));
    }
    let mut raw = [0u64; 4];
    for p in paths {
        for (a, b) in raw.iter_mut().zip(raw_counts(p)) {
            *a += b;
        }
    }
    if raw[0] + raw[2] == 0 {
        return Err(SegalignError::DegenerateCounts("no transitions out of the match state".into()));
    }
    let n = paths.len() as f64;
    Ok(TransitionCounts {
        c_mm: raw[0] as f64 / n,
        c_gm: raw[1] as f64 / n,
        c_op: raw[2] as f64 / n,
        c_ex: raw[3] as f64 / n,
        n_alignments: paths.len(),
        raw,
    })
}

/// Empirical joint distribution of matched segment lengths.
pub fn estimate_psi(paths: &[AlignmentPath], l_max_x: usize, l_max_y: usize) -> Result<SegmentLengthPrior> {
    let mut table = vec![vec![0.0; l_max_y]; l_max_x];
    let mut total = 0usize;
    for step in paths.iter().flat_map(|p| &p.steps) {
        if let (Some(sx), Some(sy)) = (step.sx, step.sy) {
            let (k, z) = (sx.len(), sy.len());
            if k > l_max_x || z > l_max_y {
                return Err(SegalignError::LengthOutsideSupport { len_x: k, len_y: z });
            }
            table[k - 1][z - 1] += 1.0;
            total += 1;
        }
    }
    if total == 0 {
        return Err(SegalignError::DegenerateCounts("no matched segments".into()));
    }
    for v in table.iter_mut().flatten() {
        *v /= total as f64;
    }
    Ok(SegmentLengthPrior::Table { table })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EtaPolicy {
    /// `2 / (L_X + L_Y + 2)` with the segment counts expected under a uniform
    /// length prior, averaged over the training pairs; fixed before the first
    /// iteration.
    Mle,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub z_m: f64,
    pub z_g: f64,
    pub max_iters: usize,
    /// Relative change of the summed log-odds that counts as converged.
    pub tol: f64,
    pub eta_policy: EtaPolicy,
    pub learn_psi: bool,
    /// Distance kept from every open constraint.
    pub margin: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            z_m: 5f64.exp(),
            z_g: (-10f64).exp(),
            max_iters: 25,
            tol: 1e-5,
            eta_policy: EtaPolicy::Fixed(0.6),
            learn_psi: false,
            margin: 1e-10,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub total_log_odds: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SphmmModel,
    pub log: Vec<IterationLog>,
    pub converged: bool,
}

/// A random point of the feasible polytope for the given `eta`.
pub fn random_feasible(eta: f64, config: &LearnConfig, seed: u64) -> Result<(f64, f64, f64)> {
    let poly = Polytope::new(eta, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (tlo, thi) = poly.tau_range()?;
    // keep tau in the lower tenth; large tau starves every other transition
    let tau = tlo + rng.gen::<f64>() * 0.1 * (thi - tlo);
    let (d, e, t) = poly.project(rng.gen::<f64>(), rng.gen::<f64>(), tau)?;
    let (d, e, t) = poly.project(d * rng.gen::<f64>().max(1e-3), e * rng.gen::<f64>().max(1e-3), t)?;
    Ok((d, e, t))
}

/// All unordered same-label pairs `(i, j)`, `i < j`.
pub fn same_class_pairs(data: &[Sequence]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            if data[i].label().is_some() && data[i].label() == data[j].label() {
                out.push((i, j));
            }
        }
    }
    out
}

fn expected_eta(pairs: &[(&Sequence, &Sequence)], model: &SphmmModel) -> f64 {
    let mean_len = |l: usize| (l + 1) as f64 / 2.0;
    let (mut lx, mut ly) = (0.0, 0.0);
    for (x, y) in pairs {
        lx += x.len() as f64 / mean_len(model.l_max_x);
        ly += y.len() as f64 / mean_len(model.l_max_y);
    }
    let n = pairs.len() as f64;
    2.0 / ((lx + ly) / n + 2.0)
}

/// Viterbi training: align every pair, count transitions, re-estimate, tune,
/// and repeat until the summed log-odds stops changing.
pub fn em_train(
    pairs: &[(&Sequence, &Sequence)],
    init: &SphmmModel,
    config: &LearnConfig,
) -> Result<TrainOutcome> {
    if pairs.is_empty() {
        return Err(SegalignError::EmptyInput("no training pairs".into()));
    }
    let mut model = init.clone();
    model.eta = match config.eta_policy {
        EtaPolicy::Fixed(v) => v,
        EtaPolicy::Mle => expected_eta(pairs, init),
    };
    let poly = Polytope::new(model.eta, config)?;
    let (d, e, t) = poly.project(model.delta, model.epsilon, model.tau)?;
    model.delta = d;
    model.epsilon = e;
    model.tau = t;
    model.validate()?;

    let tables = pairs
        .par_iter()
        .map(|(x, y)| PairwiseDistanceTable::build(x, y, model.norm))
        .collect::<Result<Vec<_>>>()?;

    let mut log = Vec::new();
    let mut prev_total: Option<f64> = None;
    let mut converged = false;
    for iter in 0..config.max_iters {
        let results = tables
            .par_iter()
            .map(|t| viterbi_align_cost(t, &model, AlignOptions::default()))
            .collect::<Result<Vec<_>>>()?;
        let total: f64 = results.iter().map(|r| r.log_odds).sum();
        log.push(IterationLog {
            iter,
            total_log_odds: total,
            delta: model.delta,
            epsilon: model.epsilon,
            tau: model.tau,
        });
        log::info!("iter {iter}: total log-odds {total:.6}");
        if let Some(p) = prev_total {
            if (total - p).abs() <= config.tol * p.abs().max(1e-12) {
                converged = true;
                break;
            }
        }
        prev_total = Some(total);

        let paths: Vec<AlignmentPath> = results.into_iter().map(|r| r.path).collect();
        let counts = match count_transitions(&paths) {
            Ok(c) => c,
            Err(SegalignError::DegenerateCounts(msg)) => {
                log::warn!("keeping parameters: {msg}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let cf = counts.closed_form()?;
        let eps0 = cf.epsilon.unwrap_or(model.epsilon);
        let start = (cf.delta, eps0, 1.0 - 2.0 * cf.delta - eps0);
        let (d, e, t) = tune_params(&counts, start, model.eta, config)?;
        let current = (model.delta, model.epsilon, model.tau);
        if objective(&counts, d, e, t) >= objective(&counts, current.0, current.1, current.2) {
            model.delta = d;
            model.epsilon = e;
            model.tau = t;
            debug_assert!(poly.contains(d, e, t));
        }
        if config.learn_psi {
            model.psi = estimate_psi(&paths, model.l_max_x, model.l_max_y)?;
        }
    }
    Ok(TrainOutcome { model, log, converged })
}
