use rayon::prelude::*;

use super::dtw::{dtw_align, gap_sweep, DtwConfig};
use super::eval::{alignment_error, path_alignment_error};
use super::io::Dataset;
use super::noise::{inject_noise, NoiseSpec};
use super::synth::Synth1Pair;
use crate::error::Result;
use crate::sphmm::{viterbi_align, SphmmModel};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Alignment error of the segmental model on every pair, warped side as X.
pub fn synth1_sphmm_errors(pairs: &[Synth1Pair], model: &SphmmModel) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .map(|p| {
            let r = viterbi_align(&p.warped, &p.original, model)?;
            path_alignment_error(&r.path, &p.truth)
        })
        .collect()
}

pub fn synth1_dtw_errors(pairs: &[Synth1Pair], cfg: &DtwConfig) -> Result<Vec<f64>> {
    pairs
        .par_iter()
        .map(|p| {
            let r = dtw_align(&p.warped, &p.original, cfg)?;
            alignment_error(&r.correspondences(p.warped.len()), &p.truth)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSweep {
    /// `(penalty, mean error)` for every penalty tried.
    pub trials: Vec<(f64, f64)>,
    pub best_penalty: f64,
    pub best_mean: f64,
}

/// Mean DTW alignment error over the standard penalty sweep; keeps the lowest.
pub fn synth1_dtw_sweep(pairs: &[Synth1Pair], base: &DtwConfig) -> Result<GapSweep> {
    let mut trials = Vec::new();
    for g in gap_sweep() {
        let cfg = DtwConfig { gap_penalty: g, ..*base };
        trials.push((g, mean(&synth1_dtw_errors(pairs, &cfg)?)));
    }
    let &(best_penalty, best_mean) = trials
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("sweep is nonempty");
    Ok(GapSweep {
        trials,
        best_penalty,
        best_mean,
    })
}

/// `replicas` noisy copies of a dataset; replica `r` of item `i` uses seed
/// `seed + 1000·r + i`.
pub fn noisy_replicas(data: &Dataset, spec: &NoiseSpec, replicas: usize, seed: u64) -> Result<Vec<Dataset>> {
    (0..replicas)
        .map(|r| {
            let seqs = data
                .sequences
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let sp = NoiseSpec {
                        rng_seed: seed + 1000 * r as u64 + i as u64,
                        ..*spec
                    };
                    inject_noise(s, &sp)
                })
                .collect::<Result<Vec<_>>>()?;
            Dataset::new(format!("{}-noisy{}", data.name, r + 1), seqs)
        })
        .collect()
}
