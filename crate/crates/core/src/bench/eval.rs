use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dtw::{dtw_align, DtwConfig};
use super::synth::WarpGroundTruth;
use crate::error::{Result, SegalignError};
use crate::marginal::marginal_score;
use crate::segmatch::{fast_sm_match, sm_match, BowSequence, SmConfig};
use crate::sequence::Sequence;
use crate::sphmm::{phmm_align, viterbi_align, AlignmentPath, SphmmModel};

/// Sum of absolute differences between correspondences and the truth.
pub fn alignment_error(corr: &[f64], truth: &WarpGroundTruth) -> Result<f64> {
    if corr.is_empty() {
        return Err(SegalignError::EmptyInput("no correspondences".into()));
    }
    if corr.len() != truth.mapping.len() {
        return Err(SegalignError::InvalidArgument(format!(
            "{} correspondences for a truth of length {}",
            corr.len(),
            truth.mapping.len()
        )));
    }
    Ok(corr.iter().zip(&truth.mapping).map(|(c, t)| (c - t).abs()).sum())
}

/// Alignment error of a segmental path whose X side is the warped sequence.
pub fn path_alignment_error(path: &AlignmentPath, truth: &WarpGroundTruth) -> Result<f64> {
    if path.steps.is_empty() {
        return Err(SegalignError::EmptyInput("empty alignment path".into()));
    }
    alignment_error(&path.correspondences(truth.mapping.len())?, truth)
}

/// Items that carry a class label.
pub trait Labeled {
    fn label(&self) -> Option<&str>;
}

impl Labeled for Sequence {
    fn label(&self) -> Option<&str> {
        Sequence::label(self)
    }
}

impl Labeled for BowSequence {
    fn label(&self) -> Option<&str> {
        BowSequence::label(self)
    }
}

/// Higher means more alike.
pub trait Similarity<T>: Sync {
    fn similarity(&self, query: &T, reference: &T) -> Result<f64>;
    fn name(&self) -> &'static str;
}

/// Similarity measures over raw sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum Scorer {
    Sphmm(SphmmModel),
    /// The same model restricted to unit segments.
    Phmm(SphmmModel),
    Marginal(SphmmModel),
    /// Negated warping distance.
    Dtw(DtwConfig),
}

impl Similarity<Sequence> for Scorer {
    fn similarity(&self, q: &Sequence, r: &Sequence) -> Result<f64> {
        match self {
            Scorer::Sphmm(m) => Ok(viterbi_align(q, r, m)?.log_odds),
            Scorer::Phmm(m) => Ok(phmm_align(q, r, m)?.log_odds),
            Scorer::Marginal(m) => marginal_score(q, r, m),
            Scorer::Dtw(c) => Ok(-dtw_align(q, r, c)?.distance),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Scorer::Sphmm(_) => "sphmm",
            Scorer::Phmm(_) => "phmm",
            Scorer::Marginal(_) => "marginal",
            Scorer::Dtw(_) => "dtw",
        }
    }
}

/// Similarity measures over histogram sequences.
#[derive(Debug, Clone, PartialEq)]
pub enum BowScorer {
    Sm(SmConfig),
    FastSm(SmConfig),
}

impl Similarity<BowSequence> for BowScorer {
    fn similarity(&self, q: &BowSequence, r: &BowSequence) -> Result<f64> {
        match self {
            BowScorer::Sm(c) => Ok(sm_match(q, r, c)?.log_lik),
            BowScorer::FastSm(c) => Ok(fast_sm_match(q, r, c, true)?.log_lik),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            BowScorer::Sm(_) => "sm",
            BowScorer::FastSm(_) => "fastsm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    fn new(labels: Vec<String>) -> Self {
        let k = labels.len();
        Self {
            labels,
            counts: vec![vec![0; k]; k],
        }
    }

    fn add(&mut self, truth: &str, pred: &str) {
        let pos = |l: &str| self.labels.iter().position(|x| x == l).expect("label registered");
        let (a, b) = (pos(truth), pos(pred));
        self.counts[a][b] += 1;
    }

    fn merge(&mut self, other: &ConfusionMatrix) {
        for (i, row) in other.counts.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let (a, b) = (
                    self.labels.iter().position(|x| *x == other.labels[i]).expect("label registered"),
                    self.labels.iter().position(|x| *x == other.labels[j]).expect("label registered"),
                );
                self.counts[a][b] += c;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnResult {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub predictions: Vec<String>,
    /// Index into the training set of each query's nearest neighbour.
    pub neighbours: Vec<usize>,
}

fn label_of<T: Labeled>(item: &T, role: &str, idx: usize) -> Result<String> {
    item.label()
        .map(str::to_string)
        .ok_or_else(|| SegalignError::InvalidArgument(format!("{role} item {} has no label", idx + 1)))
}

fn sorted_labels<'a, T: Labeled + 'a>(items: impl Iterator<Item = &'a T>) -> Vec<String> {
    let mut v: Vec<String> = items.filter_map(|t| t.label().map(str::to_string)).collect();
    v.sort();
    v.dedup();
    v
}

/// 1-nearest-neighbour classification; ties go to the earliest training item.
pub fn knn_classify<T, S>(train: &[T], test: &[T], sim: &S) -> Result<KnnResult>
where
    T: Labeled + Sync,
    S: Similarity<T>,
{
    if train.is_empty() {
        return Err(SegalignError::EmptyInput("empty training set".into()));
    }
    if test.is_empty() {
        return Err(SegalignError::EmptyInput("empty test set".into()));
    }
    let train_labels = train.iter().enumerate().map(|(i, t)| label_of(t, "training", i)).collect::<Result<Vec<_>>>()?;
    let test_labels = test.iter().enumerate().map(|(i, t)| label_of(t, "test", i)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..test.len()).flat_map(|q| (0..train.len()).map(move |r| (q, r))).collect();
    let scores = pairs
        .par_iter()
        .map(|&(q, r)| sim.similarity(&test[q], &train[r]))
        .collect::<Result<Vec<f64>>>()?;
    let mut confusion = ConfusionMatrix::new(sorted_labels(train.iter().chain(test)));
    let (mut predictions, mut neighbours, mut hits) = (Vec::new(), Vec::new(), 0usize);
    for (q, row) in scores.chunks(train.len()).enumerate() {
        let mut best = 0;
        for (r, &s) in row.iter().enumerate() {
            if s > row[best] || (row[best].is_nan() && !s.is_nan()) {
                best = r;
            }
        }
        let pred = train_labels[best].clone();
        confusion.add(&test_labels[q], &pred);
        if pred == test_labels[q] {
            hits += 1;
        }
        predictions.push(pred);
        neighbours.push(best);
    }
    Ok(KnnResult {
        accuracy: hits as f64 / test.len() as f64,
        confusion,
        predictions,
        neighbours,
    })
}

/// Fold index of every item. Classes are shuffled and dealt round-robin so
/// each fold sees every class; a class smaller than `folds` falls back to a
/// plain shuffled split.
pub fn fold_assignment<T: Labeled>(items: &[T], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(SegalignError::InvalidArgument("need at least 2 folds".into()));
    }
    if items.len() < folds {
        return Err(SegalignError::InvalidArgument(format!(
            "{} items cannot fill {folds} folds",
            items.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, it) in items.iter().enumerate() {
        groups.entry(label_of(it, "dataset", i)?).or_default().push(i);
    }
    let mut fold = vec![0; items.len()];
    if let Some((label, g)) = groups.iter().find(|(_, g)| g.len() < folds) {
        log::warn!(
            "class `{label}` has {} members for {folds} folds; using a non-stratified split",
            g.len()
        );
        let mut all: Vec<usize> = (0..items.len()).collect();
        all.shuffle(&mut rng);
        for (k, i) in all.into_iter().enumerate() {
            fold[i] = k % folds;
        }
        return Ok(fold);
    }
    let mut next = 0;
    for g in groups.values_mut() {
        g.shuffle(&mut rng);
        for &i in g.iter() {
            fold[i] = next % folds;
            next += 1;
        }
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalResult {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub confusion: ConfusionMatrix,
}

pub fn crossval<T, S>(items: &[T], folds: usize, sim: &S, seed: u64) -> Result<CrossvalResult>
where
    T: Labeled + Sync + Clone,
    S: Similarity<T>,
{
    let assign = fold_assignment(items, folds, seed)?;
    let mut confusion = ConfusionMatrix::new(sorted_labels(items.iter()));
    let mut accs = Vec::with_capacity(folds);
    for f in 0..folds {
        let train: Vec<T> = items.iter().zip(&assign).filter(|(_, &a)| a != f).map(|(t, _)| t.clone()).collect();
        let test: Vec<T> = items.iter().zip(&assign).filter(|(_, &a)| a == f).map(|(t, _)| t.clone()).collect();
        let r = knn_classify(&train, &test, sim)?;
        log::info!("fold {}/{folds}: accuracy {:.4}", f + 1, r.accuracy);
        confusion.merge(&r.confusion);
        accs.push(r.accuracy);
    }
    let mean = accs.iter().sum::<f64>() / folds as f64;
    let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (folds - 1) as f64;
    Ok(CrossvalResult {
        fold_accuracies: accs,
        mean,
        std: var.sqrt(),
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub r_plus: f64,
    pub r_minus: f64,
    /// `min(R+, R-)`.
    pub t: f64,
    pub z: f64,
    /// Pairs left after dropping zero differences.
    pub n: usize,
}

/// Signed-rank test of `a` against `b`. Zero differences are dropped and tied
/// magnitudes share their average rank.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(SegalignError::InvalidArgument(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Err(SegalignError::NoNonzeroDifferences);
    }
    let n = d.len();
    if n < 6 {
        log::warn!("only {n} nonzero differences; the normal approximation is rough");
    }
    d.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let (mut r_plus, mut r_minus) = (0.0, 0.0);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let rank = (i + j + 2) as f64 / 2.0;
        for v in &d[i..=j] {
            if *v > 0.0 {
                r_plus += rank;
            } else {
                r_minus += rank;
            }
        }
        i = j + 1;
    }
    let t = r_plus.min(r_minus);
    let nf = n as f64;
    let z = (t - nf * (nf + 1.0) / 4.0) / (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt();
    Ok(WilcoxonResult {
        r_plus,
        r_minus,
        t,
        z,
        n,
    })
}
