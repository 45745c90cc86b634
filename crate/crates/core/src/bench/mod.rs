//! Experiment harness: data files, synthetic generators, noise and filters,
//! the warping baseline, nearest-neighbour evaluation and significance tests.

mod dtw;
mod eval;
mod experiment;
mod io;
mod noise;
mod report;
mod synth;

pub use dtw::{dtw_align, gap_sweep, DtwConfig, DtwResult};
pub use eval::{
    alignment_error, crossval, fold_assignment, knn_classify, path_alignment_error, wilcoxon_signed_rank, BowScorer,
    ConfusionMatrix, CrossvalResult, KnnResult, Labeled, Scorer, Similarity, WilcoxonResult,
};
pub use experiment::{mean, noisy_replicas, synth1_dtw_errors, synth1_dtw_sweep, synth1_sphmm_errors, GapSweep};
pub use io::{
    format_bow, format_sequence_csv, format_ucr, load_bow_index, load_ucr, parse_ucr, read_sequence_csv, write_ucr,
    Dataset,
};
pub use noise::{feature_std, filter, inject_noise, FilterKind, NoiseKind, NoiseSpec};
pub use report::{compare_results, ResultEntry, ResultsFile, RESULTS_SCHEMA};
pub use synth::{
    gen_bow_suite, gen_synthetic1, gen_synthetic1_with, gen_synthetic2, warp_fn, BowSuiteConfig, Synth1Config,
    Synth1Pair, Synth2Config, WarpGroundTruth, SYNTH2_CLASSES,
};
