use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::io::Dataset;
use crate::error::{Result, SegalignError};
use crate::segmatch::BowSequence;
use crate::sequence::Sequence;

/// Warp ground truth: `mapping[t]` is the (real-valued, 0-based) position in
/// the original sequence that sample `t` of the warped sequence was read from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpGroundTruth {
    pub mapping: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synth1Config {
    pub len: usize,
    pub mu: Vec<f64>,
    pub pi: Vec<f64>,
    /// Width of each Gaussian bump.
    pub width: f64,
    /// Standard deviation of the warp perturbation inside non-causal intervals.
    pub warp_noise_std: f64,
    /// Closed 1-based intervals where the warp is perturbed.
    pub intervals: Vec<(usize, usize)>,
    pub non_causal: bool,
}

impl Default for Synth1Config {
    fn default() -> Self {
        Self {
            len: 450,
            mu: vec![30.0, 60.0, 90.0, 130.0, 150.0, 200.0, 230.0, 300.0, 380.0, 430.0],
            pi: vec![7.0, 1.0, 3.0, 10.0, 3.0, 6.0, 1.0, 8.0, 3.0, 10.0],
            width: 5.0,
            warp_noise_std: 10.0,
            intervals: vec![(50, 100), (125, 150), (250, 350), (400, 425)],
            non_causal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synth1Pair {
    pub original: Sequence,
    pub warped: Sequence,
    pub truth: WarpGroundTruth,
    pub causal: bool,
}

/// The monotone warp, 1-based time in and out.
pub fn warp_fn(t: f64) -> f64 {
    if t <= 100.0 {
        1.0 + 0.01 * t * t
    } else {
        310.0 + 150.0 * (t / 100.0).tanh()
    }
}

pub fn gen_synthetic1(count: usize, seed: u64) -> Result<Vec<Synth1Pair>> {
    gen_synthetic1_with(count, seed, &Synth1Config::default())
}

pub fn gen_synthetic1_with(count: usize, seed: u64, cfg: &Synth1Config) -> Result<Vec<Synth1Pair>> {
    if count == 0 {
        return Err(SegalignError::InvalidArgument("count must be >= 1".into()));
    }
    if cfg.mu.len() != cfg.pi.len() || cfg.len == 0 || !(cfg.width > 0.0) {
        return Err(SegalignError::InvalidArgument("bad synthetic generator settings".into()));
    }
    let warp_noise = Normal::new(0.0, cfg.warp_noise_std)
        .map_err(|e| SegalignError::InvalidArgument(format!("warp noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.len;
    let mut out = Vec::with_capacity(count);
    for c in 0..count {
        let weights: Vec<f64> = cfg.pi.iter().map(|p| p + rng.sample::<f64, _>(StandardNormal)).collect();
        let values: Vec<f64> = (1..=n)
            .map(|t| {
                let t = t as f64;
                let bumps: f64 = weights
                    .iter()
                    .zip(&cfg.mu)
                    .map(|(w, mu)| w * (-(t - mu) * (t - mu) / (2.0 * cfg.width * cfg.width)).exp())
                    .sum();
                bumps + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let mut mapping = Vec::with_capacity(n);
        for t in 1..=n {
            let mut f = warp_fn(t as f64);
            if cfg.non_causal && cfg.intervals.iter().any(|&(b, e)| b <= t && t <= e) {
                f += warp_noise.sample(&mut rng);
            }
            mapping.push(f.clamp(1.0, n as f64) - 1.0);
        }
        let warped_values = mapping.iter().map(|&p| values[p.round() as usize]).collect();
        let original = Sequence::univariate(format!("s1-{c}"), None, values)?;
        let warped = Sequence::univariate(format!("s1-{c}-warped"), None, warped_values)?;
        out.push(Synth1Pair {
            original,
            warped,
            truth: WarpGroundTruth { mapping },
            causal: !cfg.non_causal,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synth2Config {
    pub carrier_len: usize,
    pub signal_len: usize,
    pub amplitude: f64,
    /// Period of the sinusoid, in samples.
    pub period: f64,
}

impl Default for Synth2Config {
    fn default() -> Self {
        Self {
            carrier_len: 200,
            signal_len: 60,
            amplitude: 3.0,
            period: 20.0,
        }
    }
}

pub const SYNTH2_CLASSES: [&str; 2] = ["sine", "rect"];

/// Two classes: a sinusoid burst or a rectangular pulse, added at a uniformly
/// random offset to a standard-normal carrier.
pub fn gen_synthetic2(count_per_class: usize, seed: u64, cfg: &Synth2Config) -> Result<Dataset> {
    if count_per_class == 0 {
        return Err(SegalignError::InvalidArgument("count must be >= 1".into()));
    }
    if cfg.signal_len > cfg.carrier_len || cfg.signal_len == 0 {
        return Err(SegalignError::InvalidArgument(format!(
            "signal length {} must lie in 1..={} (the carrier length)",
            cfg.signal_len, cfg.carrier_len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seqs = Vec::with_capacity(2 * count_per_class);
    for i in 0..count_per_class {
        for class in SYNTH2_CLASSES {
            let mut v: Vec<f64> = (0..cfg.carrier_len).map(|_| rng.sample(StandardNormal)).collect();
            let offset = rng.gen_range(0..=cfg.carrier_len - cfg.signal_len);
            for k in 0..cfg.signal_len {
                v[offset + k] += match class {
                    "sine" => cfg.amplitude * (2.0 * std::f64::consts::PI * k as f64 / cfg.period).sin(),
                    _ => cfg.amplitude,
                };
            }
            seqs.push(Sequence::univariate(format!("s2-{class}-{i}"), Some(class.to_string()), v)?);
        }
    }
    Dataset::new("synthetic2", seqs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowSuiteConfig {
    pub classes: usize,
    pub per_class: usize,
    pub bins: usize,
    /// Activity phases per class prototype.
    pub phases: usize,
    /// Mean frames per phase.
    pub phase_len: usize,
    pub words_per_frame: usize,
    /// Probability that a word is drawn uniformly instead of from the phase.
    pub clutter: f64,
}

impl Default for BowSuiteConfig {
    fn default() -> Self {
        Self {
            classes: 6,
            per_class: 6,
            bins: 16,
            phases: 4,
            phase_len: 12,
            words_per_frame: 6,
            clutter: 0.3,
        }
    }
}

/// Labeled BoW sequences: each class is a chain of phases with their own word
/// distributions; instances jitter the phase durations and resample words.
pub fn gen_bow_suite(seed: u64, cfg: &BowSuiteConfig) -> Result<Vec<BowSequence>> {
    if cfg.classes == 0 || cfg.per_class == 0 || cfg.bins == 0 || cfg.phases == 0 || cfg.phase_len == 0 {
        return Err(SegalignError::InvalidArgument("bow suite sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protos: Vec<Vec<Vec<f64>>> = (0..cfg.classes)
        .map(|_| {
            (0..cfg.phases)
                .map(|_| (0..cfg.bins).map(|_| rng.gen::<f64>().powi(4)).collect())
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..cfg.per_class {
        for (c, phases) in protos.iter().enumerate() {
            let mut frames = Vec::new();
            for w in phases {
                let dist = WeightedIndex::new(w).map_err(|e| SegalignError::InvalidArgument(e.to_string()))?;
                let lo = (cfg.phase_len * 7 / 10).max(1);
                let hi = (cfg.phase_len * 13 / 10).max(lo);
                for _ in 0..rng.gen_range(lo..=hi) {
                    let mut f = vec![0.0; cfg.bins];
                    for _ in 0..cfg.words_per_frame {
                        let b = if rng.gen_bool(cfg.clutter) { rng.gen_range(0..cfg.bins) } else { dist.sample(&mut rng) };
                        f[b] += 1.0;
                    }
                    frames.push(f);
                }
            }
            out.push(BowSequence::new(format!("bow-{c}-{i}"), Some(format!("c{c}")), frames)?);
        }
    }
    Ok(out)
}
