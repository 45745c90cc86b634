use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SegalignError};
use crate::sequence::Sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Noise on a random subset of time points.
    Impulse,
    /// Noise on every time point.
    GaussianFull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Noise standard deviation as a multiple of each feature's deviation.
    pub omega: f64,
    /// Fraction of time points hit by impulse noise, at most 0.2.
    pub coverage: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn impulse(omega: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Impulse,
            omega,
            coverage: 0.2,
            rng_seed: seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(SegalignError::InvalidArgument("omega must be finite and >= 0".into()));
        }
        if self.kind == NoiseKind::Impulse && !(self.coverage > 0.0 && self.coverage <= 0.2) {
            return Err(SegalignError::InvalidArgument(format!(
                "impulse coverage {} outside (0, 0.2]",
                self.coverage
            )));
        }
        Ok(())
    }
}

/// Sample standard deviation of every feature.
pub fn feature_std(x: &Sequence) -> Vec<f64> {
    let (n, d) = (x.len(), x.dim());
    if n < 2 {
        return vec![0.0; d];
    }
    (0..d)
        .map(|f| {
            let mean = x.rows().map(|r| r[f]).sum::<f64>() / n as f64;
            let ss: f64 = x.rows().map(|r| (r[f] - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        })
        .collect()
}

pub fn inject_noise(x: &Sequence, spec: &NoiseSpec) -> Result<Sequence> {
    spec.validate()?;
    let (n, d) = (x.len(), x.dim());
    if spec.omega == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let noise: Vec<Normal<f64>> = feature_std(x)
        .iter()
        .map(|s| Normal::new(0.0, spec.omega * s).expect("finite nonnegative deviation"))
        .collect();
    let points: Vec<usize> = match spec.kind {
        NoiseKind::GaussianFull => (0..n).collect(),
        NoiseKind::Impulse => {
            let k = (spec.coverage * n as f64).floor() as usize;
            let mut p = index::sample(&mut rng, n, k).into_vec();
            p.sort_unstable();
            p
        }
    };
    let mut v = x.values().to_vec();
    for t in points {
        for (f, dist) in noise.iter().enumerate() {
            v[t * d + f] += dist.sample(&mut rng);
        }
    }
    x.with_values(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Median,
    Mean,
}

/// Sliding per-feature median or mean with edge replication. An even window
/// covers `t - w/2 ..= t + w/2 - 1`.
pub fn filter(x: &Sequence, kind: FilterKind, window: usize) -> Result<Sequence> {
    let (n, d) = (x.len(), x.dim());
    if window == 0 {
        return Err(SegalignError::InvalidArgument("filter window must be >= 1".into()));
    }
    if window > n {
        return Err(SegalignError::InvalidArgument(format!(
            "filter window {window} exceeds sequence length {n}"
        )));
    }
    let half = window / 2;
    let mut out = vec![0.0; n * d];
    let mut buf = Vec::with_capacity(window);
    for t in 0..n {
        for f in 0..d {
            buf.clear();
            for o in 0..window {
                let idx = (t + o).saturating_sub(half).min(n - 1);
                // for t + o < half the index saturates at 0, replicating the first sample
                buf.push(x.values()[idx * d + f]);
            }
            out[t * d + f] = match kind {
                FilterKind::Mean => buf.iter().sum::<f64>() / window as f64,
                FilterKind::Median => {
                    buf.sort_by(f64::total_cmp);
                    if window % 2 == 1 {
                        buf[half]
                    } else {
                        0.5 * (buf[half - 1] + buf[half])
                    }
                }
            };
        }
    }
    x.with_values(out)
}
