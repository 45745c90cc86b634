use serde::{Deserialize, Serialize};

use crate::error::{Result, SegalignError};
use crate::sequence::{Norm, Segment};

/// Joint distribution over matched segment lengths `(|X_i|, |Y_j|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SegmentLengthPrior {
    /// Uniform over `{1..l_max_x} × {1..l_max_y}`.
    #[default]
    Uniform,
    /// Explicit table; `table[k-1][z-1] = Ψ(k, z)`.
    Table { table: Vec<Vec<f64>> },
}

impl SegmentLengthPrior {
    /// `Ψ(len_x, len_y)` over the support `{1..max_x} × {1..max_y}`.
    pub fn prob(&self, len_x: usize, len_y: usize, max_x: usize, max_y: usize) -> Result<f64> {
        if len_x == 0 || len_y == 0 || len_x > max_x || len_y > max_y {
            return Err(SegalignError::LengthOutsideSupport { len_x, len_y });
        }
        match self {
            SegmentLengthPrior::Uniform => Ok(1.0 / (max_x * max_y) as f64),
            SegmentLengthPrior::Table { table } => table
                .get(len_x - 1)
                .and_then(|row| row.get(len_y - 1))
                .copied()
                .ok_or(SegalignError::LengthOutsideSupport { len_x, len_y }),
        }
    }

    pub fn validate(&self, max_x: usize, max_y: usize) -> Result<()> {
        if let SegmentLengthPrior::Table { table } = self {
            if table.len() != max_x || table.iter().any(|r| r.len() != max_y) {
                return Err(SegalignError::InvalidModel(format!(
                    "length prior table must be {max_x} x {max_y}"
                )));
            }
            let mut total = 0.0;
            for v in table.iter().flatten() {
                if !(v.is_finite() && *v >= 0.0) {
                    return Err(SegalignError::InvalidModel(
                        "length prior entries must be finite and nonnegative".into(),
                    ));
                }
                total += v;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(SegalignError::InvalidModel(format!(
                    "length prior sums to {total}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

/// Precomputed `ln Ψ` with per-row maxima for bound checks.
#[derive(Debug, Clone)]
pub(crate) struct LogPsi {
    cols: usize,
    table: Vec<f64>,
    row_max: Vec<f64>,
    uniform: Option<f64>,
    max: f64,
    min: f64,
}

impl LogPsi {
    pub(crate) fn new(prior: &SegmentLengthPrior, max_x: usize, max_y: usize) -> Self {
        let cols = max_y + 1;
        let mut table = vec![f64::NEG_INFINITY; (max_x + 1) * cols];
        for k in 1..=max_x {
            for z in 1..=max_y {
                let p = prior.prob(k, z, max_x, max_y).unwrap_or(0.0);
                table[k * cols + z] = p.ln();
            }
        }
        let row_max = (0..=max_x)
            .map(|k| {
                (1..=max_y)
                    .map(|z| table[k * cols + z])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let finite = || table.iter().copied().filter(|v| v.is_finite());
        let max = finite().fold(f64::NEG_INFINITY, f64::max);
        let min = finite().fold(f64::INFINITY, f64::min);
        let uniform = matches!(prior, SegmentLengthPrior::Uniform).then(|| -((max_x * max_y) as f64).ln());
        Self {
            cols,
            table,
            row_max,
            uniform,
            max,
            min: if min.is_finite() { min } else { f64::NEG_INFINITY },
        }
    }

    #[inline]
    pub(crate) fn get(&self, k: usize, z: usize) -> f64 {
        match self.uniform {
            Some(v) => v,
            None => self.table[k * self.cols + z],
        }
    }

    #[inline]
    pub(crate) fn row_max(&self, k: usize) -> f64 {
        self.row_max[k]
    }

    pub(crate) fn max(&self) -> f64 {
        self.max
    }

    pub(crate) fn min(&self) -> f64 {
        self.min
    }
}

/// Parameters of the segmental pair-HMM and its null model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphmmModel {
    /// Match → gap transition probability.
    pub delta: f64,
    /// Gap → same-gap transition probability.
    pub epsilon: f64,
    /// Transition probability to the end state.
    pub tau: f64,
    /// Null model continuation parameter.
    pub eta: f64,
    /// Gap emission scale.
    pub sigma_g: f64,
    pub psi: SegmentLengthPrior,
    pub l_max_x: usize,
    pub l_max_y: usize,
    pub l_min: usize,
    /// Sakoe-Chiba half-width in samples; `None` is unbounded.
    pub band: Option<usize>,
    pub norm: Norm,
}

impl Default for SphmmModel {
    fn default() -> Self {
        Self {
            delta: 0.05,
            epsilon: 0.2,
            tau: 0.01,
            eta: 0.6,
            sigma_g: 1.0,
            psi: SegmentLengthPrior::Uniform,
            l_max_x: 10,
            l_max_y: 10,
            l_min: 1,
            band: None,
            norm: Norm::L2,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    schema: u32,
    #[serde(flatten)]
    model: SphmmModel,
}

impl SphmmModel {
    pub fn with_lengths(mut self, l_max_x: usize, l_max_y: usize) -> Self {
        self.l_max_x = l_max_x;
        self.l_max_y = l_max_y;
        if !matches!(self.psi, SegmentLengthPrior::Uniform) {
            self.psi = SegmentLengthPrior::Uniform;
        }
        self
    }

    pub fn with_band(mut self, band: Option<usize>) -> Self {
        self.band = band;
        self
    }

    /// Copy restricted to unit segments (the per-sample pair-HMM).
    pub fn per_sample(&self) -> Self {
        let mut m = self.clone();
        m.l_min = 1;
        m.l_max_x = 1;
        m.l_max_y = 1;
        m.psi = SegmentLengthPrior::Uniform;
        m
    }

    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        for (name, v) in [
            ("delta", self.delta),
            ("epsilon", self.epsilon),
            ("tau", self.tau),
            ("eta", self.eta),
        ] {
            if !open(v) {
                return Err(SegalignError::InvalidModel(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(1.0 - 2.0 * self.delta - self.tau > 0.0) {
            return Err(SegalignError::InvalidModel("1 - 2·delta - tau must be positive".into()));
        }
        if !(1.0 - self.epsilon - self.tau > 0.0) {
            return Err(SegalignError::InvalidModel("1 - epsilon - tau must be positive".into()));
        }
        if !(self.sigma_g > 0.0 && self.sigma_g.is_finite()) {
            return Err(SegalignError::InvalidModel("sigma_g must be positive".into()));
        }
        if self.l_min == 0 || self.l_max_x == 0 || self.l_max_y == 0 {
            return Err(SegalignError::InvalidModel("segment lengths must be >= 1".into()));
        }
        if self.l_min > self.l_max_x || self.l_min > self.l_max_y {
            return Err(SegalignError::InvalidModel("l_min exceeds a maximum segment length".into()));
        }
        self.psi.validate(self.l_max_x, self.l_max_y)
    }

    /// Band actually enforced for sequences of lengths `n`, `m`: at least
    /// twice the longest segment so that neighbouring segments fit.
    pub fn effective_band(&self) -> Option<f64> {
        self.band
            .map(|b| b.max(2 * self.l_max_x.max(self.l_max_y)) as f64)
    }

    pub fn rewards(&self) -> Rewards {
        rewards(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDoc {
            schema: 1,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        if doc.schema != 1 {
            return Err(SegalignError::InvalidModel(format!("unsupported schema {}", doc.schema)));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }
}

/// Log-odds rewards and penalties of the pair-HMM against its null model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rewards {
    pub r_mm: f64,
    pub r_gm: f64,
    pub r_op: f64,
    pub r_ex: f64,
}

pub fn rewards(model: &SphmmModel) -> Rewards {
    let q = 1.0 - model.eta;
    Rewards {
        r_mm: (1.0 - 2.0 * model.delta - model.tau) / (q * q),
        r_gm: (1.0 - model.epsilon - model.tau) / (q * q),
        r_op: model.delta / q,
        r_ex: model.epsilon / q,
    }
}

/// Likelihood of matching two segments at distance `d`.
pub fn match_emission(
    d: f64,
    len_x: usize,
    len_y: usize,
    psi: &SegmentLengthPrior,
    max_x: usize,
    max_y: usize,
) -> Result<f64> {
    Ok((-d).exp() * psi.prob(len_x, len_y, max_x, max_y)?)
}

/// Likelihood of emitting a gapped segment of `len` samples.
pub fn gap_emission(len: usize, sigma_g: f64) -> Result<f64> {
    if len == 0 {
        return Err(SegalignError::ZeroLength);
    }
    Ok((-sigma_g * len as f64).exp())
}

/// Log-likelihood of both segmentations under the null model.
pub fn null_loglik(seg_x: &[Segment], seg_y: &[Segment], model: &SphmmModel) -> f64 {
    let one = |segs: &[Segment]| {
        let total: usize = segs.iter().map(Segment::len).sum();
        model.eta.ln() + segs.len() as f64 * (1.0 - model.eta).ln() - model.sigma_g * total as f64
    };
    one(seg_x) + one(seg_y)
}

/// Null log-likelihood from segment counts and sequence lengths.
pub(crate) fn null_loglik_counts(lx: usize, n: usize, ly: usize, m: usize, model: &SphmmModel) -> f64 {
    2.0 * model.eta.ln() + (lx + ly) as f64 * (1.0 - model.eta).ln()
        - model.sigma_g * (n + m) as f64
}

/// Maximum-likelihood null parameter for the given segment counts.
pub fn eta_mle(l_x: usize, l_y: usize) -> f64 {
    2.0 / (l_x + l_y + 2) as f64
}
