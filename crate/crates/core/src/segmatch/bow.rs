use std::io::BufRead;

use crate::error::{Result, SegalignError};

/// Cumulative per-bin sums over frames; row `e` holds the sum of frames `0..e`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralHistogram {
    bins: usize,
    rows: Vec<f64>,
    mass: Vec<f64>,
}

impl IntegralHistogram {
    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Number of frames covered.
    pub fn frames(&self) -> usize {
        self.rows.len() / self.bins - 1
    }

    /// Histogram of frames `b..e` (half-open, 0-based) written into `out`.
    #[inline]
    pub fn segment_into(&self, b: usize, e: usize, out: &mut [f64]) {
        debug_assert!(b <= e && e <= self.frames());
        let h = self.bins;
        let (lo, hi) = (&self.rows[b * h..(b + 1) * h], &self.rows[e * h..(e + 1) * h]);
        for ((o, a), c) in out.iter_mut().zip(hi).zip(lo) {
            *o = a - c;
        }
    }

    pub fn segment(&self, b: usize, e: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        self.segment_into(b, e, &mut out);
        out
    }

    /// Cumulative counts of frames `0..r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.bins..(r + 1) * self.bins]
    }

    /// Total mass of frames `b..e`.
    #[inline]
    pub fn mass(&self, b: usize, e: usize) -> f64 {
        self.mass[e] - self.mass[b]
    }
}

/// Builds the cumulative table; frames must be nonempty, equally sized and
/// nonnegative.
pub fn build_integral_histogram(frames: &[Vec<f64>]) -> Result<IntegralHistogram> {
    let bins = frames.first().map(Vec::len).ok_or_else(|| SegalignError::EmptyInput("no frames".into()))?;
    if bins == 0 {
        return Err(SegalignError::InvalidSequence("histograms need at least one bin".into()));
    }
    let mut rows = vec![0.0; (frames.len() + 1) * bins];
    let mut mass = vec![0.0; frames.len() + 1];
    for (f, frame) in frames.iter().enumerate() {
        if frame.len() != bins {
            return Err(SegalignError::BinMismatch(bins, frame.len()));
        }
        for (h, &v) in frame.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SegalignError::NegativeCount { frame: f, bin: h });
            }
            rows[(f + 1) * bins + h] = rows[f * bins + h] + v;
        }
        mass[f + 1] = mass[f] + frame.iter().sum::<f64>();
    }
    Ok(IntegralHistogram { bins, rows, mass })
}

/// A sequence of per-frame histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct BowSequence {
    id: String,
    label: Option<String>,
    histograms: Vec<Vec<f64>>,
    integral: IntegralHistogram,
}

impl BowSequence {
    pub fn new(id: impl Into<String>, label: Option<String>, histograms: Vec<Vec<f64>>) -> Result<Self> {
        let integral = build_integral_histogram(&histograms)?;
        Ok(Self {
            id: id.into(),
            label,
            histograms,
            integral,
        })
    }

    /// Reads one frame per line. Blank lines are skipped; an optional
    /// `#H=<int>` header fixes the bin count, other `#` lines are comments.
    pub fn read<R: BufRead>(id: impl Into<String>, label: Option<String>, reader: R) -> Result<Self> {
        let mut expect: Option<usize> = None;
        let mut frames = Vec::new();
        for (no, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("H=") {
                    let h = v.trim().parse::<usize>().map_err(|e| SegalignError::Parse {
                        line: no + 1,
                        msg: format!("bad bin count: {e}"),
                    })?;
                    expect = Some(h);
                }
                continue;
            }
            let frame = t
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>().map(|v| v as f64).map_err(|_| SegalignError::Parse {
                        line: no + 1,
                        msg: format!("`{tok}` is not a nonnegative integer count"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(h) = expect {
                if frame.len() != h {
                    return Err(SegalignError::Parse {
                        line: no + 1,
                        msg: format!("expected {h} bins, found {}", frame.len()),
                    });
                }
            }
            frames.push(frame);
        }
        Self::new(id, label, frames)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.histograms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histograms.is_empty()
    }

    pub fn bins(&self) -> usize {
        self.integral.bins()
    }

    pub fn histograms(&self) -> &[Vec<f64>] {
        &self.histograms
    }

    pub fn integral(&self) -> &IntegralHistogram {
        &self.integral
    }

    /// Histogram of frames `b..e`, half-open and 0-based.
    pub fn segment(&self, b: usize, e: usize) -> Vec<f64> {
        self.integral.segment(b, e)
    }
}
