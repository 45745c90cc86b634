//! Core sequence types shared by every alignment routine.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SegalignError};

/// Sample-level norm used inside segment distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    L2,
    L1,
}

impl Norm {
    #[inline]
    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            Norm::L2 => {
                if a.len() == 1 {
                    return (a[0] - b[0]).abs();
                }
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
            Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = SegalignError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" | "euclidean" => Ok(Norm::L2),
            "l1" | "manhattan" => Ok(Norm::L1),
            other => Err(SegalignError::InvalidArgument(format!("unknown norm `{other}`"))),
        }
    }
}

/// A real-valued multivariate time series stored time-major (`len × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    id: String,
    label: Option<String>,
    dim: usize,
    values: Vec<f64>,
}

impl Sequence {
    pub fn new(
        id: impl Into<String>,
        label: Option<String>,
        dim: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(SegalignError::InvalidSequence("dimension must be >= 1".into()));
        }
        if values.is_empty() {
            return Err(SegalignError::InvalidSequence("sequence has no samples".into()));
        }
        if values.len() % dim != 0 {
            return Err(SegalignError::InvalidSequence(format!(
                "{} values do not divide into rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SegalignError::InvalidSequence(format!(
                "non-finite value at sample {}",
                pos / dim
            )));
        }
        Ok(Self {
            id: id.into(),
            label,
            dim,
            values,
        })
    }

    /// Univariate convenience constructor.
    pub fn univariate(id: impl Into<String>, label: Option<String>, values: Vec<f64>) -> Result<Self> {
        Self::new(id, label, 1, values)
    }

    pub fn from_rows(id: impl Into<String>, label: Option<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(SegalignError::DimensionMismatch {
                expected: dim,
                found: rows[bad].len(),
            });
        }
        Self::new(id, label, dim, rows.concat())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn set_label(&mut self, label: Option<String>) {
        self.label = label;
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// Samples of a segment as borrowed rows.
    pub fn segment_rows(&self, seg: Segment) -> Result<Vec<&[f64]>> {
        seg.check(self.len())?;
        Ok((seg.begin..=seg.end).map(|i| self.row(i)).collect())
    }

    /// Copy with the values replaced, keeping id and label.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.id.clone(), self.label.clone(), self.dim, values)
    }

    pub(crate) fn check_same_dim(&self, other: &Sequence) -> Result<()> {
        if self.dim != other.dim {
            return Err(SegalignError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

/// A contiguous run of samples, `begin..=end`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Segment {
    pub begin: usize,
    pub end: usize,
}

impl Segment {
    pub fn new(begin: usize, end: usize) -> Result<Self> {
        if end < begin {
            return Err(SegalignError::ZeroLength);
        }
        Ok(Self { begin, end })
    }

    /// Segment of `len` samples starting at `begin`.
    pub fn with_len(begin: usize, len: usize) -> Self {
        assert!(len >= 1, "segment length must be positive");
        Self {
            begin,
            end: begin + len - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.begin + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if self.end < self.begin || self.end >= n {
            return Err(SegalignError::SegmentOutOfBounds {
                begin: self.begin,
                end: self.end,
                len: n,
            });
        }
        Ok(())
    }
}

/// Checks that `segments` tile `0..n` without gaps or overlaps.
pub fn is_complete_segmentation(segments: &[Segment], n: usize) -> bool {
    let mut next = 0;
    for s in segments {
        if s.begin != next || s.end < s.begin {
            return false;
        }
        next = s.end + 1;
    }
    next == n
}
