use serde::{Deserialize, Serialize};

use crate::error::{Result, SegalignError};
use crate::sequence::{is_complete_segmentation, Segment};

/// Hidden state of one alignment step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    M,
    I,
    D,
}

/// One step of a segmental alignment. `sx` is absent on D steps and `sy` on I steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignmentStep {
    pub state: State,
    pub sx: Option<Segment>,
    pub sy: Option<Segment>,
}

impl AlignmentStep {
    pub fn matched(sx: Segment, sy: Segment) -> Self {
        Self {
            state: State::M,
            sx: Some(sx),
            sy: Some(sy),
        }
    }

    pub fn insertion(sx: Segment) -> Self {
        Self {
            state: State::I,
            sx: Some(sx),
            sy: None,
        }
    }

    pub fn deletion(sy: Segment) -> Self {
        Self {
            state: State::D,
            sx: None,
            sy: Some(sy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignmentPath {
    pub steps: Vec<AlignmentStep>,
}

impl AlignmentPath {
    pub fn new(steps: Vec<AlignmentStep>) -> Self {
        Self { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn segmentation_x(&self) -> Vec<Segment> {
        self.steps.iter().filter_map(|s| s.sx).collect()
    }

    pub fn segmentation_y(&self) -> Vec<Segment> {
        self.steps.iter().filter_map(|s| s.sy).collect()
    }

    pub fn states(&self) -> Vec<State> {
        self.steps.iter().map(|s| s.state).collect()
    }

    /// Checks step shapes, monotonicity and complete tight segmentations of
    /// both sequences.
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let bad = |msg: &str| Err(SegalignError::InvalidArgument(format!("invalid path: {msg}")));
        for step in &self.steps {
            let ok = match step.state {
                State::M => step.sx.is_some() && step.sy.is_some(),
                State::I => step.sx.is_some() && step.sy.is_none(),
                State::D => step.sx.is_none() && step.sy.is_some(),
            };
            if !ok {
                return bad("step segments do not match its state");
            }
        }
        if !is_complete_segmentation(&self.segmentation_x(), n) {
            return bad("X segmentation is not complete and tight");
        }
        if !is_complete_segmentation(&self.segmentation_y(), m) {
            return bad("Y segmentation is not complete and tight");
        }
        Ok(())
    }

    /// Per-sample correspondences `x index -> y position`, 0-based, by affine
    /// interpolation inside each matched segment pair. Gap samples take the
    /// boundary of the nearest match.
    pub fn correspondences(&self, n: usize) -> Result<Vec<f64>> {
        let mut corr = vec![f64::NAN; n];
        let mut anchors: Vec<(usize, f64)> = Vec::new();
        for step in &self.steps {
            if let (Some(sx), Some(sy)) = (step.sx, step.sy) {
                if sx.end >= n {
                    return Err(SegalignError::SegmentOutOfBounds {
                        begin: sx.begin,
                        end: sx.end,
                        len: n,
                    });
                }
                let (a, b) = (sx.begin as f64, sx.end as f64);
                let (c, d) = (sy.begin as f64, sy.end as f64);
                for (t, slot) in corr.iter_mut().enumerate().take(sx.end + 1).skip(sx.begin) {
                    *slot = if sx.begin == sx.end {
                        0.5 * (c + d)
                    } else {
                        c + (t as f64 - a) * (d - c) / (b - a)
                    };
                }
                anchors.push((sx.begin, corr[sx.begin]));
                anchors.push((sx.end, corr[sx.end]));
            }
        }
        if anchors.is_empty() {
            return Err(SegalignError::EmptyInput("path has no matched segments".into()));
        }
        for (t, slot) in corr.iter_mut().enumerate() {
            if slot.is_nan() {
                let &(_, v) = anchors
                    .iter()
                    .min_by_key(|(pos, _)| pos.abs_diff(t))
                    .expect("anchors nonempty");
                *slot = v;
            }
        }
        Ok(corr)
    }
}

/// Decoded alignment with its score decomposition and work counters.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub log_odds: f64,
    pub raw_loglik: f64,
    pub null_loglik: f64,
    pub path: AlignmentPath,
    /// Segment-pair and gap candidates whose score was computed.
    pub cells_evaluated: u64,
    /// Candidates skipped by the distance-free upper bound.
    pub candidates_pruned: u64,
}

#[derive(Serialize, Deserialize)]
struct StepDoc {
    state: State,
    x_begin: Option<usize>,
    x_end: Option<usize>,
    y_begin: Option<usize>,
    y_end: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct ResultDoc {
    schema: u32,
    log_odds: f64,
    raw_loglik: f64,
    null_loglik: f64,
    steps: Vec<StepDoc>,
    cells_evaluated: u64,
    candidates_pruned: u64,
}

impl AlignmentResult {
    /// JSON document with 1-based inclusive indices.
    pub fn to_json(&self) -> Result<String> {
        let steps = self
            .path
            .steps
            .iter()
            .map(|s| StepDoc {
                state: s.state,
                x_begin: s.sx.map(|g| g.begin + 1),
                x_end: s.sx.map(|g| g.end + 1),
                y_begin: s.sy.map(|g| g.begin + 1),
                y_end: s.sy.map(|g| g.end + 1),
            })
            .collect();
        Ok(serde_json::to_string_pretty(&ResultDoc {
            schema: 1,
            log_odds: self.log_odds,
            raw_loglik: self.raw_loglik,
            null_loglik: self.null_loglik,
            steps,
            cells_evaluated: self.cells_evaluated,
            candidates_pruned: self.candidates_pruned,
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ResultDoc = serde_json::from_str(s)?;
        let seg = |b: Option<usize>, e: Option<usize>| -> Result<Option<Segment>> {
            match (b, e) {
                (Some(b), Some(e)) if b >= 1 => Ok(Some(Segment::new(b - 1, e.wrapping_sub(1))?)),
                (None, None) => Ok(None),
                _ => Err(SegalignError::InvalidArgument("malformed step".into())),
            }
        };
        let steps = doc
            .steps
            .iter()
            .map(|s| {
                Ok(AlignmentStep {
                    state: s.state,
                    sx: seg(s.x_begin, s.x_end)?,
                    sy: seg(s.y_begin, s.y_end)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            log_odds: doc.log_odds,
            raw_loglik: doc.raw_loglik,
            null_loglik: doc.null_loglik,
            path: AlignmentPath::new(steps),
            cells_evaluated: doc.cells_evaluated,
            candidates_pruned: doc.candidates_pruned,
        })
    }
}
