//! Set distances between segments.
//!
//! [`avg_pairwise_distance`] is the mean of all cross pairwise sample norms.
//! [`definite_segment_distance`] is its definite variant: points shared by both
//! sets (within `eq_tol`) are excluded from the cross sums, so the distance is
//! zero exactly when the two sets coincide.
//!
//! [`PairwiseDistanceTable`] is a summed-area table over all cross pairwise
//! norms of two sequences. It answers average-distance queries for any pair of
//! segments with four lookups.

use crate::error::{Result, SegalignError};
use crate::sequence::{Norm, Segment, Sequence};

/// Cost of matching `x[x0..x1]` with `y[y0..y1]` (half-open, 0-based).
///
/// Implementations must return finite, nonnegative values for in-range
/// arguments; the dynamic programs rely on that for exact pruning.
pub trait SegmentCost: Sync {
    fn len_x(&self) -> usize;
    fn len_y(&self) -> usize;
    fn cost(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64;

    /// Summed-area backing, when the cost is the plain average distance.
    /// Lets the dynamic programs use a fused scoring loop.
    fn as_summed_area(&self) -> Option<&PairwiseDistanceTable> {
        None
    }
}

fn check_sets(a: &[&[f64]], b: &[&[f64]]) -> Result<usize> {
    if a.is_empty() || b.is_empty() {
        return Err(SegalignError::EmptySet);
    }
    let dim = a[0].len();
    for s in a.iter().chain(b.iter()) {
        if s.len() != dim {
            return Err(SegalignError::DimensionMismatch {
                expected: dim,
                found: s.len(),
            });
        }
    }
    Ok(dim)
}

/// Mean pairwise norm between every element of `a` and every element of `b`.
pub fn avg_pairwise_distance(a: &[&[f64]], b: &[&[f64]], norm: Norm) -> Result<f64> {
    check_sets(a, b)?;
    let mut total = 0.0;
    for x in a {
        for y in b {
            total += norm.dist(x, y);
        }
    }
    Ok(total / (a.len() * b.len()) as f64)
}

fn dedup<'a>(set: &[&'a [f64]], norm: Norm, eq_tol: f64) -> Vec<&'a [f64]> {
    let mut out: Vec<&[f64]> = Vec::with_capacity(set.len());
    for p in set {
        if !out.iter().any(|q| norm.dist(p, q) <= eq_tol) {
            out.push(p);
        }
    }
    out
}

/// Definite set distance.
///
/// Both arguments are treated as sets: points within `eq_tol` of each other
/// are the same point. With disjoint sets this equals
/// [`avg_pairwise_distance`].
pub fn definite_segment_distance(
    a: &[&[f64]],
    b: &[&[f64]],
    norm: Norm,
    eq_tol: f64,
) -> Result<f64> {
    check_sets(a, b)?;
    if !(eq_tol >= 0.0) {
        return Err(SegalignError::InvalidArgument("eq_tol must be >= 0".into()));
    }
    let a = dedup(a, norm, eq_tol);
    let b = dedup(b, norm, eq_tol);
    let in_set = |p: &[f64], set: &[&[f64]]| set.iter().any(|q| norm.dist(p, q) <= eq_tol);
    let b_minus_a: Vec<&[f64]> = b.iter().copied().filter(|p| !in_set(p, &a)).collect();
    let a_minus_b: Vec<&[f64]> = a.iter().copied().filter(|p| !in_set(p, &b)).collect();

    let mut first = 0.0;
    for x in &a {
        for y in &b_minus_a {
            first += norm.dist(x, y);
        }
    }
    let mut second = 0.0;
    for x in &a_minus_b {
        for y in &b {
            second += norm.dist(x, y);
        }
    }
    let union = (a.len() + b_minus_a.len()) as f64;
    Ok((first / a.len() as f64 + second / b.len() as f64) / union)
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Summed-area table of cross pairwise norms between two sequences.
///
/// `table[i][j]` holds the sum of `‖x_a − y_b‖` over `a < i`, `b < j`, so row 0
/// and column 0 are zero. Construction is `O(nm)`; rectangle queries are
/// `O(1)`. Accumulation is compensated so that small rectangles far from the
/// origin do not lose precision to cancellation.
#[derive(Debug, Clone)]
pub struct PairwiseDistanceTable {
    n: usize,
    m: usize,
    norm: Norm,
    table: Vec<f64>,
}

impl PairwiseDistanceTable {
    pub fn build(x: &Sequence, y: &Sequence, norm: Norm) -> Result<Self> {
        x.check_same_dim(y)?;
        let (n, m) = (x.len(), y.len());
        let cols = m + 1;
        let mut table = vec![0.0; (n + 1) * cols];
        let mut col_acc = vec![Compensated::default(); m];
        for i in 0..n {
            let xi = x.row(i);
            let mut row_acc = Compensated::default();
            for j in 0..m {
                row_acc.add(norm.dist(xi, y.row(j)));
                // column j accumulates the row prefix sums of rows 0..=i
                let mut cell = col_acc[j];
                cell.add(row_acc.sum);
                cell.add(row_acc.comp);
                col_acc[j] = cell;
                table[(i + 1) * cols + j + 1] = cell.value();
            }
        }
        Ok(Self { n, m, norm, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.table
    }

    /// Raw table entry; `i ≤ n`, `j ≤ m`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.table[i * (self.m + 1) + j]
    }

    /// Sum of pairwise norms over `x[x0..x1] × y[y0..y1]`.
    #[inline]
    pub fn rect_sum(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        let c = self.m + 1;
        let t = &self.table;
        (t[x1 * c + y1] - t[x0 * c + y1]) - (t[x1 * c + y0] - t[x0 * c + y0])
    }

    /// Average pairwise distance between two segments.
    pub fn segment_distance(&self, sx: Segment, sy: Segment) -> Result<f64> {
        sx.check(self.n)?;
        sy.check(self.m)?;
        Ok(self.cost(sx.begin, sx.end + 1, sy.begin, sy.end + 1))
    }
}

impl SegmentCost for PairwiseDistanceTable {
    fn len_x(&self) -> usize {
        self.n
    }

    fn len_y(&self) -> usize {
        self.m
    }

    #[inline]
    fn cost(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        let s = self.rect_sum(x0, x1, y0, y1);
        // cancellation can leave a tiny negative residue on all-zero rectangles
        (s / ((x1 - x0) * (y1 - y0)) as f64).max(0.0)
    }

    fn as_summed_area(&self) -> Option<&PairwiseDistanceTable> {
        Some(self)
    }
}

/// Free-function form of [`PairwiseDistanceTable::build`].
pub fn build_distance_table(x: &Sequence, y: &Sequence, norm: Norm) -> Result<PairwiseDistanceTable> {
    PairwiseDistanceTable::build(x, y, norm)
}

/// Free-function form of [`PairwiseDistanceTable::segment_distance`].
pub fn segment_distance(table: &PairwiseDistanceTable, sx: Segment, sy: Segment) -> Result<f64> {
    table.segment_distance(sx, sy)
}

/// Segment cost that evaluates the definite distance directly.
///
/// Each query costs `O(k·z·d)`; meant for short sequences or data with exact
/// duplicate samples, where the definite distance differs from the average.
pub struct DefiniteCost<'a> {
    x: &'a Sequence,
    y: &'a Sequence,
    norm: Norm,
    eq_tol: f64,
}

impl<'a> DefiniteCost<'a> {
    pub fn new(x: &'a Sequence, y: &'a Sequence, norm: Norm, eq_tol: f64) -> Result<Self> {
        x.check_same_dim(y)?;
        if !(eq_tol >= 0.0) {
            return Err(SegalignError::InvalidArgument("eq_tol must be >= 0".into()));
        }
        Ok(Self { x, y, norm, eq_tol })
    }
}

impl SegmentCost for DefiniteCost<'_> {
    fn len_x(&self) -> usize {
        self.x.len()
    }

    fn len_y(&self) -> usize {
        self.y.len()
    }

    fn cost(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        let a: Vec<&[f64]> = (x0..x1).map(|i| self.x.row(i)).collect();
        let b: Vec<&[f64]> = (y0..y1).map(|j| self.y.row(j)).collect();
        definite_segment_distance(&a, &b, self.norm, self.eq_tol)
            .expect("segments are nonempty with matching dimensions")
    }
}
