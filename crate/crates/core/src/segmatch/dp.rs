use serde::{Deserialize, Serialize};

use super::bow::BowSequence;
use super::hist::{bin_distance, bounds_unchecked, BoundRef, HistMetric};
use crate::error::{Result, SegalignError};
use crate::metric::{PairwiseDistanceTable, SegmentCost};
use crate::sequence::{is_complete_segmentation, Norm, Segment, Sequence};
use crate::sphmm::{LogPsi, SegmentLengthPrior};

/// Settings shared by the exact and the pruned segmental matcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmConfig {
    /// Temperature dividing every segment distance.
    pub sigma: f64,
    /// Length prior over `{1..l_max}²`.
    pub psi: SegmentLengthPrior,
    pub l_min: usize,
    pub l_max: usize,
    pub metric: HistMetric,
    /// Normalize segment histograms to unit mass before comparing.
    pub normalized: bool,
    /// When set, each match also earns `sigma_g·(|X_t| + |Y_t|)`, scoring it
    /// against a deletion plus an insertion of the same segments.
    pub null_sigma_g: Option<f64>,
}

impl Default for SmConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            psi: SegmentLengthPrior::Uniform,
            l_min: 1,
            l_max: 10,
            metric: HistMetric::L1,
            normalized: true,
            null_sigma_g: None,
        }
    }
}

impl SmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(SegalignError::InvalidArgument("sigma must be positive".into()));
        }
        if self.l_min == 0 || self.l_min > self.l_max {
            return Err(SegalignError::InvalidArgument(format!(
                "need 1 <= l_min <= l_max, got l_min = {}, l_max = {}",
                self.l_min, self.l_max
            )));
        }
        if self.l_max > u16::MAX as usize {
            return Err(SegalignError::InvalidArgument("l_max too large".into()));
        }
        if let Some(g) = self.null_sigma_g {
            if !(g > 0.0 && g.is_finite()) {
                return Err(SegalignError::InvalidArgument("null sigma_g must be positive".into()));
            }
        }
        self.psi.validate(self.l_max, self.l_max).map_err(|e| SegalignError::InvalidArgument(e.to_string()))
    }
}

/// Equal-count segmentations of both sequences; `cuts_x[t]` matches `cuts_y[t]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationPair {
    pub cuts_x: Vec<Segment>,
    pub cuts_y: Vec<Segment>,
}

impl SegmentationPair {
    pub fn len(&self) -> usize {
        self.cuts_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts_x.is_empty()
    }

    pub fn validate(&self, n: usize, m: usize, l_min: usize, l_max: usize) -> Result<()> {
        if self.cuts_x.len() != self.cuts_y.len() {
            return Err(SegalignError::InvalidArgument("segment counts differ".into()));
        }
        if !is_complete_segmentation(&self.cuts_x, n) || !is_complete_segmentation(&self.cuts_y, m) {
            return Err(SegalignError::InvalidArgument("segmentation is not tight and complete".into()));
        }
        let bad = self.cuts_x.iter().chain(&self.cuts_y).find(|s| s.len() < l_min || s.len() > l_max);
        if let Some(s) = bad {
            return Err(SegalignError::InvalidArgument(format!(
                "segment of length {} outside [{l_min}, {l_max}]",
                s.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmResult {
    pub log_lik: f64,
    pub seg: SegmentationPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FastSmResult {
    pub log_lik: f64,
    pub seg: SegmentationPair,
    /// Cells closed at their bound value without expansion.
    pub cells_pruned: u64,
    /// Segment-pair scores computed.
    pub cells_evaluated: u64,
    /// The best path ran through a cell closed by the bound. The prefix up to
    /// that cell was then re-solved exactly and `log_lik` may differ from
    /// `path_log_lik`.
    pub sealed_on_path: bool,
    /// Exact score of `seg`.
    pub path_log_lik: f64,
}

/// Half-open 0-based segment-pair distance.
trait PairDistance {
    fn len_x(&self) -> usize;
    fn len_y(&self) -> usize;
    fn distance(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64;
}

struct CostDistance<'a, C>(&'a C);

impl<C: SegmentCost> PairDistance for CostDistance<'_, C> {
    fn len_x(&self) -> usize {
        self.0.len_x()
    }

    fn len_y(&self) -> usize {
        self.0.len_y()
    }

    fn distance(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        self.0.cost(x0, x1, y0, y1)
    }
}

struct BowPair<'a> {
    x: &'a BowSequence,
    y: &'a BowSequence,
    metric: HistMetric,
    normalized: bool,
}

impl BowPair<'_> {
    fn new<'a>(x: &'a BowSequence, y: &'a BowSequence, cfg: &SmConfig) -> Result<BowPair<'a>> {
        if x.bins() != y.bins() {
            return Err(SegalignError::BinMismatch(x.bins(), y.bins()));
        }
        Ok(BowPair {
            x,
            y,
            metric: cfg.metric,
            normalized: cfg.normalized,
        })
    }

    /// `(lower, upper)` over segments ending at `(a, b)` with lengths in
    /// `[l_min, l_max]`, or `None` when no bound exists.
    fn bounds_ending_at(&self, a: usize, b: usize, l_min: usize, l_max: usize, buf: &mut [Vec<f64>; 4]) -> Option<(f64, f64)> {
        if a < l_min || b < l_min {
            return None;
        }
        let (ix, iy) = (self.x.integral(), self.y.integral());
        ix.segment_into(a - l_min, a, &mut buf[0]);
        ix.segment_into(a - l_max.min(a), a, &mut buf[1]);
        iy.segment_into(b - l_min, b, &mut buf[2]);
        iy.segment_into(b - l_max.min(b), b, &mut buf[3]);
        let r = BoundRef {
            under_x: &buf[0],
            over_x: &buf[1],
            under_y: &buf[2],
            over_y: &buf[3],
        };
        bounds_unchecked(r, self.metric, self.normalized).ok()
    }
}

impl PairDistance for BowPair<'_> {
    fn len_x(&self) -> usize {
        self.x.len()
    }

    fn len_y(&self) -> usize {
        self.y.len()
    }

    fn distance(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> f64 {
        let (ix, iy) = (self.x.integral(), self.y.integral());
        let (sx, sy) = if self.normalized {
            let (mx, my) = (ix.mass(x0, x1), iy.mass(y0, y1));
            if !(mx > 0.0 && my > 0.0) {
                // an empty segment is treated as disjoint from any nonempty one
                // and identical to another empty one
                return if mx > 0.0 || my > 0.0 { disjoint_value(self.metric) } else { identical_value(self.metric) };
            }
            (mx, my)
        } else {
            (1.0, 1.0)
        };
        let (xa, xb, ya, yb) = (ix.row(x0), ix.row(x1), iy.row(y0), iy.row(y1));
        let mut total = 0.0;
        for h in 0..xa.len() {
            let x = (xb[h] - xa[h]) / sx;
            let y = (yb[h] - ya[h]) / sy;
            total += bin_distance(self.metric, x, y);
        }
        total
    }
}

fn identical_value(metric: HistMetric) -> f64 {
    match metric {
        HistMetric::L1 | HistMetric::ChiSq => 0.0,
        HistMetric::Intersection => -1.0,
    }
}

fn disjoint_value(metric: HistMetric) -> f64 {
    match metric {
        HistMetric::L1 | HistMetric::ChiSq => 2.0,
        HistMetric::Intersection => 0.0,
    }
}

/// Whether prefixes of lengths `i` and `j` admit the same number of segments.
#[inline]
fn prefix_feasible(i: usize, j: usize, l_min: usize, l_max: usize) -> bool {
    if i == 0 || j == 0 {
        return i == 0 && j == 0;
    }
    let lo = i.div_ceil(l_max).max(j.div_ceil(l_max));
    let hi = (i / l_min).min(j / l_min);
    lo <= hi
}

fn check_feasible(n: usize, m: usize, cfg: &SmConfig) -> Result<()> {
    let (lmin, lmax) = (cfg.l_min, cfg.l_max);
    if n.div_ceil(lmax) > m / lmin {
        return Err(SegalignError::Infeasible(format!(
            "ceil(n/l_max) = ceil({n}/{lmax}) = {} exceeds floor(m/l_min) = floor({m}/{lmin}) = {}",
            n.div_ceil(lmax),
            m / lmin
        )));
    }
    if m.div_ceil(lmax) > n / lmin {
        return Err(SegalignError::Infeasible(format!(
            "ceil(m/l_max) = ceil({m}/{lmax}) = {} exceeds floor(n/l_min) = floor({n}/{lmin}) = {}",
            m.div_ceil(lmax),
            n / lmin
        )));
    }
    if !prefix_feasible(n, m, lmin, lmax) {
        return Err(SegalignError::Infeasible(format!(
            "no common segment count for lengths {n} and {m} within [{lmin}, {lmax}]"
        )));
    }
    Ok(())
}

/// Score of one matched pair: `-D/sigma + ln Ψ(k, z)` plus the optional null term.
struct Scorer {
    inv_sigma: f64,
    lpsi: LogPsi,
    null_g: f64,
}

impl Scorer {
    fn new(cfg: &SmConfig) -> Self {
        Self {
            inv_sigma: 1.0 / cfg.sigma,
            lpsi: LogPsi::new(&cfg.psi, cfg.l_max, cfg.l_max),
            null_g: cfg.null_sigma_g.unwrap_or(0.0),
        }
    }

    #[inline]
    fn score(&self, d: f64, k: usize, z: usize) -> f64 {
        -d * self.inv_sigma + self.lpsi.get(k, z) + self.null_g * (k + z) as f64
    }
}

/// `(score, segment count, k, z)`; higher score, then fewer segments, then
/// longer final segments.
#[inline]
fn better(a: (f64, u32, usize, usize), b: (f64, u32, usize, usize)) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    if a.1 != b.1 {
        return a.1 < b.1;
    }
    (a.2, a.3) > (b.2, b.3)
}

const NONE: (f64, u32, usize, usize) = (f64::NEG_INFINITY, u32::MAX, 0, 0);

struct Table {
    cols: usize,
    val: Vec<f64>,
    cnt: Vec<u32>,
    bk: Vec<u16>,
    bz: Vec<u16>,
}

impl Table {
    fn new(n: usize, m: usize) -> Self {
        let size = (n + 1) * (m + 1);
        let mut t = Self {
            cols: m + 1,
            val: vec![f64::NEG_INFINITY; size],
            cnt: vec![0; size],
            bk: vec![0; size],
            bz: vec![0; size],
        };
        t.val[0] = 0.0;
        t
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    fn set(&mut self, i: usize, j: usize, best: (f64, u32, usize, usize)) {
        let c = self.idx(i, j);
        self.val[c] = best.0;
        self.cnt[c] = best.1;
        self.bk[c] = best.2 as u16;
        self.bz[c] = best.3 as u16;
    }

    /// Follows back-pointers from `(i, j)` while `keep` holds; returns the
    /// reversed segments and the cell where it stopped.
    fn trace(&self, mut i: usize, mut j: usize, keep: impl Fn(usize, usize) -> bool) -> (Vec<Segment>, Vec<Segment>, usize, usize) {
        let (mut sx, mut sy) = (Vec::new(), Vec::new());
        while (i > 0 || j > 0) && keep(i, j) {
            let c = self.idx(i, j);
            let (k, z) = (self.bk[c] as usize, self.bz[c] as usize);
            sx.push(Segment::with_len(i - k, k));
            sy.push(Segment::with_len(j - z, z));
            i -= k;
            j -= z;
        }
        (sx, sy, i, j)
    }
}

/// Exact bottom-up recursion over prefixes `0..=n_end` × `0..=m_end`.
fn solve_exact<P: PairDistance>(dist: &P, n_end: usize, m_end: usize, cfg: &SmConfig, scorer: &Scorer) -> Table {
    let (lmin, lmax) = (cfg.l_min, cfg.l_max);
    let mut t = Table::new(n_end, m_end);
    for i in lmin..=n_end {
        for j in lmin..=m_end {
            if !prefix_feasible(i, j, lmin, lmax) {
                continue;
            }
            let mut best = NONE;
            for k in lmin..=lmax.min(i) {
                for z in lmin..=lmax.min(j) {
                    let p = t.idx(i - k, j - z);
                    if t.val[p] == f64::NEG_INFINITY {
                        continue;
                    }
                    let s = t.val[p] + scorer.score(dist.distance(i - k, i, j - z, j), k, z);
                    let cand = (s, t.cnt[p] + 1, k, z);
                    if better(cand, best) {
                        best = cand;
                    }
                }
            }
            if best.0 > f64::NEG_INFINITY {
                t.set(i, j, best);
            }
        }
    }
    t
}

fn finish(sx: Vec<Segment>, sy: Vec<Segment>) -> SegmentationPair {
    let (mut cuts_x, mut cuts_y) = (sx, sy);
    cuts_x.reverse();
    cuts_y.reverse();
    SegmentationPair { cuts_x, cuts_y }
}

fn sm_generic<P: PairDistance>(dist: &P, cfg: &SmConfig) -> Result<SmResult> {
    cfg.validate()?;
    let (n, m) = (dist.len_x(), dist.len_y());
    check_feasible(n, m, cfg)?;
    let scorer = Scorer::new(cfg);
    let t = solve_exact(dist, n, m, cfg, &scorer);
    let c = t.idx(n, m);
    if t.val[c] == f64::NEG_INFINITY {
        return Err(SegalignError::Infeasible("every feasible segmentation has zero likelihood".into()));
    }
    let (sx, sy, _, _) = t.trace(n, m, |_, _| true);
    Ok(SmResult {
        log_lik: t.val[c],
        seg: finish(sx, sy),
    })
}

/// Exact segmental matching of two histogram sequences.
pub fn sm_match(x: &BowSequence, y: &BowSequence, cfg: &SmConfig) -> Result<SmResult> {
    sm_generic(&BowPair::new(x, y, cfg)?, cfg)
}

/// Exact segmental matching over any segment cost on raw samples.
pub fn sm_match_cost<C: SegmentCost>(cost: &C, cfg: &SmConfig) -> Result<SmResult> {
    sm_generic(&CostDistance(cost), cfg)
}

/// Exact segmental matching of raw sequences with the average pairwise distance.
pub fn sm_match_seq(x: &Sequence, y: &Sequence, cfg: &SmConfig, norm: Norm) -> Result<SmResult> {
    let table = PairwiseDistanceTable::build(x, y, norm)?;
    sm_match_cost(&table, cfg)
}

fn score_of<P: PairDistance>(dist: &P, seg: &SegmentationPair, scorer: &Scorer) -> f64 {
    seg.cuts_x
        .iter()
        .zip(&seg.cuts_y)
        .map(|(a, b)| scorer.score(dist.distance(a.begin, a.end + 1, b.begin, b.end + 1), a.len(), b.len()))
        .sum()
}

/// Score of a given segmentation pair of two histogram sequences.
pub fn segmentation_log_lik(x: &BowSequence, y: &BowSequence, seg: &SegmentationPair, cfg: &SmConfig) -> Result<f64> {
    cfg.validate()?;
    seg.validate(x.len(), y.len(), cfg.l_min, cfg.l_max)?;
    Ok(score_of(&BowPair::new(x, y, cfg)?, seg, &Scorer::new(cfg)))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Unvisited,
    InProgress,
    Done,
    Sealed,
}

struct Frame {
    i: usize,
    j: usize,
    wk: usize,
    wz: usize,
    next: usize,
    best: (f64, u32, usize, usize),
    best_d: f64,
    /// Score of the current candidate when already computed.
    pending: Option<(f64, f64)>,
    /// Running 2-D suffix maxima of the optimistic and pessimistic neighbour
    /// estimates over the candidate grid, which is walked from the longest
    /// segments down.
    opt: Vec<f64>,
    pes: Vec<f64>,
}

/// Top-down segmental matching from the sequence ends with memoization and,
/// optionally, bound-based sealing of unpromising predecessor cells.
pub fn fast_sm_match(x: &BowSequence, y: &BowSequence, cfg: &SmConfig, pruning: bool) -> Result<FastSmResult> {
    cfg.validate()?;
    let dist = BowPair::new(x, y, cfg)?;
    let (n, m) = (x.len(), y.len());
    check_feasible(n, m, cfg)?;
    let (lmin, lmax) = (cfg.l_min, cfg.l_max);
    let scorer = Scorer::new(cfg);
    let inv_sigma = scorer.inv_sigma;
    let (psi_hi, psi_lo) = (scorer.lpsi.max(), scorer.lpsi.min());
    let (null_hi, null_lo) = (scorer.null_g * (2 * lmax) as f64, scorer.null_g * (2 * lmin) as f64);

    let mut t = Table::new(n, m);
    let mut state = vec![Cell::Unvisited; (n + 1) * (m + 1)];
    // per-cell optimistic and pessimistic estimates of a path through it
    let mut est_opt = vec![f64::NEG_INFINITY; (n + 1) * (m + 1)];
    let mut est_pes = vec![f64::NEG_INFINITY; (n + 1) * (m + 1)];
    state[0] = Cell::Done;
    let mut buf: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; x.bins()]);
    let (mut evaluated, mut pruned) = (0u64, 0u64);

    let new_frame = |i: usize, j: usize| {
        let (wk, wz) = (lmax.min(i) + 1 - lmin, lmax.min(j) + 1 - lmin);
        Frame {
            i,
            j,
            wk,
            wz,
            next: 0,
            best: NONE,
            best_d: 0.0,
            pending: None,
            opt: if pruning { vec![f64::NEG_INFINITY; wk * wz] } else { Vec::new() },
            pes: if pruning { vec![f64::NEG_INFINITY; wk * wz] } else { Vec::new() },
        }
    };

    let root = t.idx(n, m);
    state[root] = Cell::InProgress;
    let mut stack = vec![new_frame(n, m)];
    while let Some(top) = stack.last_mut() {
        let (i, j) = (top.i, top.j);
        if top.next == top.wk * top.wz {
            let c = t.idx(i, j);
            if top.best.0 > f64::NEG_INFINITY {
                t.set(i, j, top.best);
                if pruning {
                    let anchor = t.val[c] + top.best_d * inv_sigma;
                    if let Some((lo, hi)) = dist.bounds_ending_at(i, j, lmin, lmax, &mut buf) {
                        est_opt[c] = anchor - lo * inv_sigma + psi_hi + null_hi;
                        est_pes[c] = anchor - hi * inv_sigma + psi_lo + null_lo;
                    }
                }
            }
            state[c] = Cell::Done;
            stack.pop();
            continue;
        }
        let (ki, zi) = (top.wk - 1 - top.next / top.wz, top.wz - 1 - top.next % top.wz);
        let (k, z) = (lmin + ki, lmin + zi);
        let (pi, pj) = (i - k, j - z);
        let p = t.idx(pi, pj);
        match state[p] {
            Cell::Unvisited => {
                if !prefix_feasible(pi, pj, lmin, lmax) {
                    state[p] = Cell::Done;
                    continue;
                }
                if pruning && top.best.0 > f64::NEG_INFINITY {
                    // neighbours at longer offsets are already closed
                    let g = ki * top.wz + zi;
                    let (mut bound, mut seal) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                    if ki + 1 < top.wk {
                        bound = top.opt[g + top.wz];
                        seal = top.pes[g + top.wz];
                    }
                    if zi + 1 < top.wz {
                        bound = bound.max(top.opt[g + 1]);
                        seal = seal.max(top.pes[g + 1]);
                    }
                    if bound > f64::NEG_INFINITY {
                        let d = dist.distance(pi, i, pj, j);
                        evaluated += 1;
                        let s = scorer.score(d, k, z);
                        top.pending = Some((s, d));
                        if bound + s < top.best.0 {
                            t.val[p] = seal;
                            t.cnt[p] = u32::MAX - 1;
                            state[p] = Cell::Sealed;
                            pruned += 1;
                            continue;
                        }
                    }
                }
                state[p] = Cell::InProgress;
                stack.push(new_frame(pi, pj));
            }
            Cell::InProgress => unreachable!("predecessors lie strictly below and left"),
            Cell::Done | Cell::Sealed => {
                if t.val[p] > f64::NEG_INFINITY {
                    let (s, d) = match top.pending.take() {
                        Some(v) => v,
                        None => {
                            let d = dist.distance(pi, i, pj, j);
                            evaluated += 1;
                            (scorer.score(d, k, z), d)
                        }
                    };
                    let cand = (t.val[p] + s, t.cnt[p].saturating_add(1), k, z);
                    if better(cand, top.best) {
                        top.best = cand;
                        top.best_d = d;
                    }
                }
                top.pending = None;
                if pruning {
                    let g = ki * top.wz + zi;
                    let (mut o, mut q) = if state[p] == Cell::Done { (est_opt[p], est_pes[p]) } else { (f64::NEG_INFINITY, f64::NEG_INFINITY) };
                    if ki + 1 < top.wk {
                        o = o.max(top.opt[g + top.wz]);
                        q = q.max(top.pes[g + top.wz]);
                    }
                    if zi + 1 < top.wz {
                        o = o.max(top.opt[g + 1]);
                        q = q.max(top.pes[g + 1]);
                    }
                    top.opt[g] = o;
                    top.pes[g] = q;
                }
                top.next += 1;
            }
        }
    }

    let log_lik = t.val[root];
    if log_lik == f64::NEG_INFINITY {
        return Err(SegalignError::Infeasible("every feasible segmentation has zero likelihood".into()));
    }
    let (mut sx, mut sy, si, sj) = t.trace(n, m, |a, b| state[a * (m + 1) + b] == Cell::Done);
    let sealed_on_path = si > 0 || sj > 0;
    if sealed_on_path {
        log::debug!("best path crosses the closed cell ({si}, {sj}); solving its prefix exactly");
        let sub = solve_exact(&dist, si, sj, cfg, &scorer);
        let (px, py, _, _) = sub.trace(si, sj, |_, _| true);
        sx.extend(px);
        sy.extend(py);
    }
    let seg = finish(sx, sy);
    let path_log_lik = if sealed_on_path { score_of(&dist, &seg, &scorer) } else { log_lik };
    Ok(FastSmResult {
        log_lik,
        seg,
        cells_pruned: pruned,
        cells_evaluated: evaluated,
        sealed_on_path,
        path_log_lik,
    })
}
