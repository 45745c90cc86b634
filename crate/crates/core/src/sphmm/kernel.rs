//! Shared segmental lattice for the Viterbi and marginal recursions.
//!
//! Cells are indexed by the number of consumed samples `(i, j)`. A match ending
//! at `(i, j)` covers `x[i-k..i] × y[j-z..j]`; gaps consume one sequence only.
//! I→D and D→I transitions do not exist. The start behaves as a match state at
//! `(0, 0)` with value 0.

use std::collections::VecDeque;

use super::model::LogPsi;
use crate::metric::SegmentCost;

pub(crate) const FROM_M: u8 = 0;
pub(crate) const FROM_I: u8 = 1;
pub(crate) const FROM_D: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Combine {
    Max,
    LogSumExp,
}

#[derive(Debug, Clone)]
pub(crate) struct KernelParams {
    pub t_mm: f64,
    pub t_gm: f64,
    pub t_op: f64,
    pub t_ex: f64,
    /// Added per sample covered by a matched pair.
    pub match_bonus: f64,
    /// Added per gapped sample.
    pub gap_per_sample: f64,
    pub combine: Combine,
    pub l_min: usize,
    pub l_max_x: usize,
    pub l_max_y: usize,
    pub band: Option<f64>,
    pub prune: bool,
}

pub(crate) struct Lattice {
    pub n: usize,
    pub m: usize,
    cols: usize,
    pub vm: Vec<f64>,
    pub vi: Vec<f64>,
    pub vd: Vec<f64>,
    pub m_k: Vec<u32>,
    pub m_z: Vec<u32>,
    pub i_k: Vec<u32>,
    pub d_z: Vec<u32>,
    pub pb_from: Vec<u8>,
    pub gi_from: Vec<u8>,
    pub gd_from: Vec<u8>,
    pub cells_evaluated: u64,
    pub candidates_pruned: u64,
}

impl Lattice {
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }
}

#[inline]
fn combine3(mode: Combine, a: f64, b: f64, c: f64) -> (f64, u8) {
    let mut best = a;
    let mut from = FROM_M;
    if b > best {
        best = b;
        from = FROM_I;
    }
    if c > best {
        best = c;
        from = FROM_D;
    }
    match mode {
        Combine::Max => (best, from),
        Combine::LogSumExp => {
            if best == f64::NEG_INFINITY {
                return (best, from);
            }
            let s = (a - best).exp() + (b - best).exp() + (c - best).exp();
            (best + s.ln(), from)
        }
    }
}

#[inline]
fn combine2(mode: Combine, a: f64, b: f64, from_b: u8) -> (f64, u8) {
    let (best, from) = if b > a { (b, from_b) } else { (a, FROM_M) };
    match mode {
        Combine::Max => (best, from),
        Combine::LogSumExp => {
            if best == f64::NEG_INFINITY {
                return (best, from);
            }
            (best + ((a - best).exp() + (b - best).exp()).ln(), from)
        }
    }
}

/// Value at the end cell over the three states, with the index of the winner.
pub(crate) fn final_value(lat: &Lattice, mode: Combine) -> (f64, u8) {
    let e = lat.idx(lat.n, lat.m);
    combine3(mode, lat.vm[e], lat.vi[e], lat.vd[e])
}

/// Maximum of a slice, `-inf` when empty. Four independent lanes keep the
/// reduction vectorizable.
#[inline]
fn lane_max(v: &[f64]) -> f64 {
    let mut acc = [f64::NEG_INFINITY; 4];
    let chunks = v.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for l in 0..4 {
            acc[l] = if c[l] > acc[l] { c[l] } else { acc[l] };
        }
    }
    let mut m = acc[0].max(acc[1]).max(acc[2].max(acc[3]));
    for &x in rest {
        m = m.max(x);
    }
    m
}

struct SatRow<'a> {
    hi: &'a [f64],
    lo: &'a [f64],
    full: f64,
    inv_k: f64,
    inv_z: &'a [f64],
    prev: &'a [f64],
    add: &'a [f64],
    kb: f64,
}

/// Scores a row of match candidates from the summed-area table into `v` and
/// returns the row maximum.
#[inline(always)]
fn score_row_generic(row: &SatRow, v: &mut [f64]) -> f64 {
    #[inline(always)]
    fn one(row: &SatRow, h: f64, l: f64, iz: f64, p: f64, a: f64) -> f64 {
        let d = (row.full - (h - l)) * row.inv_k * iz;
        let d = if d < 0.0 { 0.0 } else { d };
        p + (a + row.kb) - d
    }
    let len = v.len();
    let n4 = len / 4 * 4;
    let mut acc = [f64::NEG_INFINITY; 4];
    let (head, tail) = v.split_at_mut(n4);
    let lanes = head
        .chunks_exact_mut(4)
        .zip(row.hi.chunks_exact(4))
        .zip(row.lo.chunks_exact(4))
        .zip(row.inv_z.chunks_exact(4))
        .zip(row.prev.chunks_exact(4))
        .zip(row.add.chunks_exact(4));
    for (((((o, h), l), z), p), a) in lanes {
        for q in 0..4 {
            let x = one(row, h[q], l[q], z[q], p[q], a[q]);
            o[q] = x;
            acc[q] = if x > acc[q] { x } else { acc[q] };
        }
    }
    let mut m = acc[0].max(acc[1]).max(acc[2].max(acc[3]));
    for (t, o) in tail.iter_mut().enumerate() {
        let u = n4 + t;
        *o = one(row, row.hi[u], row.lo[u], row.inv_z[u], row.prev[u], row.add[u]);
        m = m.max(*o);
    }
    m
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn score_row_avx2(row: &SatRow, v: &mut [f64]) -> f64 {
    score_row_generic(row, v)
}

fn avx2_available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

#[inline]
fn score_row(row: &SatRow, v: &mut [f64], avx2: bool) -> f64 {
    #[cfg(target_arch = "x86_64")]
    if avx2 {
        // SAFETY: the caller checked for AVX2 support at runtime.
        return unsafe { score_row_avx2(row, v) };
    }
    let _ = avx2;
    score_row_generic(row, v)
}

/// Sliding maximum of `w[c]` over `c ∈ [j - hi, j - lo] ∩ [0, len)` for each `j`.
fn window_max(w: &[f64], lo: usize, hi: usize, out: &mut [f64]) {
    let mut dq: VecDeque<usize> = VecDeque::with_capacity(hi - lo + 2);
    let len = w.len();
    let mut next = 0usize;
    for (j, slot) in out.iter_mut().enumerate() {
        if j >= lo {
            let upper = j - lo;
            while next <= upper && next < len {
                while let Some(&b) = dq.back() {
                    if w[b] <= w[next] {
                        dq.pop_back();
                    } else {
                        break;
                    }
                }
                dq.push_back(next);
                next += 1;
            }
        }
        let lower = j.saturating_sub(hi);
        while let Some(&f) = dq.front() {
            if f < lower {
                dq.pop_front();
            } else {
                break;
            }
        }
        *slot = if j >= lo {
            dq.front().map_or(f64::NEG_INFINITY, |&f| w[f])
        } else {
            f64::NEG_INFINITY
        };
    }
}

pub(crate) fn run<C: SegmentCost>(cost: &C, lpsi: &LogPsi, p: &KernelParams) -> Lattice {
    let n = cost.len_x();
    let m = cost.len_y();
    let cols = m + 1;
    let size = (n + 1) * cols;
    let ninf = f64::NEG_INFINITY;
    let mut lat = Lattice {
        n,
        m,
        cols,
        vm: vec![ninf; size],
        vi: vec![ninf; size],
        vd: vec![ninf; size],
        m_k: vec![0; size],
        m_z: vec![0; size],
        i_k: vec![0; size],
        d_z: vec![0; size],
        pb_from: vec![FROM_M; size],
        gi_from: vec![FROM_M; size],
        gd_from: vec![FROM_M; size],
        cells_evaluated: 0,
        candidates_pruned: 0,
    };
    // predecessor values for a match, an insertion and a deletion starting at a cell
    let mut pb = vec![ninf; size];
    let mut gi = vec![ninf; size];
    let mut gd = vec![ninf; size];
    // per-row window maxima of pb[r][c] - bonus·c, for the row bound
    let mut sw = if p.prune { vec![ninf; size] } else { Vec::new() };
    let mut wrow = vec![ninf; cols];

    let (lmin, lmx, lmy) = (p.l_min, p.l_max_x, p.l_max_y);
    let bonus = p.match_bonus;
    let admissible = |i: usize, j: usize| match p.band {
        None => true,
        Some(b) => ((i * m) as f64 - (j * n) as f64).abs() <= b * n as f64,
    };
    let mut rows: Vec<(f64, usize)> = Vec::with_capacity(lmx);
    // rinv[t] = 1 / (lmy - t); add[k][t] = ln Ψ(k, lmy - t) + bonus·(lmy - t)
    let rinv: Vec<f64> = (0..lmy).map(|t| 1.0 / (lmy - t) as f64).collect();
    let mut add = vec![ninf; (lmx + 1) * lmy];
    for k in 1..=lmx {
        for t in 0..lmy {
            let z = lmy - t;
            add[k * lmy + t] = lpsi.get(k, z) + bonus * z as f64;
        }
    }
    let sat = cost.as_summed_area();
    let avx2 = avx2_available();
    let mut vbuf = vec![0.0; lmy];

    for i in 0..=n {
        for j in 0..=m {
            let idx = i * cols + j;
            if i == 0 && j == 0 {
                lat.vm[idx] = 0.0;
            } else if admissible(i, j) {
                // match
                if i >= lmin && j >= lmin {
                    let kmax = lmx.min(i);
                    let zmax = lmy.min(j);
                    let mut best = ninf;
                    let (mut bk, mut bz) = (0usize, 0usize);
                    rows.clear();
                    for k in lmin..=kmax {
                        let bound = if p.prune {
                            sw[(i - k) * cols + j] + bonus * (j + k) as f64 + lpsi.row_max(k)
                        } else {
                            0.0
                        };
                        if bound > ninf {
                            rows.push((bound, k));
                        }
                    }
                    if p.prune {
                        rows.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
                    }
                    for (ri, &(bound, k)) in rows.iter().enumerate() {
                        if p.prune && bound + 1e-9 * (1.0 + best.abs()) < best {
                            let left: usize = rows[ri..].len();
                            lat.candidates_pruned += (left * (zmax + 1 - lmin)) as u64;
                            break;
                        }
                        let r = i - k;
                        let t0 = lmy - zmax;
                        let len = zmax + 1 - lmin;
                        let c0 = j - zmax;
                        let prow = &pb[r * cols + c0..r * cols + c0 + len];
                        let ad = &add[k * lmy + t0..k * lmy + t0 + len];
                        let kb = bonus * k as f64;
                        let v = &mut vbuf[..len];
                        let rmax = match sat {
                            Some(t) => {
                                let raw = t.raw();
                                let row = SatRow {
                                    hi: &raw[i * cols + c0..i * cols + c0 + len],
                                    lo: &raw[r * cols + c0..r * cols + c0 + len],
                                    full: raw[i * cols + j] - raw[r * cols + j],
                                    inv_k: 1.0 / k as f64,
                                    inv_z: &rinv[t0..t0 + len],
                                    prev: prow,
                                    add: ad,
                                    kb,
                                };
                                score_row(&row, v, avx2)
                            }
                            None => {
                                for u in 0..len {
                                    v[u] = prow[u] + (ad[u] + kb) - cost.cost(r, i, c0 + u, j);
                                }
                                lane_max(v)
                            }
                        };
                        lat.cells_evaluated += len as u64;
                        if rmax == ninf || rmax < best {
                            continue;
                        }
                        // first hit is the longest y segment
                        let u = v.iter().position(|&x| x == rmax).expect("row max present");
                        let z = zmax - u;
                        if rmax > best || (k, z) > (bk, bz) {
                            best = rmax;
                            bk = k;
                            bz = z;
                        }
                    }
                    lat.vm[idx] = best;
                    lat.m_k[idx] = bk as u32;
                    lat.m_z[idx] = bz as u32;
                }
                // insertion: consumes x only
                if i >= lmin {
                    let mut best = ninf;
                    let mut bk = 0usize;
                    for k in lmin..=lmx.min(i) {
                        let g = gi[(i - k) * cols + j];
                        if g == ninf {
                            continue;
                        }
                        lat.cells_evaluated += 1;
                        let v = g + p.gap_per_sample * k as f64;
                        if v >= best {
                            best = v;
                            bk = k;
                        }
                    }
                    lat.vi[idx] = best;
                    lat.i_k[idx] = bk as u32;
                }
                // deletion: consumes y only
                if j >= lmin {
                    let mut best = ninf;
                    let mut bz = 0usize;
                    for z in lmin..=lmy.min(j) {
                        let g = gd[idx - z];
                        if g == ninf {
                            continue;
                        }
                        lat.cells_evaluated += 1;
                        let v = g + p.gap_per_sample * z as f64;
                        if v >= best {
                            best = v;
                            bz = z;
                        }
                    }
                    lat.vd[idx] = best;
                    lat.d_z[idx] = bz as u32;
                }
            }
            let (vm, vi, vd) = (lat.vm[idx], lat.vi[idx], lat.vd[idx]);
            let (v, f) = combine3(p.combine, vm + p.t_mm, vi + p.t_gm, vd + p.t_gm);
            pb[idx] = v;
            lat.pb_from[idx] = f;
            let (v, f) = combine2(p.combine, vm + p.t_op, vi + p.t_ex, FROM_I);
            gi[idx] = v;
            lat.gi_from[idx] = f;
            let (v, f) = combine2(p.combine, vm + p.t_op, vd + p.t_ex, FROM_D);
            gd[idx] = v;
            lat.gd_from[idx] = f;
        }
        if p.prune {
            for (c, w) in wrow.iter_mut().enumerate() {
                *w = pb[i * cols + c] - bonus * c as f64;
            }
            window_max(&wrow, lmin, lmy, &mut sw[i * cols..i * cols + cols]);
        }
    }
    lat
}
