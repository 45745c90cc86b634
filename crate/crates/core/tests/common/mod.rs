//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segalign::segmatch::BowSequence;
use segalign::learn::{objective, LearnConfig, TransitionCounts};
use segalign::sphmm::{SegmentLengthPrior, SphmmModel};
use segalign::{Norm, Sequence};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

pub fn seq(v: &[f64]) -> Sequence {
    Sequence::univariate("s", None, v.to_vec()).unwrap()
}

pub fn random_seq(r: &mut ChaCha8Rng, n: usize, d: usize) -> Sequence {
    let v = (0..n * d).map(|_| r.gen_range(-3.0..3.0)).collect();
    Sequence::new("r", None, d, v).unwrap()
}

pub fn random_bow(r: &mut ChaCha8Rng, n: usize, h: usize, label: Option<&str>) -> BowSequence {
    let frames = (0..n)
        .map(|_| {
            let mut f: Vec<f64> = (0..h).map(|_| r.gen_range(0..4) as f64).collect();
            // keep every frame nonempty
            let b = r.gen_range(0..h);
            f[b] += 1.0;
            f
        })
        .collect();
    BowSequence::new("b", label.map(str::to_string), frames).unwrap()
}

/// Direct double sum of sample norms, divided by the pair count.
pub fn avg_dist(a: &[&[f64]], b: &[&[f64]], norm: Norm) -> f64 {
    let mut s = 0.0;
    for x in a {
        for y in b {
            s += norm.dist(x, y);
        }
    }
    s / (a.len() * b.len()) as f64
}

/// Every composition of `n` into parts within `[lo, hi]`.
pub fn compositions(n: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in lo..=hi.min(n) {
        for mut rest in compositions(n - first, lo, hi) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Brute-force maximum over equal-count segmentation pairs of the summed
/// per-pair scores; `score(x0, x1, y0, y1)` uses half-open ranges.
pub fn brute_force_sm(n: usize, m: usize, lo: usize, hi: usize, score: impl Fn(usize, usize, usize, usize) -> f64) -> Option<f64> {
    let cx = compositions(n, lo, hi);
    let cy = compositions(m, lo, hi);
    let mut best: Option<f64> = None;
    for a in &cx {
        for b in cy.iter().filter(|b| b.len() == a.len()) {
            let (mut i, mut j, mut s) = (0, 0, 0.0);
            for (k, z) in a.iter().zip(b) {
                s += score(i, i + k, j, j + z);
                i += k;
                j += z;
            }
            best = Some(best.map_or(s, |v: f64| v.max(s)));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    M(usize, usize),
    I(usize),
    D(usize),
}

/// Every segmental alignment of lengths `n` and `m` with no direct switch
/// between the two gap states.
pub fn sphmm_paths(n: usize, m: usize, lmin: usize, lmx: usize, lmy: usize) -> Vec<Vec<Step>> {
    fn rec(i: usize, j: usize, prev: u8, p: (usize, usize, usize, usize, usize), cur: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
        let (n, m, lmin, lmx, lmy) = p;
        if i == n && j == m {
            out.push(cur.clone());
            return;
        }
        for k in lmin..=lmx.min(n - i) {
            for z in lmin..=lmy.min(m - j) {
                cur.push(Step::M(k, z));
                rec(i + k, j + z, 0, p, cur, out);
                cur.pop();
            }
        }
        if prev != 2 {
            for k in lmin..=lmx.min(n - i) {
                cur.push(Step::I(k));
                rec(i + k, j, 1, p, cur, out);
                cur.pop();
            }
        }
        if prev != 1 {
            for z in lmin..=lmy.min(m - j) {
                cur.push(Step::D(z));
                rec(i, j + z, 2, p, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(0, 0, 0, (n, m, lmin, lmx, lmy), &mut Vec::new(), &mut out);
    out
}

/// Raw log-likelihood and null log-likelihood of one path, computed from
/// scratch with direct double sums.
pub fn path_scores(x: &Sequence, y: &Sequence, model: &SphmmModel, path: &[Step]) -> (f64, f64) {
    let rows = |s: &Sequence, a: usize, b: usize| (a..b).map(|t| s.row(t).to_vec()).collect::<Vec<_>>();
    let (mut i, mut j) = (0, 0);
    let (mut lx, mut ly) = (0, 0);
    let mut prev = 'M';
    let mut raw = 0.0;
    for s in path {
        let (cur, ki, zj) = match *s {
            Step::M(k, z) => ('M', k, z),
            Step::I(k) => ('I', k, 0),
            Step::D(z) => ('D', 0, z),
        };
        raw += match (prev, cur) {
            ('M', 'M') => (1.0 - 2.0 * model.delta - model.tau).ln(),
            (_, 'M') => (1.0 - model.epsilon - model.tau).ln(),
            ('M', _) => model.delta.ln(),
            _ => model.epsilon.ln(),
        };
        if cur == 'M' {
            let a = rows(x, i, i + ki);
            let b = rows(y, j, j + zj);
            let ar: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
            let br: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
            let psi = model.psi.prob(ki, zj, model.l_max_x, model.l_max_y).unwrap();
            raw += -avg_dist(&ar, &br, model.norm) + psi.ln();
        } else {
            raw -= model.sigma_g * (ki + zj) as f64;
        }
        if ki > 0 {
            lx += 1;
        }
        if zj > 0 {
            ly += 1;
        }
        i += ki;
        j += zj;
        prev = cur;
    }
    let q = (1.0 - model.eta).ln();
    let null = 2.0 * model.eta.ln() + (lx + ly) as f64 * q - model.sigma_g * (x.len() + y.len()) as f64;
    (raw, null)
}

/// Exhaustive maximum of the log-odds, with its maximizing path.
pub fn brute_force_sphmm(x: &Sequence, y: &Sequence, model: &SphmmModel) -> Option<(f64, Vec<Step>)> {
    let mut best: Option<(f64, Vec<Step>)> = None;
    for p in sphmm_paths(x.len(), y.len(), model.l_min, model.l_max_x, model.l_max_y) {
        let (raw, null) = path_scores(x, y, model, &p);
        let v = raw - null;
        if best.as_ref().map_or(true, |b| v > b.0) {
            best = Some((v, p));
        }
    }
    best
}

pub fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn direct_segment(frames: &[Vec<f64>], b: usize, e: usize) -> Vec<f64> {
    let mut out = vec![0.0; frames[0].len()];
    for f in &frames[b..e] {
        for (o, v) in out.iter_mut().zip(f) {
            *o += v;
        }
    }
    out
}

pub fn random_model(r: &mut ChaCha8Rng, lmx: usize, lmy: usize) -> SphmmModel {
    let tau = r.gen_range(0.001..0.1);
    let delta = r.gen_range(0.01..(1.0 - tau) / 2.0 - 0.01);
    let epsilon = r.gen_range(0.01..1.0 - tau - 0.01);
    let psi = if r.gen_bool(0.5) {
        SegmentLengthPrior::Uniform
    } else {
        let raw: Vec<Vec<f64>> = (0..lmx).map(|_| (0..lmy).map(|_| r.gen_range(0.05..1.0)).collect()).collect();
        let s: f64 = raw.iter().flatten().sum();
        SegmentLengthPrior::Table {
            table: raw.iter().map(|row| row.iter().map(|v| v / s).collect()).collect(),
        }
    };
    SphmmModel {
        delta,
        epsilon,
        tau,
        eta: r.gen_range(0.05..0.95),
        sigma_g: r.gen_range(0.1..3.0),
        psi,
        l_max_x: lmx,
        l_max_y: lmy,
        l_min: 1,
        band: None,
        norm: if r.gen_bool(0.5) { Norm::L2 } else { Norm::L1 },
    }
}

/// The four pairs of linear constraints on the transition parameters.
pub fn feasible(delta: f64, epsilon: f64, tau: f64, eta: f64, cfg: &LearnConfig) -> bool {
    let q = 1.0 - eta;
    let a = 1.0 - 2.0 * delta - tau;
    let b = 1.0 - epsilon - tau;
    let gap_ok = |v: f64| v > cfg.z_g * q && v < q;
    q * q < a && a < cfg.z_m * q * q && q * q < b && b < cfg.z_m * q * q && gap_ok(delta) && gap_ok(epsilon) && tau > 0.0 && tau < 1.0
}

/// Zooming grid search over the feasible region.
pub fn grid_oracle(c: &TransitionCounts, eta: f64, cfg: &LearnConfig) -> (f64, f64, f64) {
    let q = 1.0 - eta;
    let mut lo = [0.0, 0.0, 0.0];
    let mut hi = [q, q, 1.0];
    let mut best = (f64::NEG_INFINITY, [0.0; 3]);
    const N: usize = 21;
    for _ in 0..14 {
        let step: Vec<f64> = (0..3).map(|d| (hi[d] - lo[d]) / (N - 1) as f64).collect();
        for a in 0..N {
            for b in 0..N {
                for t in 0..N {
                    let p = [lo[0] + a as f64 * step[0], lo[1] + b as f64 * step[1], lo[2] + t as f64 * step[2]];
                    if !feasible(p[0], p[1], p[2], eta, cfg) {
                        continue;
                    }
                    let v = objective(c, p[0], p[1], p[2]);
                    if v > best.0 {
                        best = (v, p);
                    }
                }
            }
        }
        for d in 0..3 {
            lo[d] = (best.1[d] - 2.0 * step[d]).max(0.0);
            hi[d] = best.1[d] + 2.0 * step[d];
        }
    }
    (best.1[0], best.1[1], best.1[2])
}

pub fn toy_pairs() -> Vec<(Sequence, Sequence)> {
    let mut r = rng(12);
    (0..10)
        .map(|_| {
            // a shared step pattern, stretched differently on each side
            let levels: Vec<f64> = (0..5).map(|_| r.gen_range(-3.0..3.0)).collect();
            let make = |r: &mut rand_chacha::ChaCha8Rng| {
                let mut v = Vec::new();
                for l in &levels {
                    for _ in 0..r.gen_range(2..6) {
                        v.push(l + r.gen_range(-0.2..0.2));
                    }
                }
                seq(&v)
            };
            (make(&mut r), make(&mut r))
        })
        .collect()
}

/// Minimum over every monotone path, diagonal steps free, others penalized.
pub fn brute_dtw(x: &Sequence, y: &Sequence, g: f64, norm: Norm) -> f64 {
    fn rec(i: usize, j: usize, x: &Sequence, y: &Sequence, g: f64, norm: Norm) -> f64 {
        let here = norm.dist(x.row(i), y.row(j));
        if i == 0 && j == 0 {
            return here;
        }
        let mut best = f64::INFINITY;
        if i > 0 && j > 0 {
            best = best.min(rec(i - 1, j - 1, x, y, g, norm));
        }
        if i > 0 {
            best = best.min(rec(i - 1, j, x, y, g, norm) + g);
        }
        if j > 0 {
            best = best.min(rec(i, j - 1, x, y, g, norm) + g);
        }
        best + here
    }
    rec(x.len() - 1, y.len() - 1, x, y, g, norm)
}
