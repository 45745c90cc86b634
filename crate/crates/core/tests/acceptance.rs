//! Acceptance run. Prints one PASS or FAIL line per criterion; detail lines
//! are indented. Select a subset with `ACCEPTANCE_ONLY=2,9`.

mod common;

use std::hint::black_box;
use std::time::Instant;

use common::*;
use rand::Rng;
use segalign::bench::*;
use segalign::learn::*;
use segalign::metric::*;
use segalign::segmatch::*;
use segalign::sphmm::*;
use segalign::{Norm, Segment, Sequence};

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome { pass, summary: summary.into() }
}

fn detail(s: impl AsRef<str>) {
    println!("    {}", s.as_ref());
}

fn within(v: f64, target: f64, rel: f64) -> bool {
    (v - target).abs() <= rel * target
}

fn synth1() -> Outcome {
    const REF_DTW: f64 = 8258.8;
    const REF_SPHMM: [(usize, f64); 4] = [(50, 7625.5), (100, 5487.1), (150, 5458.5), (200, 5356.0)];
    let model_at = |l: usize| SphmmModel::default().with_lengths(l, l);

    let mut ordered = true;
    let mut first: Option<(Vec<Synth1Pair>, Vec<f64>)> = None;
    for seed in 1..=3u64 {
        if !ordered {
            detail(format!("seed {seed}: not run, ordering already violated"));
            continue;
        }
        let pairs = gen_synthetic1(100, seed).unwrap();
        let t = Instant::now();
        let sweep = synth1_dtw_sweep(&pairs, &DtwConfig::default()).unwrap();
        let errs = synth1_sphmm_errors(&pairs, &model_at(150)).unwrap();
        let sp = mean(&errs);
        let ok = sp < sweep.best_mean;
        detail(format!(
            "seed {seed}: dtw best {:.1} at g={} (reference band {}), sphmm l=150 {:.1} (reference band {}), ordering {} ({:.0}s)",
            sweep.best_mean,
            sweep.best_penalty,
            if within(sweep.best_mean, REF_DTW, 0.2) { "in" } else { "out" },
            sp,
            if within(sp, REF_SPHMM[2].1, 0.2) { "in" } else { "out" },
            if ok { "holds" } else { "violated" },
            t.elapsed().as_secs_f64()
        ));
        ordered &= ok;
        if first.is_none() {
            first = Some((pairs, errs));
        }
    }

    // trend over segment lengths on the first ten pairs of seed 1
    let (pairs, errs150) = first.expect("seed 1 always runs");
    let subset = &pairs[..10];
    let mut trend = Vec::new();
    for (l, reference) in REF_SPHMM {
        let e = if l == 150 { mean(&errs150[..10]) } else { mean(&synth1_sphmm_errors(subset, &model_at(l)).unwrap()) };
        detail(format!("trend l={l}: {e:.1} on 10 pairs (reference {reference} on 100)"));
        trend.push(e);
    }
    let non_increasing = trend.windows(2).all(|w| w[1] <= w[0]);
    let flattening = (trend[3] - trend[1]).abs() <= (trend[1] - trend[0]).abs();
    detail(format!("trend non-increasing: {non_increasing}, flattening past 100: {flattening}"));
    outcome(
        ordered && non_increasing && flattening,
        format!("synthetic I alignment error, sphmm < dtw on every seed: {ordered}"),
    )
}

fn synth2() -> Outcome {
    let data = gen_synthetic2(50, 1, &Synth2Config::default()).unwrap();
    let t = Instant::now();
    let sp = crossval(&data.sequences, 5, &Scorer::Sphmm(SphmmModel::default()), 3).unwrap();
    let dtw = crossval(&data.sequences, 5, &Scorer::Dtw(DtwConfig::default()), 3).unwrap();
    detail(format!("sphmm {:.3} ± {:.3}, dtw {:.3} ± {:.3} ({:.0}s)", sp.mean, sp.std, dtw.mean, dtw.std, t.elapsed().as_secs_f64()));
    outcome(
        sp.mean >= 0.95 && dtw.mean <= 0.75,
        format!("synthetic II 5-fold 1-NN: sphmm {:.3} (need >= 0.95), dtw {:.3} (need <= 0.75)", sp.mean, dtw.mean),
    )
}

fn random_set(r: &mut impl Rng, d: usize) -> Vec<Vec<f64>> {
    let n = r.gen_range(1..=6);
    (0..n).map(|_| (0..d).map(|_| r.gen_range(-3..=3) as f64 * 0.5).collect()).collect()
}

fn same_set(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a.iter().all(|p| b.contains(p)) && b.iter().all(|p| a.contains(p))
}

fn metric_axioms() -> Outcome {
    let mut r = rng(2024);
    let mut violations = 0;
    let mut equal_pairs = 0;
    for t in 0..1000 {
        let d = 1 + t % 3;
        let norm = if t % 2 == 0 { Norm::L2 } else { Norm::L1 };
        let a = random_set(&mut r, d);
        let b = if t % 5 == 0 {
            let mut b = a.clone();
            b.reverse();
            b.push(a[0].clone());
            b
        } else {
            random_set(&mut r, d)
        };
        let c = random_set(&mut r, d);
        let (ra, rb, rc): (Vec<&[f64]>, Vec<&[f64]>, Vec<&[f64]>) =
            (a.iter().map(Vec::as_slice).collect(), b.iter().map(Vec::as_slice).collect(), c.iter().map(Vec::as_slice).collect());
        let avg = |p: &[&[f64]], q: &[&[f64]]| avg_pairwise_distance(p, q, norm).unwrap();
        let def = |p: &[&[f64]], q: &[&[f64]]| definite_segment_distance(p, q, norm, 0.0).unwrap();
        for f in [&avg as &dyn Fn(&[&[f64]], &[&[f64]]) -> f64, &def] {
            let (ab, ba, bc, ac) = (f(&ra, &rb), f(&rb, &ra), f(&rb, &rc), f(&ra, &rc));
            let ok = ab >= 0.0 && bc >= 0.0 && ac >= 0.0 && (ab - ba).abs() <= 1e-9 && ac <= ab + bc + 1e-9;
            violations += usize::from(!ok);
        }
        let v = def(&ra, &rb);
        if same_set(&a, &b) {
            equal_pairs += 1;
            violations += usize::from(v != 0.0);
        } else {
            violations += usize::from(v <= 0.0);
        }
    }
    detail(format!("{equal_pairs} of the triples had set-equal A and B"));
    outcome(
        violations == 0,
        format!("metric axioms on 1000 triples (symmetry, nonnegativity, triangle for both distances; definiteness for the definite one): {violations} violations"),
    )
}

fn step_lengths(path: &AlignmentPath) -> Vec<Step> {
    path.steps
        .iter()
        .map(|s| match (s.sx, s.sy) {
            (Some(a), Some(b)) => Step::M(a.len(), b.len()),
            (Some(a), None) => Step::I(a.len()),
            (None, Some(b)) => Step::D(b.len()),
            (None, None) => unreachable!("empty step"),
        })
        .collect()
}

fn dp_oracles() -> Outcome {
    const CASES: usize = 200;
    let mut r = rng(4040);
    let mut bad = [0usize; 3];
    let metrics = [HistMetric::L1, HistMetric::Intersection, HistMetric::ChiSq];
    for case in 0..CASES {
        let (n, m) = (r.gen_range(1..=6), r.gen_range(1..=6));
        let d = 1 + case % 2;
        let x = random_seq(&mut r, n, d);
        let y = random_seq(&mut r, m, d);
        let (lx, ly) = (r.gen_range(1..=3), r.gen_range(1..=3));
        let mut model = random_model(&mut r, lx, ly);
        if case % 7 == 0 {
            model.l_min = 2.min(lx).min(ly);
        }
        let ok = match (brute_force_sphmm(&x, &y, &model), viterbi_align(&x, &y, &model)) {
            (Some((want, _)), Ok(got)) => {
                let (raw, null) = path_scores(&x, &y, &model, &step_lengths(&got.path));
                close(got.log_odds, want, 1e-9) && close(raw - null, want, 1e-9) && got.path.validate(n, m).is_ok()
            }
            (None, Err(e)) => e.is_infeasibility(),
            _ => false,
        };
        bad[0] += usize::from(!ok);

        let lmax = r.gen_range(1..=3);
        let cfg = SmConfig {
            l_max: lmax,
            metric: metrics[case % 3],
            sigma: r.gen_range(0.5..2.0),
            ..SmConfig::default()
        };
        let bx = random_bow(&mut r, n, 4, None);
        let by = random_bow(&mut r, m, 4, None);
        let log_psi = (1.0 / (lmax * lmax) as f64).ln();
        let oracle = brute_force_sm(n, m, 1, lmax, |a, b, c, e| {
            -histogram_distance(&bx.segment(a, b), &by.segment(c, e), cfg.metric, true).unwrap() / cfg.sigma + log_psi
        });
        let ok = match (oracle, sm_match(&bx, &by, &cfg)) {
            (Some(v), Ok(res)) => close(res.log_lik, v, 1e-9),
            (None, Err(e)) => e.is_infeasibility(),
            _ => false,
        };
        bad[1] += usize::from(!ok);

        let g = [0.0, 0.5, 3.0][case % 3];
        let norm = if case % 2 == 0 { Norm::L2 } else { Norm::L1 };
        let got = dtw_align(&x, &y, &DtwConfig { norm, gap_penalty: g, band: None }).unwrap();
        bad[2] += usize::from(!close(got.distance, brute_dtw(&x, &y, g, norm), 1e-9));
    }
    detail(format!("mismatches over {CASES} instances each: sphmm {}, sm {}, dtw {}", bad[0], bad[1], bad[2]));
    outcome(bad == [0; 3], format!("dp oracle equivalence on {} instances: {} mismatches", 3 * CASES, bad.iter().sum::<usize>()))
}

fn bound_sandwich() -> Outcome {
    const LO: usize = 2;
    const HI: usize = 5;
    let mut r = rng(5050);
    let (mut checked, mut violations, mut skipped) = (0u64, 0u64, 0u64);
    for _ in 0..100 {
        let h = r.gen_range(1..=8);
        let frames = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..8).map(|_| (0..h).map(|_| r.gen_range(0..5) as f64).collect()).collect()
        };
        let fx = frames(&mut r);
        let fy = frames(&mut r);
        for bx in 0..=8 - HI {
            for by in 0..=8 - HI {
                let inp = HistogramBoundInputs {
                    under_x: direct_segment(&fx, bx, bx + LO),
                    over_x: direct_segment(&fx, bx, bx + HI),
                    under_y: direct_segment(&fy, by, by + LO),
                    over_y: direct_segment(&fy, by, by + HI),
                };
                for metric in [HistMetric::L1, HistMetric::Intersection, HistMetric::ChiSq] {
                    for normalized in [false, true] {
                        let Ok((lo, hi)) = bound_distance(&inp, metric, normalized) else {
                            skipped += 1;
                            continue;
                        };
                        for k in LO..=HI {
                            for z in LO..=HI {
                                let sx = direct_segment(&fx, bx, bx + k);
                                let sy = direct_segment(&fy, by, by + z);
                                let Ok(d) = histogram_distance(&sx, &sy, metric, normalized) else {
                                    continue;
                                };
                                checked += 1;
                                violations += u64::from(!(lo <= d + 1e-9 && d <= hi + 1e-9));
                            }
                        }
                    }
                }
            }
        }
    }
    detail(format!("{checked} distances checked; {skipped} anchor ranges had a zero-mass histogram and no bounds"));
    outcome(violations == 0, format!("bound sandwich on 100 BoW pairs, all metrics and (k, z): {violations} violations"))
}

fn fast_sm() -> Outcome {
    let mut r = rng(6060);
    let mut noprune_bad = 0;
    for _ in 0..100 {
        let (n, m) = (r.gen_range(1..=20), r.gen_range(1..=20));
        let h = r.gen_range(1..=16);
        let cfg = SmConfig {
            l_max: r.gen_range(1..=6),
            ..SmConfig::default()
        };
        let x = random_bow(&mut r, n, h, None);
        let y = random_bow(&mut r, m, h, None);
        let ok = match (sm_match(&x, &y, &cfg), fast_sm_match(&x, &y, &cfg, false)) {
            (Ok(a), Ok(b)) => a.log_lik == b.log_lik && a.seg == b.seg,
            (Err(a), Err(b)) => a.is_infeasibility() && b.is_infeasibility(),
            _ => false,
        };
        noprune_bad += usize::from(!ok);
    }

    let suite = gen_bow_suite(9, &BowSuiteConfig::default()).unwrap();
    let cfg = SmConfig { l_max: 20, ..SmConfig::default() };
    let nearest = |scores: &[Vec<f64>]| -> Vec<usize> {
        scores
            .iter()
            .enumerate()
            .map(|(q, row)| {
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for (i, &s) in row.iter().enumerate() {
                    if i != q && s > best.0 {
                        best = (s, i);
                    }
                }
                best.1
            })
            .collect()
    };
    let all_pairs = |f: &mut dyn FnMut(&BowSequence, &BowSequence) -> f64| -> Vec<Vec<f64>> {
        suite.iter().enumerate().map(|(q, x)| suite.iter().enumerate().map(|(i, y)| if i == q { 0.0 } else { f(x, y) }).collect()).collect()
    };
    let t = Instant::now();
    let exact = all_pairs(&mut |x, y| sm_match(x, y, &cfg).unwrap().log_lik);
    let t_exact = t.elapsed().as_secs_f64();
    let (mut pruned, mut evaluated) = (0u64, 0u64);
    let t = Instant::now();
    let fast = all_pairs(&mut |x, y| {
        let res = fast_sm_match(x, y, &cfg, true).unwrap();
        pruned += res.cells_pruned;
        evaluated += res.cells_evaluated;
        res.log_lik
    });
    let t_fast = t.elapsed().as_secs_f64();
    let (ne, nf) = (nearest(&exact), nearest(&fast));
    let agree = ne.iter().zip(&nf).filter(|(a, b)| suite[**a].label() == suite[**b].label()).count();
    let agreement = agree as f64 / suite.len() as f64;
    let speedup = t_exact / t_fast;
    detail(format!(
        "{} queries, agreement {agree}/{}, cells pruned {pruned}, evaluated {evaluated}, sm {t_exact:.2}s vs fast {t_fast:.2}s",
        suite.len(),
        suite.len()
    ));
    detail(format!("pruning off vs sm on 100 random pairs: {noprune_bad} mismatches"));
    outcome(
        noprune_bad == 0 && agreement >= 0.95 && pruned > 0 && speedup >= 1.5,
        format!("fast-sm parity at l_max=20: agreement {:.1}%, speedup {speedup:.2}x", 100.0 * agreement),
    )
}

fn learning() -> Outcome {
    let cfg = LearnConfig::default();
    let mut r = rng(7070);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c = TransitionCounts {
            c_mm: r.gen_range(1.0..40.0),
            c_gm: r.gen_range(0.5..10.0),
            c_op: r.gen_range(0.5..10.0),
            c_ex: r.gen_range(0.5..10.0),
            ..TransitionCounts::default()
        };
        let eta = r.gen_range(0.3..0.8);
        let (d, e, t) = tune_params(&c, (0.1, 0.1, 0.1), eta, &cfg).unwrap();
        let (gd, ge, gt) = grid_oracle(&c, eta, &cfg);
        worst = worst.max((d - gd).abs()).max((e - ge).abs()).max((t - gt).abs());
    }
    detail(format!("tune vs grid: worst parameter gap {worst:.2e} over 20 count vectors"));

    let pairs = toy_pairs();
    let refs: Vec<(&Sequence, &Sequence)> = pairs.iter().map(|(a, b)| (a, b)).collect();
    let mut em_ok = true;
    for eta_policy in [EtaPolicy::Fixed(0.6), EtaPolicy::Mle] {
        let lc = LearnConfig { eta_policy, ..LearnConfig::default() };
        let out = em_train(&refs, &SphmmModel::default().with_lengths(5, 5), &lc).unwrap();
        let monotone = out.log.windows(2).all(|w| w[1].total_log_odds >= w[0].total_log_odds - 1e-6);
        let feas = out.log.iter().all(|it| feasible(it.delta, it.epsilon, it.tau, out.model.eta, &lc));
        detail(format!(
            "em {eta_policy:?}: {} iterations, converged {}, monotone {monotone}, feasible {feas}",
            out.log.len(),
            out.converged
        ));
        em_ok &= out.converged && out.log.len() <= 25 && monotone && feas;
    }
    outcome(worst <= 1e-4 && em_ok, format!("learning: tune within {worst:.1e} of grid, em feasible and monotone: {em_ok}"))
}

fn scaling() -> Outcome {
    let model = SphmmModel::default().with_lengths(8, 8);
    let mut r = rng(8080);
    let opts = AlignOptions { prune: false };
    let cells = |n: usize, r: &mut rand_chacha::ChaCha8Rng| {
        let t = PairwiseDistanceTable::build(&random_seq(r, n, 1), &random_seq(r, n, 1), Norm::L2).unwrap();
        viterbi_align_cost(&t, &model, opts).unwrap().cells_evaluated as f64
    };
    let (c1, c2) = (cells(100, &mut r), cells(200, &mut r));
    let growth = c2 / c1;
    detail(format!("cells evaluated: n=100 {c1}, n=200 {c2}, growth {growth:.2}x"));

    const N: usize = 200;
    const QUERIES: usize = 100_000;
    let table = PairwiseDistanceTable::build(&random_seq(&mut r, N, 1), &random_seq(&mut r, N, 1), Norm::L2).unwrap();
    let queries = |len: usize, r: &mut rand_chacha::ChaCha8Rng| -> Vec<(Segment, Segment)> {
        (0..QUERIES)
            .map(|_| {
                let (a, b) = (r.gen_range(0..=N - len), r.gen_range(0..=N - len));
                (Segment::new(a, a + len - 1).unwrap(), Segment::new(b, b + len - 1).unwrap())
            })
            .collect()
    };
    let (short, long) = (queries(1, &mut r), queries(N / 2, &mut r));
    let time = |qs: &[(Segment, Segment)]| {
        let t = Instant::now();
        let mut acc = 0.0;
        for &(a, b) in qs {
            acc += segment_distance(&table, black_box(a), black_box(b)).unwrap();
        }
        black_box(acc);
        t.elapsed().as_secs_f64()
    };
    // interleaved so that host load drifts hit both lengths alike
    let (mut ts, mut tl) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..15 {
        ts = ts.min(time(&short));
        tl = tl.min(time(&long));
    }
    let ratio = tl / ts;
    detail(format!("segment_distance: length 1 {:.1} ns/query, length {} {:.1} ns/query", 1e9 * ts / QUERIES as f64, N / 2, 1e9 * tl / QUERIES as f64));
    outcome(
        growth <= 4.5 && (ratio - 1.0).abs() <= 0.2,
        format!("complexity: doubling n grows cells {growth:.2}x, long/short query time {ratio:.2}"),
    )
}

fn noise_robustness() -> Outcome {
    let w = wilcoxon_signed_rank(&[2.0, 3.0, 4.0, 0.0], &[1.0; 4]).unwrap();
    let z = (1.5 - 5.0) / (4.0f64 * 5.0 * 9.0 / 24.0).sqrt();
    let wilcoxon_ok = (w.r_plus, w.r_minus, w.t) == (8.5, 1.5, 1.5) && (w.z - z).abs() < 1e-12;
    let den = (45.0f64 * 46.0 * 91.0 / 24.0).sqrt();
    detail(format!("wilcoxon hand-ranked case: R+ {} R- {} z {:.4}; N=45 denominator {den:.4}", w.r_plus, w.r_minus, w.z));

    let data = gen_synthetic2(25, 1, &Synth2Config::default()).unwrap();
    let reps = noisy_replicas(&data, &NoiseSpec::impulse(1.0, 0), 3, 11).unwrap();
    let model = SphmmModel::default();
    let mut acc = Vec::new();
    for (name, sc) in [
        ("sphmm", Scorer::Sphmm(model.clone())),
        ("phmm", Scorer::Phmm(model.clone())),
        ("dtw", Scorer::Dtw(DtwConfig::default())),
    ] {
        let t = Instant::now();
        let per: Vec<f64> = reps.iter().map(|d| crossval(&d.sequences, 5, &sc, 3).unwrap().mean).collect();
        detail(format!("{name}: replicas {per:.3?}, mean {:.3} ({:.0}s)", mean(&per), t.elapsed().as_secs_f64()));
        acc.push(mean(&per));
    }
    let ordered = acc[0] >= acc[1] && acc[1] >= acc[2] && acc[0] > acc[2];
    outcome(
        ordered && wilcoxon_ok,
        format!("impulse noise robustness: sphmm {:.3} >= phmm {:.3} >= dtw {:.3}, strict sphmm > dtw: {}", acc[0], acc[1], acc[2], acc[0] > acc[2]),
    )
}

fn main() {
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, synth1),
        (2, synth2),
        (3, metric_axioms),
        (4, dp_oracles),
        (5, bound_sandwich),
        (6, fast_sm),
        (7, learning),
        (8, scaling),
        (9, noise_robustness),
    ];
    let mut passed = 0;
    let mut run = 0;
    for (id, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let o = f();
        run += 1;
        passed += usize::from(o.pass);
        println!("{} {id}: {}", if o.pass { "PASS" } else { "FAIL" }, o.summary);
    }
    println!("acceptance: {passed}/{run} criteria passed");
}
