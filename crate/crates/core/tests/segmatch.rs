mod common;

use common::*;
use rand::Rng;
use segalign::metric::DefiniteCost;
use segalign::segmatch::*;
use segalign::sphmm::SegmentLengthPrior;
use segalign::{Norm, SegalignError};

#[test]
fn distance_hand_values() {
    let x = [0.5, 0.5];
    let y = [1.0, 0.0];
    assert!((histogram_distance(&x, &y, HistMetric::L1, true).unwrap() - 1.0).abs() < 1e-12);
    assert!((histogram_distance(&x, &y, HistMetric::Intersection, true).unwrap() + 0.5).abs() < 1e-12);
    assert!((histogram_distance(&x, &y, HistMetric::ChiSq, true).unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn identical_normalized_histograms() {
    let x = [3.0, 1.0, 0.0, 4.0];
    assert_eq!(histogram_distance(&x, &x, HistMetric::L1, true).unwrap(), 0.0);
    assert!((histogram_distance(&x, &x, HistMetric::Intersection, true).unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(histogram_distance(&x, &x, HistMetric::ChiSq, true).unwrap(), 0.0);
}

#[test]
fn intersection_stays_in_unit_range() {
    let mut r = rng(3);
    for _ in 0..200 {
        let h = r.gen_range(1..9);
        let x: Vec<f64> = (0..h).map(|_| r.gen_range(0.0..5.0)).collect();
        let y: Vec<f64> = (0..h).map(|_| r.gen_range(0.0..5.0)).collect();
        let d = histogram_distance(&x, &y, HistMetric::Intersection, true).unwrap();
        assert!((-1.0 - 1e-12..=1e-12).contains(&d));
    }
}

#[test]
fn zero_mass_rejected_under_normalization() {
    let err = histogram_distance(&[0.0, 0.0], &[1.0, 0.0], HistMetric::L1, true).unwrap_err();
    assert!(matches!(err, SegalignError::ZeroMass(_)));
}

#[test]
fn integral_queries_match_direct_sums() {
    let mut r = rng(11);
    let frames: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| r.gen_range(0..6) as f64).collect()).collect();
    let ih = build_integral_histogram(&frames).unwrap();
    for b in 0..10 {
        for e in b + 1..=10 {
            assert_eq!(ih.segment(b, e), direct_segment(&frames, b, e));
        }
    }
}

#[test]
fn integral_single_frame_and_zero_frames() {
    let ih = build_integral_histogram(&[vec![2.0, 5.0]]).unwrap();
    assert_eq!(ih.segment(0, 1), vec![2.0, 5.0]);
    let z = build_integral_histogram(&vec![vec![0.0; 3]; 6]).unwrap();
    for b in 0..6 {
        for e in b..=6 {
            assert!(z.segment(b, e).iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn negative_counts_rejected() {
    let err = build_integral_histogram(&[vec![1.0, -1.0]]).unwrap_err();
    assert!(matches!(err, SegalignError::NegativeCount { frame: 0, bin: 1 }));
}

#[test]
fn bow_file_format() {
    let text = "#H=3\n1 0 2\n\n0 0 1\n";
    let b = BowSequence::read("f", None, text.as_bytes()).unwrap();
    assert_eq!(b.len(), 2);
    assert_eq!(b.segment(0, 2), vec![1.0, 0.0, 3.0]);
    assert!(BowSequence::read("f", None, "#H=2\n1 2 3\n".as_bytes()).is_err());
    assert!(BowSequence::read("f", None, "1 -2\n".as_bytes()).is_err());
}

const METRICS: [HistMetric; 3] = [HistMetric::L1, HistMetric::Intersection, HistMetric::ChiSq];

/// Anchored at `b` going forward, lengths in `[lo, hi]`.
fn inputs(fx: &[Vec<f64>], fy: &[Vec<f64>], bx: usize, by: usize, lo: usize, hi: usize) -> HistogramBoundInputs {
    HistogramBoundInputs {
        under_x: direct_segment(fx, bx, bx + lo),
        over_x: direct_segment(fx, bx, bx + hi),
        under_y: direct_segment(fy, by, by + lo),
        over_y: direct_segment(fy, by, by + hi),
    }
}

#[test]
fn bounds_sandwich_every_in_range_pair() {
    let mut r = rng(5);
    for trial in 0..60 {
        let h = r.gen_range(1..=8);
        let fx: Vec<Vec<f64>> = (0..8).map(|_| (0..h).map(|_| r.gen_range(0..5) as f64).collect()).collect();
        let fy: Vec<Vec<f64>> = (0..8).map(|_| (0..h).map(|_| r.gen_range(0..5) as f64).collect()).collect();
        let (bx, by) = (r.gen_range(0..3), r.gen_range(0..3));
        let inp = inputs(&fx, &fy, bx, by, 2, 5);
        for metric in METRICS {
            for normalized in [false, true] {
                let Ok((lo, hi)) = bound_distance(&inp, metric, normalized) else {
                    continue;
                };
                for k in 2..=5 {
                    for z in 2..=5 {
                        let sx = direct_segment(&fx, bx, bx + k);
                        let sy = direct_segment(&fy, by, by + z);
                        let Ok(d) = histogram_distance(&sx, &sy, metric, normalized) else {
                            continue;
                        };
                        assert!(lo <= d + 1e-9 && d <= hi + 1e-9, "trial {trial} {metric:?} {normalized}: {lo} <= {d} <= {hi}");
                    }
                }
            }
        }
    }
}

#[test]
fn widening_the_range_loosens_bounds() {
    let mut r = rng(6);
    for _ in 0..60 {
        let h = r.gen_range(1..=8);
        let fx: Vec<Vec<f64>> = (0..9).map(|_| (0..h).map(|_| 1.0 + r.gen_range(0..5) as f64).collect()).collect();
        let fy: Vec<Vec<f64>> = (0..9).map(|_| (0..h).map(|_| 1.0 + r.gen_range(0..5) as f64).collect()).collect();
        let inner = inputs(&fx, &fy, 0, 0, 3, 4);
        let outer = inputs(&fx, &fy, 0, 0, 2, 6);
        for metric in METRICS {
            for normalized in [false, true] {
                let (li, ui) = bound_distance(&inner, metric, normalized).unwrap();
                let (lo, uo) = bound_distance(&outer, metric, normalized).unwrap();
                assert!(lo <= li + 1e-12 && uo >= ui - 1e-12, "{metric:?} {normalized}");
            }
        }
    }
}

#[test]
fn degenerate_range_gives_exact_distance() {
    let mut r = rng(7);
    let fx: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| 1.0 + r.gen_range(0..5) as f64).collect()).collect();
    let fy: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| r.gen_range(0..5) as f64 + 0.5).collect()).collect();
    let inp = inputs(&fx, &fy, 1, 2, 3, 3);
    for metric in METRICS {
        for normalized in [false, true] {
            let (lo, hi) = bound_distance(&inp, metric, normalized).unwrap();
            let d = histogram_distance(&inp.under_x, &inp.under_y, metric, normalized).unwrap();
            assert!(close(lo, d, 1e-12) && close(hi, d, 1e-12), "{metric:?} {normalized}: {lo} {d} {hi}");
        }
    }
}

#[test]
fn sm_matches_brute_force_on_small_instances() {
    let mut r = rng(21);
    for _ in 0..80 {
        let (n, m) = (r.gen_range(1..=8), r.gen_range(1..=8));
        let lmax = r.gen_range(1..=3);
        let cfg = SmConfig {
            l_max: lmax,
            metric: METRICS[r.gen_range(0..3)],
            sigma: r.gen_range(0.5..2.0),
            ..SmConfig::default()
        };
        let x = random_bow(&mut r, n, 4, None);
        let y = random_bow(&mut r, m, 4, None);
        let psi = 1.0 / (lmax * lmax) as f64;
        let oracle = brute_force_sm(n, m, 1, lmax, |a, b, c, d| {
            let dist = histogram_distance(&x.segment(a, b), &y.segment(c, d), cfg.metric, true).unwrap();
            -dist / cfg.sigma + psi.ln()
        });
        match (oracle, sm_match(&x, &y, &cfg)) {
            (Some(v), Ok(res)) => {
                assert!(close(res.log_lik, v, 1e-9), "{} vs {v}", res.log_lik);
                res.seg.validate(n, m, 1, lmax).unwrap();
                let again = segmentation_log_lik(&x, &y, &res.seg, &cfg).unwrap();
                assert!(close(again, res.log_lik, 1e-9));
            }
            (None, Err(e)) => assert!(e.is_infeasibility()),
            (o, r) => panic!("oracle {o:?} vs {r:?}"),
        }
    }
}

#[test]
fn four_by_four_exhaustive() {
    let mut r = rng(4);
    let x = random_bow(&mut r, 4, 3, None);
    let y = random_bow(&mut r, 4, 3, None);
    let cfg = SmConfig {
        l_max: 2,
        ..SmConfig::default()
    };
    let oracle = brute_force_sm(4, 4, 1, 2, |a, b, c, d| {
        -histogram_distance(&x.segment(a, b), &y.segment(c, d), HistMetric::L1, true).unwrap() + 0.25f64.ln()
    })
    .unwrap();
    assert!(close(sm_match(&x, &y, &cfg).unwrap().log_lik, oracle, 1e-12));
}

#[test]
fn identical_raw_sequences_use_one_segment() {
    let x = seq(&[0.3, 1.2, -0.7, 2.2, 0.9]);
    let cost = DefiniteCost::new(&x, &x, Norm::L2, 0.0).unwrap();
    let cfg = SmConfig {
        l_max: 5,
        ..SmConfig::default()
    };
    let res = sm_match_cost(&cost, &cfg).unwrap();
    assert_eq!(res.seg.len(), 1);
    assert!(close(res.log_lik, (1.0f64 / 25.0).ln(), 1e-12));
}

#[test]
fn infeasible_counts_are_reported() {
    let mut r = rng(1);
    let x = random_bow(&mut r, 10, 3, None);
    let y = random_bow(&mut r, 2, 3, None);
    let cfg = SmConfig {
        l_max: 3,
        ..SmConfig::default()
    };
    let err = sm_match(&x, &y, &cfg).unwrap_err();
    assert!(err.is_infeasibility());
    assert!(err.to_string().contains("ceil(10/3)"), "{err}");
    assert!(fast_sm_match(&x, &y, &cfg, true).unwrap_err().is_infeasibility());
}

#[test]
fn fast_without_pruning_equals_exact() {
    let mut r = rng(31);
    for _ in 0..100 {
        let (n, m) = (r.gen_range(1..=20), r.gen_range(1..=20));
        let h = r.gen_range(1..=16);
        let lmax = r.gen_range(1..=6);
        let lmin = r.gen_range(1..=lmax.min(2));
        let cfg = SmConfig {
            l_min: lmin,
            l_max: lmax,
            metric: METRICS[r.gen_range(0..3)],
            normalized: r.gen_bool(0.7),
            ..SmConfig::default()
        };
        let x = random_bow(&mut r, n, h, None);
        let y = random_bow(&mut r, m, h, None);
        match (sm_match(&x, &y, &cfg), fast_sm_match(&x, &y, &cfg, false)) {
            (Ok(a), Ok(b)) => {
                assert!(close(a.log_lik, b.log_lik, 1e-9));
                assert_eq!(a.seg, b.seg);
                assert_eq!(b.cells_pruned, 0);
                assert!(!b.sealed_on_path);
            }
            (Err(a), Err(b)) => assert!(a.is_infeasibility() && b.is_infeasibility()),
            (a, b) => panic!("{a:?} vs {b:?}"),
        }
    }
}

#[test]
fn fixed_length_pruning_is_lossless() {
    let mut r = rng(41);
    for _ in 0..40 {
        let l = r.gen_range(1..=4);
        let count = r.gen_range(1..=6);
        let x = random_bow(&mut r, l * count, 6, None);
        let y = random_bow(&mut r, l * count, 6, None);
        let cfg = SmConfig {
            l_min: l,
            l_max: l,
            ..SmConfig::default()
        };
        let a = sm_match(&x, &y, &cfg).unwrap();
        let b = fast_sm_match(&x, &y, &cfg, true).unwrap();
        assert_eq!(a.log_lik, b.log_lik);
    }
}

#[test]
fn pruned_runs_stay_consistent() {
    let mut r = rng(51);
    for _ in 0..60 {
        let (n, m) = (r.gen_range(8..=30), r.gen_range(8..=30));
        let cfg = SmConfig {
            l_min: 1,
            l_max: 5,
            psi: SegmentLengthPrior::Uniform,
            ..SmConfig::default()
        };
        let x = random_bow(&mut r, n, 8, None);
        let y = random_bow(&mut r, m, 8, None);
        let exact = sm_match(&x, &y, &cfg).unwrap();
        let fast = fast_sm_match(&x, &y, &cfg, true).unwrap();
        fast.seg.validate(n, m, 1, 5).unwrap();
        let score = segmentation_log_lik(&x, &y, &fast.seg, &cfg).unwrap();
        assert!(close(score, fast.path_log_lik, 1e-9));
        assert!(fast.path_log_lik <= exact.log_lik + 1e-9);
        if !fast.sealed_on_path {
            assert!(fast.log_lik <= exact.log_lik + 1e-9);
            assert!(close(fast.log_lik, fast.path_log_lik, 1e-9));
        }
    }
}
