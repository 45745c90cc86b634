use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use segalign::bench::{
    compare_results, crossval, dtw_align, filter, format_bow, format_sequence_csv, gap_sweep, gen_bow_suite,
    gen_synthetic1_with, gen_synthetic2, inject_noise, knn_classify, load_bow_index, load_ucr, mean, noisy_replicas,
    write_ucr, BowScorer, BowSuiteConfig, ConfusionMatrix, Dataset, DtwConfig, FilterKind, Labeled, NoiseKind,
    NoiseSpec, ResultEntry, ResultsFile, Scorer, Similarity, Synth1Config, Synth2Config,
};
use segalign::learn::{em_train, same_class_pairs, EtaPolicy, LearnConfig};
use segalign::marginal::marginal_score;
use segalign::segmatch::{fast_sm_match, sm_match, BowSequence, HistMetric, SegmentationPair, SmConfig};
use segalign::sequence::{Segment, Sequence};
use segalign::sphmm::{phmm_align, viterbi_align, SphmmModel};
use serde_json::json;

use crate::{
    AlignArgs, ClassifyArgs, Command, FilterArg, MetricKind, NoiseArgs, NoiseKindArg, ReportArgs, ScoreOpts,
    ScorerKind, SynthArgs, SynthKind, TrainArgs,
};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Align(a) => align(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify(a),
        Command::Synth(a) => synth(a),
        Command::Noise(a) => noise(a),
        Command::Report(a) => report(a),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

fn load_model(opts: &ScoreOpts) -> Result<SphmmModel> {
    let mut model = match &opts.model {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading model {}", p.display()))?;
            SphmmModel::from_json(&text).with_context(|| format!("parsing model {}", p.display()))?
        }
        None => {
            let d = SphmmModel::default();
            eprintln!(
                "no --model given; using defaults delta={} epsilon={} tau={} eta={} sigma_g={} psi=uniform l_max={}",
                d.delta, d.epsilon, d.tau, d.eta, d.sigma_g, d.l_max_x
            );
            d
        }
    };
    if let Some(l) = opts.lmax {
        model = model.with_lengths(l, l);
    }
    if let Some(l) = opts.lmin {
        model.l_min = l;
    }
    if opts.band.is_some() {
        model.band = opts.band;
    }
    model.validate()?;
    Ok(model)
}

fn sm_config(opts: &ScoreOpts) -> Result<SmConfig> {
    let mut cfg = SmConfig {
        sigma: opts.sigma,
        metric: match opts.metric {
            MetricKind::L1 => HistMetric::L1,
            MetricKind::Intersection => HistMetric::Intersection,
            MetricKind::Chisq => HistMetric::ChiSq,
        },
        normalized: !opts.raw_counts,
        ..SmConfig::default()
    };
    if let Some(l) = opts.lmax {
        cfg.l_max = l;
    }
    if let Some(l) = opts.lmin {
        cfg.l_min = l;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dtw_config(opts: &ScoreOpts) -> DtwConfig {
    DtwConfig {
        gap_penalty: opts.gap_penalty,
        band: opts.band,
        ..DtwConfig::default()
    }
}

fn read_bow(path: &Path) -> Result<BowSequence> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(BowSequence::read(id, None, std::io::BufReader::new(f))?)
}

fn segmentation_json(seg: &SegmentationPair) -> serde_json::Value {
    let side = |segs: &[Segment]| -> Vec<[usize; 2]> { segs.iter().map(|g| [g.begin + 1, g.end + 1]).collect() };
    json!({ "x": side(&seg.cuts_x), "y": side(&seg.cuts_y) })
}

fn align(a: AlignArgs) -> Result<()> {
    let opts = &a.score;
    let text = if opts.scorer.is_bow() {
        let (x, y) = (read_bow(&a.x)?, read_bow(&a.y)?);
        let cfg = sm_config(opts)?;
        let doc = if opts.scorer == ScorerKind::Sm {
            let r = sm_match(&x, &y, &cfg)?;
            json!({"schema": 1, "scorer": "sm", "log_lik": r.log_lik, "segments": segmentation_json(&r.seg)})
        } else {
            let r = fast_sm_match(&x, &y, &cfg, !opts.no_prune)?;
            json!({
                "schema": 1,
                "scorer": "fastsm",
                "log_lik": r.log_lik,
                "path_log_lik": r.path_log_lik,
                "segments": segmentation_json(&r.seg),
                "cells_pruned": r.cells_pruned,
                "cells_evaluated": r.cells_evaluated,
                "sealed_on_path": r.sealed_on_path,
            })
        };
        serde_json::to_string_pretty(&doc)?
    } else {
        let x = segalign::bench::read_sequence_csv(&a.x).with_context(|| format!("reading {}", a.x.display()))?;
        let y = segalign::bench::read_sequence_csv(&a.y).with_context(|| format!("reading {}", a.y.display()))?;
        match opts.scorer {
            ScorerKind::Sphmm => viterbi_align(&x, &y, &load_model(opts)?)?.to_json()?,
            ScorerKind::Phmm => phmm_align(&x, &y, &load_model(opts)?)?.to_json()?,
            ScorerKind::Marginal => {
                let v = marginal_score(&x, &y, &load_model(opts)?)?;
                serde_json::to_string_pretty(&json!({"schema": 1, "scorer": "marginal", "log_odds": v}))?
            }
            _ => {
                let r = dtw_align(&x, &y, &dtw_config(opts))?;
                let path: Vec<[usize; 2]> = r.path.iter().map(|&(i, j)| [i + 1, j + 1]).collect();
                serde_json::to_string_pretty(&json!({
                    "schema": 1,
                    "scorer": "dtw",
                    "distance": r.distance,
                    "path": path,
                }))?
            }
        }
    };
    emit(&text, a.out.as_deref())
}

fn train(a: TrainArgs) -> Result<()> {
    let data = load_ucr(&a.data).with_context(|| format!("loading {}", a.data.display()))?;
    data.require_labels()?;
    let mut init = match &a.init {
        Some(p) => SphmmModel::from_json(&fs::read_to_string(p)?)?,
        None => {
            eprintln!("no --init given; starting from the default model");
            SphmmModel::default()
        }
    };
    if let Some(l) = a.lmax {
        init = init.with_lengths(l, l);
    }
    if a.band.is_some() {
        init.band = a.band;
    }
    let eta_policy = if a.eta.eq_ignore_ascii_case("mle") {
        EtaPolicy::Mle
    } else {
        EtaPolicy::Fixed(a.eta.parse().with_context(|| format!("--eta `{}` is neither a number nor `mle`", a.eta))?)
    };
    let mut idx = same_class_pairs(&data.sequences);
    if idx.is_empty() {
        bail!(segalign::error::SegalignError::EmptyInput("no two sequences share a label".into()));
    }
    if let Some(cap) = a.max_pairs {
        if idx.len() > cap {
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(a.seed));
            idx.truncate(cap);
            idx.sort_unstable();
        }
    }
    let pairs: Vec<(&Sequence, &Sequence)> = idx.iter().map(|&(i, j)| (&data.sequences[i], &data.sequences[j])).collect();
    let cfg = LearnConfig {
        max_iters: a.max_iters,
        eta_policy,
        learn_psi: a.learn_psi,
        ..LearnConfig::default()
    };
    let out = em_train(&pairs, &init, &cfg)?;
    for l in &out.log {
        eprintln!(
            "iter {:>2}  log-odds {:.6}  delta {:.6}  epsilon {:.6}  tau {:.6}",
            l.iter, l.total_log_odds, l.delta, l.epsilon, l.tau
        );
    }
    if !out.converged {
        eprintln!("stopped after {} iterations without converging", out.log.len());
    }
    fs::write(&a.out, out.model.to_json()? + "\n").with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

struct Evaluation {
    accuracy: f64,
    std: f64,
    folds: Vec<f64>,
    confusion: ConfusionMatrix,
}

fn evaluate<T, S>(train: &[T], test: Option<&[T]>, folds: usize, sim: &S, seed: u64) -> Result<Evaluation>
where
    T: Labeled + Sync + Clone,
    S: Similarity<T>,
{
    Ok(match test {
        Some(test) => {
            let r = knn_classify(train, test, sim)?;
            Evaluation {
                accuracy: r.accuracy,
                std: 0.0,
                folds: Vec::new(),
                confusion: r.confusion,
            }
        }
        None => {
            let r = crossval(train, folds, sim, seed)?;
            Evaluation {
                accuracy: r.mean,
                std: r.std,
                folds: r.fold_accuracies,
                confusion: r.confusion,
            }
        }
    })
}

/// Averages accuracies over replicas and sums their confusion counts.
fn combine(evals: Vec<Evaluation>) -> Evaluation {
    let accs: Vec<f64> = evals.iter().map(|e| e.accuracy).collect();
    let mut it = evals.into_iter();
    let mut first = it.next().expect("at least one evaluation");
    for e in it {
        for (row, other) in first.confusion.counts.iter_mut().zip(&e.confusion.counts) {
            for (c, o) in row.iter_mut().zip(other) {
                *c += o;
            }
        }
    }
    let m = mean(&accs);
    first.std = if accs.len() > 1 {
        (accs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (accs.len() - 1) as f64).sqrt()
    } else {
        first.std
    };
    first.accuracy = m;
    first.folds = accs;
    first
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let opts = &a.score;
    let started = Instant::now();
    let name;
    let (eval, params) = if opts.scorer.is_bow() {
        if a.replicas > 0 {
            bail!(segalign::error::SegalignError::InvalidArgument(
                "--replicas applies to raw sequences only".into()
            ));
        }
        let train = load_bow_index(&a.train).with_context(|| format!("loading {}", a.train.display()))?;
        let test = a.test.as_ref().map(load_bow_index).transpose()?;
        name = dataset_name(&a.train);
        let cfg = sm_config(opts)?;
        let sim = if opts.scorer == ScorerKind::Sm {
            BowScorer::Sm(cfg.clone())
        } else {
            BowScorer::FastSm(cfg.clone())
        };
        let e = evaluate(&train, test.as_deref(), a.folds, &sim, a.seed)?;
        (e, json!({"l_min": cfg.l_min, "l_max": cfg.l_max, "sigma": cfg.sigma, "metric": cfg.metric, "normalized": cfg.normalized}))
    } else {
        let train = load_ucr(&a.train).with_context(|| format!("loading {}", a.train.display()))?;
        train.require_labels()?;
        let test = match &a.test {
            Some(p) => {
                let t = load_ucr(p).with_context(|| format!("loading {}", p.display()))?;
                t.require_labels()?;
                Some(t)
            }
            None => None,
        };
        name = train.name.clone();
        let model = match opts.scorer {
            ScorerKind::Dtw => None,
            _ => Some(load_model(opts)?),
        };
        let scorers: Vec<(Scorer, serde_json::Value)> = match (opts.scorer, &model) {
            (ScorerKind::Dtw, _) => {
                let base = dtw_config(opts);
                let penalties = if a.gap_sweep { gap_sweep() } else { vec![base.gap_penalty] };
                penalties
                    .into_iter()
                    .map(|g| (Scorer::Dtw(DtwConfig { gap_penalty: g, ..base }), json!({"gap_penalty": g, "band": base.band})))
                    .collect()
            }
            (ScorerKind::Sphmm, Some(m)) => vec![(Scorer::Sphmm(m.clone()), serde_json::to_value(m)?)],
            (ScorerKind::Phmm, Some(m)) => vec![(Scorer::Phmm(m.clone()), serde_json::to_value(m)?)],
            (_, Some(m)) => vec![(Scorer::Marginal(m.clone()), serde_json::to_value(m)?)],
            _ => unreachable!("probabilistic scorers always load a model"),
        };
        if a.gap_sweep && opts.scorer != ScorerKind::Dtw {
            log::warn!("--gap-sweep only applies to dtw; ignored");
        }
        let spec = NoiseSpec {
            kind: match a.noise {
                NoiseKindArg::Impulse => NoiseKind::Impulse,
                NoiseKindArg::Gaussian => NoiseKind::GaussianFull,
            },
            omega: a.omega,
            coverage: 0.2,
            rng_seed: 0,
        };
        let run_one = |sc: &Scorer| -> Result<Evaluation> {
            if a.replicas == 0 {
                return evaluate(&train.sequences, test.as_ref().map(|t| t.sequences.as_slice()), a.folds, sc, a.seed);
            }
            let noisy_train = noisy_replicas(&train, &spec, a.replicas, a.seed)?;
            let noisy_test = test
                .as_ref()
                .map(|t| noisy_replicas(t, &spec, a.replicas, a.seed.wrapping_add(1 << 32)))
                .transpose()?;
            let evals = (0..a.replicas)
                .map(|r| {
                    let te = noisy_test.as_ref().map(|v| v[r].sequences.as_slice());
                    evaluate(&noisy_train[r].sequences, te, a.folds, sc, a.seed)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(combine(evals))
        };
        let mut best: Option<(Evaluation, serde_json::Value)> = None;
        let mut trials = Vec::new();
        for (sc, p) in &scorers {
            let e = run_one(sc)?;
            if scorers.len() > 1 {
                eprintln!("{p}: accuracy {:.4}", e.accuracy);
                trials.push(json!({"params": p, "accuracy": e.accuracy}));
            }
            if best.as_ref().map_or(true, |(b, _)| e.accuracy > b.accuracy) {
                best = Some((e, p.clone()));
            }
        }
        let (e, mut p) = best.expect("at least one scorer");
        if !trials.is_empty() {
            p = json!({"best": p, "sweep": trials});
        }
        if a.replicas > 0 {
            p = json!({"scorer": p, "replicas": a.replicas, "noise": spec});
        }
        (e, p)
    };
    let scorer_name = format!("{:?}", opts.scorer).to_lowercase();
    let entry = ResultEntry {
        scorer: scorer_name,
        dataset: name,
        accuracy: eval.accuracy,
        std: eval.std,
        fold_accuracies: eval.folds,
        confusion: eval.confusion,
        timing: started.elapsed().as_secs_f64(),
        params,
    };
    eprintln!("{} on {}: accuracy {:.4} (std {:.4})", entry.scorer, entry.dataset, entry.accuracy, entry.std);
    let file = ResultsFile::new(vec![entry]);
    emit(&file.to_json()?, a.out.as_deref())?;
    if let Some(p) = &a.csv {
        fs::write(p, file.to_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn dataset_name(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into())
}

fn synth(a: SynthArgs) -> Result<()> {
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    match a.kind {
        SynthKind::S1 => {
            let cfg = Synth1Config {
                non_causal: !a.causal,
                ..Synth1Config::default()
            };
            let pairs = gen_synthetic1_with(a.count, a.seed, &cfg)?;
            for (i, p) in pairs.iter().enumerate() {
                let stem = a.out.join(format!("s1_{:03}", i + 1));
                fs::write(stem.with_extension("original.csv"), format_sequence_csv(&p.original))?;
                fs::write(stem.with_extension("warped.csv"), format_sequence_csv(&p.warped))?;
                // 1-based positions, one per warped sample
                let truth: String = p.truth.mapping.iter().map(|v| format!("{}\n", v + 1.0)).collect();
                fs::write(stem.with_extension("truth.csv"), truth)?;
            }
            eprintln!("wrote {} pairs to {}", pairs.len(), a.out.display());
        }
        SynthKind::S2 => {
            let data = gen_synthetic2(a.count, a.seed, &Synth2Config::default())?;
            let path = a.out.join("synthetic2.txt");
            write_ucr(&path, &data)?;
            eprintln!("wrote {} sequences to {}", data.len(), path.display());
        }
        SynthKind::Bow => {
            let cfg = BowSuiteConfig {
                per_class: a.count,
                ..BowSuiteConfig::default()
            };
            let suite = gen_bow_suite(a.seed, &cfg)?;
            let mut index = String::new();
            for b in &suite {
                let file = format!("{}.bow", b.id());
                fs::write(a.out.join(&file), format_bow(b))?;
                index.push_str(&format!("{file} {}\n", b.label().unwrap_or("?")));
            }
            fs::write(a.out.join("index.txt"), index)?;
            eprintln!("wrote {} sequences to {}", suite.len(), a.out.display());
        }
    }
    Ok(())
}

fn noise(a: NoiseArgs) -> Result<()> {
    let data = load_ucr(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    let spec = NoiseSpec {
        kind: match a.kind {
            NoiseKindArg::Impulse => NoiseKind::Impulse,
            NoiseKindArg::Gaussian => NoiseKind::GaussianFull,
        },
        omega: a.omega,
        coverage: a.coverage,
        rng_seed: a.seed,
    };
    spec.validate()?;
    let seqs = data
        .sequences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let noisy = inject_noise(
                s,
                &NoiseSpec {
                    rng_seed: a.seed.wrapping_add(i as u64),
                    ..spec
                },
            )?;
            match a.filter {
                None => Ok(noisy),
                Some(f) => {
                    let kind = match f {
                        FilterArg::Median => FilterKind::Median,
                        FilterArg::Mean => FilterKind::Mean,
                    };
                    filter(&noisy, kind, a.window)
                }
            }
        })
        .collect::<segalign::error::Result<Vec<_>>>()?;
    write_ucr(&a.out, &Dataset::new(data.name, seqs)?)?;
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let fa = ResultsFile::read(&a.a).with_context(|| format!("reading {}", a.a.display()))?;
    let fb = ResultsFile::read(&a.b).with_context(|| format!("reading {}", a.b.display()))?;
    let (names, w) = compare_results(&fa, &fb)?;
    let text = if a.json {
        serde_json::to_string_pretty(&json!({
            "schema": 1,
            "datasets": names,
            "n": w.n,
            "r_plus": w.r_plus,
            "r_minus": w.r_minus,
            "t": w.t,
            "z": w.z,
        }))?
    } else {
        format!(
            "datasets {}\nN {}\nR+ {}\nR- {}\nT {}\nz {}",
            names.len(),
            w.n,
            w.r_plus,
            w.r_minus,
            w.t,
            w.z
        )
    };
    emit(&text, None)
}
