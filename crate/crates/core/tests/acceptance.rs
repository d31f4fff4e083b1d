//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! Run alone with `cargo test --release --test acceptance`. Criteria 8 and 9
//! train the full-size networks twice over and take the better part of half
//! an hour on one core.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Parser;
use rand::Rng;

use common::*;
use siamese_bci::cli::{run, Cli};
use siamese_bci::decomposition::{generate_pairs, CodingMatrix, PairLabel, Scheme, SupersetSplit};
use siamese_bci::dsp::{covariance_feature, design_bandpass};
use siamese_bci::nn::Mode;
use siamese_bci::pipeline::{decode_label, kappa, summarize, DecodeRule, Evaluation};
use siamese_bci::siamese::contrastive_loss;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gradient_fidelity() -> Outcome {
    let start = Instant::now();
    let mut worst_layer: f64 = 0.0;
    for kind in LAYER_KINDS {
        for seed in 0..24 {
            let rep = layer_gradcheck(kind, seed);
            worst_layer = worst_layer.max(rep.max_rel_error).max(rep.input_rel_error);
        }
    }
    let mut worst_stack: f64 = 0.0;
    for seed in 0..4 {
        let rep = miniature_pair_gradcheck(seed, 16, 2.0, Mode::Infer);
        worst_stack = worst_stack.max(rep.max_rel_error);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_layer < 1e-4 && worst_stack < 1e-4 && secs < 60.0,
        format!("layers max_rel={worst_layer:.2e} (7 kinds x 24 seeds), miniature stack via contrastive loss max_rel={worst_stack:.2e}, {secs:.1}s"),
    )
}

fn loss_closed_forms() -> Outcome {
    let cases = [
        (0.3, PairLabel::Similar, 0.045, 0.3),
        (0.3, PairLabel::Dissimilar, 0.02, -0.2),
        (0.7, PairLabel::Dissimilar, 0.0, 0.0),
    ];
    let mut worst: f64 = 0.0;
    for (d, label, loss, grad) in cases {
        let (l, g) = contrastive_loss(d, label, 0.5, 1.0);
        worst = worst.max((l - loss).abs()).max((g - grad).abs());
    }
    outcome(worst <= 4.0 * f64::EPSILON, format!("max deviation {worst:.1e}"))
}

fn filter_correctness() -> Outcome {
    let start = Instant::now();
    let f = match design_bandpass(5, 7.0, 30.0, 250.0) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("design failed: {e}")),
    };
    let (e7, e30) = (f.magnitude_db(7.0), f.magnitude_db(30.0));
    let (dc, nyq) = (f.magnitude_db(0.0), f.magnitude_db(125.0));
    let max_radius = f.sections.iter().map(|s| s.pole_radius()).fold(0.0, f64::max);
    let edges = [e7, e30].iter().all(|v| (-3.1..=-2.9).contains(v));
    let pass = edges && dc <= -60.0 && nyq <= -60.0 && max_radius < 1.0 && f.check_stable().is_ok();
    outcome(
        pass,
        format!(
            "|H(7)|={e7:.3} dB |H(30)|={e30:.3} dB |H(0)|={dc:.1} dB |H(125)|={nyq:.1} dB max pole radius {max_radius:.4}, {:.2}s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn covariance_features() -> Outcome {
    let mut r = rng(44);
    let (mut trace_err, mut sym_err, mut min_eig, mut oracle_err) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let trial = random_trial(&mut r, 22, 500);
        let z = covariance_feature(&trial, false).unwrap();
        let n = z.size();
        trace_err = trace_err.max((z.trace() - 1.0).abs());
        for i in 0..n {
            for j in 0..n {
                sym_err = sym_err.max((z.get(i, j) - z.get(j, i)).abs());
            }
        }
        min_eig = min_eig.min(min_eigenvalue(&z));
        for (a, b) in z.matrix().iter().zip(naive_gram(&trial)) {
            oracle_err = oracle_err.max((a - b).abs() / b.abs().max(1e-300));
        }
    }
    outcome(
        trace_err <= 1e-9 && sym_err <= 1e-9 && min_eig >= -1e-9 && oracle_err <= 1e-9,
        format!("100 trials: |tr-1|={trace_err:.1e} asym={sym_err:.1e} min eig={min_eig:.2e} oracle rel={oracle_err:.1e}"),
    )
}

fn coding_matrices() -> Outcome {
    let ovo_table = vec![
        vec![1, 1, 1, 2, 2, 2],
        vec![0, 2, 2, 1, 1, 2],
        vec![2, 0, 2, 0, 2, 1],
        vec![2, 2, 0, 2, 0, 0],
    ];
    let ovr_table: Vec<Vec<u8>> = (0..4).map(|i| (0..4).map(|j| u8::from(i == j)).collect()).collect();
    let ovo_ok = CodingMatrix::build(Scheme::Ovo, 4).unwrap().rows_u8() == ovo_table;
    let ovr_ok = CodingMatrix::build(Scheme::Ovr, 4).unwrap().rows_u8() == ovr_table;
    let counts_ok = (2..=6).all(|k| {
        CodingMatrix::build(Scheme::Ovr, k).unwrap().columns() == k
            && CodingMatrix::build(Scheme::Ovo, k).unwrap().columns() == k * (k - 1) / 2
    });
    outcome(ovo_ok && ovr_ok && counts_ok, format!("OVO table {ovo_ok}, OVR table {ovr_ok}, column counts K=2..6 {counts_ok}"))
}

fn decoder_oracle() -> Outcome {
    let mut matrices = Vec::new();
    for k in 2..=8 {
        matrices.push(CodingMatrix::build(Scheme::Ovr, k).unwrap());
    }
    for k in 2..=4 {
        matrices.push(CodingMatrix::build(Scheme::Ovo, k).unwrap());
    }
    let (mut checked, mut mismatches) = (0usize, 0usize);
    for m in &matrices {
        let l = m.columns();
        for code in 0u32..(1 << l) {
            let votes: Vec<u8> = (0..l).map(|j| ((code >> j) & 1) as u8).collect();
            let got = decode_label(&votes, m, DecodeRule::Masked).unwrap().label;
            checked += 1;
            if got != brute_force_decode(&votes, m) {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} vote vectors over {} matrices, {mismatches} mismatches", matrices.len()))
}

fn pair_combinatorics() -> Outcome {
    let mut r = rng(77);
    let mut failures = Vec::new();
    for _ in 0..50 {
        let a = r.random_range(2..=58);
        let b = r.random_range(2..=60 - a);
        let split = SupersetSplit { column: 0, s0: (0..a).collect(), s1: (a..a + b).collect() };
        let pairs = generate_pairs(&split).unwrap();
        let same = pairs.count(PairLabel::Similar);
        let cross = pairs.count(PairLabel::Dissimilar);
        let (ws, wd) = (pairs.weighted_count(PairLabel::Similar), pairs.weighted_count(PairLabel::Dissimilar));
        let balanced = (ws - wd).abs() <= 1e-6 * ws.max(wd);
        if same != choose2(a) + choose2(b) || cross != a * b || !balanced {
            failures.push((a, b));
        }
    }
    outcome(failures.is_empty(), format!("50 random (a, b), failures {failures:?}"))
}

fn cli(args: &[&str]) -> Result<String, String> {
    let cli = Cli::try_parse_from(std::iter::once("siamese-bci").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(&cli).map_err(|e| e.to_string())
}

struct Benchmark {
    elapsed: Duration,
    /// Scheme name to parsed evaluation report.
    reports: BTreeMap<&'static str, Evaluation>,
}

/// Synthesis, preprocessing, training and evaluation through the CLI, as a user would run it.
fn run_benchmark(dir: &Path) -> Result<Benchmark, String> {
    let start = Instant::now();
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let config = dir.join("run.toml");
    fs::write(&config, "seed = 7\nthreads = 1\n\n[train]\nepochs = 10\npair_subsample = 4000\n").map_err(|e| e.to_string())?;
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let c = p("run.toml");
    cli(&["--config", &c, "synth", "--out", &p("raw.seeg"), "--test-out", &p("test_raw.seeg")])?;
    cli(&["--config", &c, "prep", "--input", &p("raw.seeg"), "--output", &p("train.seeg")])?;
    cli(&["--config", &c, "prep", "--input", &p("test_raw.seeg"), "--output", &p("test.seeg")])?;
    let mut reports = BTreeMap::new();
    for scheme in ["ovr", "ovo"] {
        let ckpt = p(&format!("{scheme}_model"));
        let report = p(&format!("{scheme}_report.jsonl"));
        cli(&["--config", &c, "--scheme", scheme, "train", "--input", &p("train.seeg"), "--checkpoint", &ckpt])?;
        cli(&["--config", &c, "eval", "--checkpoint", &ckpt, "--input", &p("test.seeg"), "--report", &report])?;
        let text = fs::read_to_string(&report).map_err(|e| e.to_string())?;
        reports.insert(scheme, Evaluation::from_jsonl(&text).map_err(|e| e.to_string())?);
    }
    Ok(Benchmark { elapsed: start.elapsed(), reports })
}

fn benchmark_outcome(bench: &Result<Benchmark, String>) -> Outcome {
    let bench = match bench {
        Ok(b) => b,
        Err(e) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let mut pass = bench.elapsed <= Duration::from_secs(15 * 60);
    let mut parts = Vec::new();
    for (scheme, eval) in &bench.reports {
        match &eval.summary {
            Some(s) => {
                pass &= s.accuracy >= 0.80 && s.kappa >= 0.73;
                parts.push(format!("{scheme} acc={:.4} kappa={:.4}", s.accuracy, s.kappa));
            }
            None => {
                pass = false;
                parts.push(format!("{scheme} report has no summary"));
            }
        }
    }
    parts.push(format!("{:.0}s on {} core(s)", bench.elapsed.as_secs_f64(), num_cores()));
    outcome(pass, parts.join(", "))
}

fn num_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn files_under(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism(first: &Path, bench: &Result<Benchmark, String>) -> Outcome {
    if let Err(e) = bench {
        return outcome(false, format!("first run failed: {e}"));
    }
    let second = first.with_file_name("second");
    if let Err(e) = run_benchmark(&second) {
        return outcome(false, format!("second run failed: {e}"));
    }
    let (a, b) = (files_under(first), files_under(&second));
    let differing: Vec<String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.display().to_string())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let checkpoints = a.keys().filter(|k| k.to_string_lossy().ends_with(".ckpt")).count();
    outcome(
        differing.is_empty(),
        format!("{} files compared ({checkpoints} model checkpoints), differing: {differing:?}", a.len()),
    )
}

fn kappa_formula(bench: &Result<Benchmark, String>) -> Outcome {
    let examples = [(0.25, 0.25, 0.0), (1.0, 0.25, 1.0), (0.58, 0.25, 0.44)];
    let worst_example =
        examples.iter().map(|&(ps, pr, k)| (kappa(ps, pr).unwrap() - k).abs()).fold(0.0, f64::max);
    let mut worst_report: f64 = 0.0;
    let mut r = rng(10);
    for k in 2..=6usize {
        for _ in 0..20 {
            let truth: Vec<usize> = (1..=k).flat_map(|c| std::iter::repeat_n(c, 15)).collect();
            let predicted: Vec<usize> = truth.iter().map(|&t| if r.random_bool(0.6) { t } else { r.random_range(1..=k) }).collect();
            let s = summarize(&truth, &predicted, k, 0).unwrap();
            let chance = 1.0 / k as f64;
            worst_report = worst_report.max((s.kappa - (s.accuracy - chance) / (1.0 - chance)).abs());
        }
    }
    let mut reports = 0;
    if let Ok(b) = bench {
        for s in b.reports.values().filter_map(|e| e.summary.as_ref()) {
            let chance = 1.0 / s.classes as f64;
            worst_report = worst_report.max((s.kappa - (s.accuracy - chance) / (1.0 - chance)).abs());
            reports += 1;
        }
    }
    outcome(
        worst_example <= 1e-12 && worst_report <= 1e-9,
        format!("examples max deviation {worst_example:.1e}, {} summaries ({reports} from evaluation reports) max deviation {worst_report:.1e}", 100 + reports),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let first = tmp.path().join("first");
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n:>2} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "gradient fidelity", gradient_fidelity());
    report(2, "loss closed forms", loss_closed_forms());
    report(3, "filter correctness", filter_correctness());
    report(4, "covariance features", covariance_features());
    report(5, "coding matrices", coding_matrices());
    report(6, "decoder oracle equivalence", decoder_oracle());
    report(7, "pair combinatorics", pair_combinatorics());
    let bench = run_benchmark(&first);
    report(8, "end-to-end synthetic benchmark", benchmark_outcome(&bench));
    report(9, "determinism", determinism(&first, &bench));
    report(10, "kappa formula", kappa_formula(&bench));
    let failed: Vec<u32> = results.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    println!("acceptance: {}/{} passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
