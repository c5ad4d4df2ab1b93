//! Acceptance criteria, one line each.
//!
//! Criteria 3 and 6 need the released corpus (`APPRAISE_CORPUS`, optional
//! column mapping in `APPRAISE_SCHEMA`) and, for 6, 300-dimensional word
//! vectors (`APPRAISE_EMBEDDINGS`). Without them they report SKIP.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use appraise_core::agreement::{agreement_report, cohens_kappa, cooccurrence};
use appraise_core::corpus::{load_corpus, split_folds, synthesize_corpus, Schema, SynthesisRule};
use appraise_core::encoder::{load_embeddings, EmbeddingTable, TextEncoder, Vocabulary};
use appraise_core::evaluation::{emit_report, predictions_table, run_batch, RunResult, Task};
use appraise_core::models::{model_gradcheck, train_t2e, ModelConfig};
use appraise_core::nn::gradcheck::{layer_suite, TOLERANCE};
use appraise_core::nn::Rng;
use appraise_core::{Corpus, Dimension, Emotion};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Outcome = Result<Verdict, Box<dyn std::error::Error>>;
type Files = Vec<(String, Vec<u8>)>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn small_config() -> ModelConfig {
    ModelConfig {
        filters: 8,
        embedding_dim: 16,
        max_len: 16,
        hidden: vec![32, 32],
        lr: 5e-3,
        batch_size: 16,
        epochs: 25,
        seed: 3,
        ..ModelConfig::default()
    }
}

fn random_encoder(corpus: &Corpus, config: &ModelConfig) -> TextEncoder {
    let vocab = Vocabulary::from_corpus(corpus);
    let table = EmbeddingTable::random(&vocab, config.embedding_dim, 17);
    TextEncoder::new(vocab, table, config.max_len)
}

fn find(results: &[RunResult], task: Task) -> &RunResult {
    results.iter().find(|r| r.task == task).expect("task was run")
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let seeds = 20;
    let mut worst: (f64, String) = (0.0, String::new());
    let mut failed = Vec::new();
    let mut checked = 0;
    for seed in 0..seeds {
        let mut reports = layer_suite(seed, 1, None)?;
        reports.extend(model_gradcheck(seed, 1, None)?);
        for r in reports {
            checked += r.outcome.checked;
            if r.outcome.max_rel_error > worst.0 {
                worst = (r.outcome.max_rel_error, r.name.clone());
            }
            if !r.passed {
                failed.push(format!("{}@{seed}", r.name));
            }
        }
    }
    let elapsed = start.elapsed();
    Ok(verdict(
        failed.is_empty() && elapsed < Duration::from_secs(60),
        format!(
            "{seeds} seeds, {checked} coordinates, max rel error {:.2e} ({}) < {TOLERANCE:e}, failures {failed:?}, {:.1}s < 60s",
            worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    ))
}

/// κ from the 2×2 contingency table, written out cell by cell.
fn kappa_brute_force(a: &[bool], b: &[bool]) -> f64 {
    let mut table = [[0u64; 2]; 2];
    for (&x, &y) in a.iter().zip(b) {
        table[x as usize][y as usize] += 1;
    }
    let n = a.len() as f64;
    let row = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let col = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let constant_a = row[0] == 0 || row[1] == 0;
    let constant_b = col[0] == 0 || col[1] == 0;
    if constant_a && constant_b && row == col {
        return 1.0;
    }
    let po = (table[0][0] + table[1][1]) as f64 / n;
    let pe = (row[0] * col[0] + row[1] * col[1]) as f64 / (n * n);
    if constant_a && constant_b {
        return 0.0;
    }
    (po - pe) / (1.0 - pe)
}

fn kappa_oracle() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut max_diff: f64 = 0.0;
    for i in 0..1000 {
        let n = 1 + (rng.next_u64() % 300) as usize;
        let (pa, pb) = (rng.uniform(), rng.uniform());
        let a: Vec<bool> = (0..n).map(|_| rng.uniform() < pa).collect();
        let b: Vec<bool> = if i % 10 == 0 {
            a.iter().map(|&x| if rng.uniform() < 0.1 { !x } else { x }).collect()
        } else {
            (0..n).map(|_| rng.uniform() < pb).collect()
        };
        max_diff = max_diff.max((cohens_kappa(&a, &b)? - kappa_brute_force(&a, &b)).abs());
    }
    let mut mc = Rng::new(77);
    let a: Vec<bool> = (0..1000).map(|_| mc.uniform() < 0.5).collect();
    let b: Vec<bool> = (0..1000).map(|_| mc.uniform() < 0.5).collect();
    let independent = cohens_kappa(&a, &b)?;
    Ok(verdict(
        max_diff <= 1e-12 && independent.abs() < 0.1,
        format!("max |Δκ| {max_diff:.1e} <= 1e-12 over 1000 pairs, independent n=1000 |κ| = {:.4} < 0.1", independent.abs()),
    ))
}

const COOCCURRENCE_COUNTS: [[usize; 7]; 7] = [
    [129, 119, 60, 0, 9, 1, 5],
    [67, 134, 40, 2, 14, 11, 24],
    [129, 13, 121, 4, 43, 18, 66],
    [55, 132, 36, 0, 133, 88, 11],
    [139, 140, 4, 141, 65, 41, 25],
    [122, 112, 88, 1, 7, 2, 97],
    [32, 111, 51, 1, 106, 67, 12],
];
const COOCCURRENCE_RATIOS: [[f64; 7]; 7] = [
    [0.90, 0.83, 0.42, 0.00, 0.06, 0.01, 0.03],
    [0.47, 0.94, 0.28, 0.01, 0.10, 0.08, 0.17],
    [0.90, 0.09, 0.85, 0.03, 0.30, 0.13, 0.46],
    [0.38, 0.92, 0.25, 0.00, 0.93, 0.62, 0.08],
    [0.97, 0.98, 0.03, 0.99, 0.45, 0.29, 0.17],
    [0.85, 0.78, 0.62, 0.01, 0.05, 0.01, 0.68],
    [0.22, 0.78, 0.36, 0.01, 0.74, 0.47, 0.08],
];
const DIMENSION_TOTALS: [usize; 7] = [673, 761, 400, 149, 377, 228, 240];
/// Rows: dimensions; columns: A1/A2, A1/A3, A2/A3, avg., A1, A2, A3, avg.
const KAPPA: [[f64; 8]; 7] = [
    [0.28, 0.24, 0.41, 0.31, 0.50, 0.76, 0.66, 0.64],
    [0.41, 0.23, 0.29, 0.31, 0.62, 0.77, 0.46, 0.62],
    [0.38, 0.33, 0.26, 0.32, 0.69, 0.67, 0.62, 0.66],
    [0.89, 0.88, 0.90, 0.89, 0.93, 0.96, 0.94, 0.94],
    [0.68, 0.57, 0.63, 0.63, 0.80, 0.88, 0.76, 0.81],
    [0.65, 0.56, 0.52, 0.58, 0.84, 0.81, 0.70, 0.78],
    [0.52, 0.32, 0.28, 0.37, 0.80, 0.69, 0.49, 0.66],
];
const KAPPA_AVERAGES: [f64; 8] = [0.59, 0.48, 0.52, 0.53, 0.77, 0.82, 0.70, 0.76];

fn released_corpus() -> Result<Option<Corpus>, Box<dyn std::error::Error>> {
    let Some(path) = std::env::var_os("APPRAISE_CORPUS") else {
        return Ok(None);
    };
    let schema = match std::env::var_os("APPRAISE_SCHEMA") {
        Some(p) => Some(Schema::parse(&std::fs::read_to_string(p)?)?),
        None => None,
    };
    let corpus = load_corpus(Path::new(&path), schema.as_ref())?;
    corpus.validate()?;
    Ok(Some(corpus))
}

fn corpus_analytics(corpus: Option<&Corpus>) -> Outcome {
    let Some(corpus) = corpus else {
        return Ok(Verdict::Skip("APPRAISE_CORPUS not set".into()));
    };
    let table = cooccurrence(corpus)?;
    let mut mismatches = Vec::new();
    for e in Emotion::ALL {
        if corpus.histogram()[e.index()] != 143 {
            mismatches.push(format!("{} has {} instances", e.name(), corpus.histogram()[e.index()]));
        }
        for d in Dimension::ALL {
            let (count, ratio) = (table.count(e, d), table.ratio(e, d));
            let expected = COOCCURRENCE_COUNTS[e.index()][d.index()];
            if count != expected || (ratio * 100.0).round() != (COOCCURRENCE_RATIOS[e.index()][d.index()] * 100.0).round() {
                mismatches.push(format!("({}, {}) = {count}/{ratio:.2}", e.name(), d.name()));
            }
        }
    }
    for d in Dimension::ALL {
        if table.dimension_total(d) != DIMENSION_TOTALS[d.index()] {
            mismatches.push(format!("{} total {}", d.name(), table.dimension_total(d)));
        }
    }
    let mut detail = format!("co-occurrence: {} mismatches {mismatches:?}", mismatches.len());
    let mut ok = mismatches.is_empty();
    if corpus.has_votes() {
        let report = agreement_report(corpus)?;
        let mut worst: f64 = 0.0;
        for d in Dimension::ALL {
            let row = &KAPPA[d.index()];
            let ours = [
                report.pairwise[d.index()][0],
                report.pairwise[d.index()][1],
                report.pairwise[d.index()][2],
                report.pairwise_dimension_mean(d),
                report.vs_majority[d.index()][0],
                report.vs_majority[d.index()][1],
                report.vs_majority[d.index()][2],
                report.majority_dimension_mean(d),
            ];
            for (a, b) in ours.iter().zip(row) {
                worst = worst.max((a - b).abs());
            }
        }
        let averages = [
            report.pair_mean(0),
            report.pair_mean(1),
            report.pair_mean(2),
            report.pairwise_mean(),
            report.annotator_mean(0),
            report.annotator_mean(1),
            report.annotator_mean(2),
            report.majority_mean(),
        ];
        for (a, b) in averages.iter().zip(&KAPPA_AVERAGES) {
            worst = worst.max((a - b).abs());
        }
        ok &= worst <= 0.005 + 1e-12;
        detail.push_str(&format!(
            "; kappa: max |Δ| {worst:.4} <= 0.005 (pairwise avg {:.3}, majority avg {:.3})",
            report.pairwise_mean(),
            report.majority_mean()
        ));
    } else {
        detail.push_str("; kappa: no annotator votes in file");
    }
    Ok(verdict(ok, detail))
}

fn separable_synthetic() -> Outcome {
    let start = Instant::now();
    let corpus = synthesize_corpus(1, 20, SynthesisRule::Deterministic)?;
    let config = small_config();
    let encoder = random_encoder(&corpus, &config);

    let train: Vec<_> = corpus.iter().collect();
    let model = train_t2e(&train, &encoder, &config)?;
    let mut correct = 0;
    for inst in &train {
        correct += (model.predict(&encoder.encode(&inst.text))? == inst.emotion) as usize;
    }
    let train_acc = correct as f64 / train.len() as f64;

    let plan = split_folds(&corpus, 5, 1, 1)?;
    let results = run_batch(&[Task::A2EGold, Task::Pipeline], &corpus, &plan, Some(&encoder), &config, 1)?;
    let (a2e, pipe) = (&find(&results, Task::A2EGold).aggregate, &find(&results, Task::Pipeline).aggregate);
    let elapsed = start.elapsed();
    Ok(verdict(
        a2e.macro_f1 >= 0.99
            && pipe.macro_f1 <= a2e.macro_f1
            && pipe.micro_f1 <= a2e.micro_f1
            && train_acc >= 0.95
            && elapsed < Duration::from_secs(300),
        format!(
            "A→E(gold) macro-F1 {:.3} >= 0.99, pipeline macro/micro {:.3}/{:.3} <= {:.3}/{:.3}, T→E train acc {train_acc:.3} >= 0.95, {:.1}s < 300s",
            a2e.macro_f1,
            pipe.macro_f1,
            pipe.micro_f1,
            a2e.macro_f1,
            a2e.micro_f1,
            elapsed.as_secs_f64()
        ),
    ))
}

fn oracle_dominance() -> Outcome {
    let corpus = synthesize_corpus(5, 20, SynthesisRule::Noisy(0.15))?;
    let config = ModelConfig { epochs: 8, ..small_config() };
    let encoder = random_encoder(&corpus, &config);
    let plan = split_folds(&corpus, 5, 2, 5)?;
    let tasks = [Task::T2E, Task::Pipeline, Task::MultitaskEmotion, Task::OraclePipeline, Task::OracleMultitask];
    let results = match run_batch(&tasks, &corpus, &plan, Some(&encoder), &config, 2) {
        Ok(r) => r,
        Err(e) => return Ok(Verdict::Fail(e.to_string())),
    };
    let mut cells = 0;
    let mut margin = f64::INFINITY;
    for (oracle, other) in [(Task::OraclePipeline, Task::Pipeline), (Task::OracleMultitask, Task::MultitaskEmotion)] {
        let (o, a, b) = (find(&results, oracle), find(&results, other), find(&results, Task::T2E));
        for ((co, ca), cb) in o.cells.iter().zip(&a.cells).zip(&b.cells) {
            margin = margin.min(co.metrics.micro_f1 - ca.metrics.micro_f1.max(cb.metrics.micro_f1));
            cells += 1;
        }
    }
    Ok(verdict(
        margin >= 0.0,
        format!("{cells} oracle cells, min(oracle − best constituent) micro-F1 = {margin:.4} >= 0"),
    ))
}

const REPLICATION_TARGETS: [(Task, f64); 8] = [
    (Task::T2E, 0.60),
    (Task::Pipeline, 0.48),
    (Task::A2EGold, 0.66),
    (Task::MultitaskEmotion, 0.59),
    (Task::OraclePipeline, 0.70),
    (Task::OracleMultitask, 0.66),
    (Task::T2A, 0.75),
    (Task::MultitaskAppraisal, 0.71),
];

fn replication(corpus: Option<&Corpus>) -> Outcome {
    let (Some(corpus), Some(vectors)) = (corpus, std::env::var_os("APPRAISE_EMBEDDINGS")) else {
        return Ok(Verdict::Skip("APPRAISE_CORPUS and APPRAISE_EMBEDDINGS not both set".into()));
    };
    let start = Instant::now();
    let config = ModelConfig::default();
    let vocab = Vocabulary::from_corpus(corpus);
    let table = load_embeddings(Path::new(&vectors), &vocab, config.embedding_dim)?;
    let encoder = TextEncoder::new(vocab, table, config.max_len);
    let plan = split_folds(corpus, 10, 10, 0)?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let results = run_batch(&Task::ALL, corpus, &plan, Some(&encoder), &config, jobs)?;
    let elapsed = start.elapsed();

    let micro = |t: Task| find(&results, t).aggregate.micro_f1;
    let mut misses = Vec::new();
    let mut detail = Vec::new();
    for (task, target) in REPLICATION_TARGETS {
        let got = micro(task);
        detail.push(format!("{} {got:.2}/{target:.2}", task.name()));
        if (got - target).abs() > 0.05 {
            misses.push(task.name());
        }
    }
    let ordering = micro(Task::A2EGold) > micro(Task::T2E) && micro(Task::T2E) > micro(Task::Pipeline);
    let per_class = &find(&results, Task::A2EGold).aggregate.per_class;
    let best = (0..7).max_by(|&a, &b| per_class[a].f1.total_cmp(&per_class[b].f1)).unwrap();
    let joy_best = best == Emotion::Joy.index();
    Ok(verdict(
        misses.is_empty() && ordering && joy_best && elapsed < Duration::from_secs(1800),
        format!(
            "micro-F1 got/target {}; outside ±0.05: {misses:?}; A→E > T→E > pipeline {ordering}; joy best for A→E {joy_best}; {:.0}s < 1800s",
            detail.join(", "),
            elapsed.as_secs_f64()
        ),
    ))
}

fn determinism() -> Outcome {
    let corpus = synthesize_corpus(9, 10, SynthesisRule::Noisy(0.1))?;
    let config = ModelConfig { epochs: 4, ..small_config() };
    let encoder = random_encoder(&corpus, &config);
    let plan = split_folds(&corpus, 3, 2, 9)?;
    let render = |jobs: usize| -> Result<Files, Box<dyn std::error::Error>> {
        let results = run_batch(&Task::ALL, &corpus, &plan, Some(&encoder), &config, jobs)?;
        let dir = tempfile::tempdir()?;
        emit_report(&results).write(dir.path())?;
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir.path())? {
            let path = entry?.path();
            files.push((path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path)?));
        }
        for r in &results {
            files.push((format!("predictions/{}", r.task.name()), predictions_table(r, &corpus).to_tsv().into_bytes()));
        }
        files.sort();
        Ok(files)
    };
    let (a, b, c) = (render(1)?, render(1)?, render(4)?);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .zip(&c)
        .filter(|((x, y), z)| x != y || x != z)
        .map(|((x, _), _)| x.0.as_str())
        .collect();
    Ok(verdict(
        differing.is_empty() && a.len() == b.len() && a.len() == c.len(),
        format!("{} report files byte-identical across 3 runs (jobs 1, 1, 4); differing {differing:?}", a.len()),
    ))
}

fn main() -> ExitCode {
    let corpus = match released_corpus() {
        Ok(c) => c,
        Err(e) => {
            println!("cannot load APPRAISE_CORPUS: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<Criterion> = vec![
        ("1 gradient correctness", Box::new(gradient_correctness)),
        ("2 kappa oracle equivalence", Box::new(kappa_oracle)),
        ("3 corpus analytics", Box::new(|| corpus_analytics(corpus.as_ref()))),
        ("4 separable synthetic suite", Box::new(separable_synthetic)),
        ("5 oracle dominance", Box::new(oracle_dominance)),
        ("6 published-score replication", Box::new(|| replication(corpus.as_ref()))),
        ("7 determinism", Box::new(determinism)),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let line = match check() {
            Ok(Verdict::Pass(d)) => format!("PASS  criterion {name}: {d}"),
            Ok(Verdict::Skip(d)) => format!("SKIP  criterion {name}: {d}"),
            Ok(Verdict::Fail(d)) => {
                failures += 1;
                format!("FAIL  criterion {name}: {d}")
            }
            Err(e) => {
                failures += 1;
                format!("FAIL  criterion {name}: error: {e}")
            }
        };
        println!("{line}");
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
