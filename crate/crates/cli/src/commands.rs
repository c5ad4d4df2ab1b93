//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use appraise_core::agreement::{agreement_report, cooccurrence, sign_agreement, ReferenceProfile};
use appraise_core::corpus::{load_corpus, save_corpus, split_folds, synthesize_corpus, Schema, SynthesisRule};
use appraise_core::encoder::{load_embeddings, EmbeddingTable, TextEncoder, Vocabulary};
use appraise_core::evaluation::{
    appraisal_listing, emit_report, error_analysis, error_table, predictions_table, run_batch, RunMetadata, RunResult,
    Task, AGGREGATION,
};
use appraise_core::models::model_gradcheck;
use appraise_core::nn::gradcheck::layer_suite;
use appraise_core::nn::OpKind;
use appraise_core::{Corpus, FoldPlan, Table};
use log::{info, warn};

use crate::args::{AgreementArgs, CorpusArgs, FoldsArgs, GradcheckArgs, RunArgs, SynthArgs};
use crate::config::RunConfig;
use crate::exit::{Classify, Failure, Kind, Outcome};

const LISTING_PER_EMOTION: usize = 3;

fn read_corpus(path: &Path, schema: Option<&Path>) -> Outcome<Corpus> {
    let schema = match schema {
        Some(p) => {
            let text = fs::read_to_string(p).data_context(format!("reading {}", p.display()))?;
            Some(Schema::parse(&text).data_err()?)
        }
        None => None,
    };
    let corpus = load_corpus(path, schema.as_ref()).data_err()?;
    corpus.validate().data_err()?;
    info!("loaded {} instances from {}", corpus.len(), path.display());
    Ok(corpus)
}

/// Creates `<parent>/<prefix>-NNN`, taking the first free number.
fn create_run_dir(parent: &Path, prefix: &str) -> Outcome<PathBuf> {
    fs::create_dir_all(parent).data_context(format!("creating {}", parent.display()))?;
    for n in 1.. {
        let dir = parent.join(format!("{prefix}-{n:03}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e).data_context(format!("creating {}", dir.display())),
        }
    }
    unreachable!()
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).data_context(format!("writing {}", path.display()))
}

fn write_table(dir: &Path, stem: &str, table: &Table) -> Outcome {
    write(&dir.join(format!("{stem}.tsv")), &table.to_tsv())?;
    write(&dir.join(format!("{stem}.md")), &table.to_markdown())
}

pub fn agreement(args: &AgreementArgs) -> Outcome {
    let corpus = read_corpus(&args.corpus.corpus, args.corpus.schema.as_deref())?;
    if args.require_votes && !corpus.has_votes() {
        return Err(Failure::data(format!(
            "{} carries no per-annotator votes (--require-votes)",
            args.corpus.corpus.display()
        )));
    }
    let dir = create_run_dir(&args.output, "agreement")?;
    let counts = cooccurrence(&corpus).data_err()?;
    let reference = ReferenceProfile::smith_ellsworth();
    let signs = sign_agreement(&counts, &reference);

    let mut sections = vec![("Appraisal/emotion co-occurrence", "cooccurrence", counts.to_table())];
    if corpus.has_votes() {
        let report = agreement_report(&corpus).data_err()?;
        sections.insert(0, ("Cohen's kappa", "agreement", report.to_table()));
    } else {
        warn!("no annotator votes; skipping the agreement table");
    }
    sections.push(("Reference appraisal profiles", "reference", reference.to_table()));
    sections.push(("Sign agreement with the reference profiles", "sign-agreement", signs.to_table()));

    for (title, stem, table) in &sections {
        write_table(&dir, stem, table)?;
        println!("## {title}\n\n{}", table.to_markdown());
    }
    let meta = serde_json::json!({
        "corpus": args.corpus.corpus.display().to_string(),
        "corpus_provenance": corpus.provenance,
        "instances": corpus.len(),
        "has_votes": corpus.has_votes(),
        "sign_agreement_rate": signs.rate,
    });
    write(&dir.join("metadata.json"), &format!("{}\n", serde_json::to_string_pretty(&meta).expect("json")))?;
    println!("run directory: {}", dir.display());
    Ok(())
}

fn build_encoder(config: &RunConfig, corpus: &Corpus) -> Outcome<(TextEncoder, String, Option<f64>)> {
    let model = config.model_config();
    let vocab = Vocabulary::from_corpus(corpus);
    let (table, source, coverage) = match &config.embeddings {
        Some(path) => {
            let table = load_embeddings(path, &vocab, model.embedding_dim).data_err()?;
            let rate = table.coverage.rate();
            (table, path.display().to_string(), Some(rate))
        }
        None => {
            warn!("no word vectors given; using random {}-dim vectors", model.embedding_dim);
            let table = EmbeddingTable::random(&vocab, model.embedding_dim, config.seed);
            (table, format!("random(dim={}, seed={})", model.embedding_dim, config.seed), None)
        }
    };
    let mut table = table;
    table.trainable = model.train_embeddings;
    Ok((TextEncoder::new(vocab, table, model.max_len), source, coverage))
}

pub fn run(args: &RunArgs) -> Outcome {
    let config = RunConfig::resolve(args)?;
    let tasks = config.task_list()?;
    let corpus = read_corpus(&config.corpus, config.schema.as_deref())?;
    if tasks.iter().any(|t| t.needs_gold_appraisal()) && !corpus.has_gold_appraisal() {
        return Err(Failure::data(format!(
            "tasks {} need gold appraisals, which {} lacks",
            tasks.iter().filter(|t| t.needs_gold_appraisal()).map(|t| t.name()).collect::<Vec<_>>().join(", "),
            config.corpus.display()
        )));
    }
    let plan = match &config.folds {
        Some(path) => {
            let json = fs::read_to_string(path).data_context(format!("reading {}", path.display()))?;
            let plan = FoldPlan::from_json(&json, &corpus).data_err()?;
            if plan.k != config.k || plan.repetitions() != config.repetitions {
                warn!(
                    "fold plan has k={} and {} repetitions; using it instead of k={} and {}",
                    plan.k,
                    plan.repetitions(),
                    config.k,
                    config.repetitions
                );
            }
            plan
        }
        None => split_folds(&corpus, config.k, config.repetitions, config.seed).data_err()?,
    };
    let (encoder, embeddings, coverage) = if tasks.iter().any(|t| t.needs_text()) {
        let (e, s, c) = build_encoder(&config, &corpus)?;
        (Some(e), s, c)
    } else {
        (None, "none".to_string(), None)
    };

    let dir = create_run_dir(&config.output, "run")?;
    let metadata = RunMetadata {
        corpus: config.corpus.display().to_string(),
        corpus_provenance: corpus.provenance.clone(),
        instances: corpus.len(),
        embeddings,
        embedding_coverage: coverage,
        tasks: tasks.iter().map(|t| t.name().to_string()).collect(),
        k: plan.k,
        repetitions: plan.repetitions(),
        fold_seed: plan.seed,
        partition_hash: plan.partition_hash(),
        aggregation: AGGREGATION.to_string(),
        jobs: config.jobs,
        model: config.model_config(),
    };
    write(&dir.join("config.toml"), &config.to_toml())?;
    write(&dir.join("folds.json"), &format!("{}\n", plan.to_json()))?;
    metadata.write(&dir.join("metadata.json")).map_err(Failure::eval)?;
    println!("partition hash: {}", metadata.partition_hash);

    let results = run_batch(&tasks, &corpus, &plan, encoder.as_ref(), &config.model_config(), config.jobs)
        .map_err(Failure::eval)?;
    let report = emit_report(&results);
    report.write(&dir).map_err(Failure::eval)?;
    write_extras(&dir, &results, &corpus)?;

    if !report.emotion.rows().is_empty() && report.emotion.columns().len() > 1 {
        println!("\n## Emotion prediction (%)\n\n{}", report.emotion.to_markdown());
    }
    if report.appraisal.columns().len() > 1 {
        println!("\n## Appraisal prediction (%)\n\n{}", report.appraisal.to_markdown());
    }
    for r in &results {
        println!(
            "{:<20} macro-F1 {:.4}  micro-F1 {:.4}",
            r.task.name(),
            r.aggregate.macro_f1,
            r.aggregate.micro_f1
        );
    }
    println!("run directory: {}", dir.display());
    Ok(())
}

fn write_extras(dir: &Path, results: &[RunResult], corpus: &Corpus) -> Outcome {
    let pred_dir = dir.join("predictions");
    fs::create_dir_all(&pred_dir).data_context(format!("creating {}", pred_dir.display()))?;
    for r in results {
        write(&pred_dir.join(format!("{}.tsv", r.task.name())), &predictions_table(r, corpus).to_tsv())?;
    }
    let find = |t: Task| results.iter().find(|r| r.task == t);
    if let (Some(a2e), Some(t2e)) = (find(Task::A2EGold), find(Task::T2E)) {
        let records = error_analysis(a2e, t2e, corpus, 0).map_err(Failure::eval)?;
        write_table(dir, "error-analysis", &error_table(&records))?;
    }
    for task in [Task::Pipeline, Task::MultitaskAppraisal] {
        if let Some(r) = find(task) {
            let listing = appraisal_listing(r, corpus, 0, LISTING_PER_EMOTION).map_err(Failure::eval)?;
            write_table(dir, &format!("appraisal-listing-{}", task.name()), &listing)?;
        }
    }
    Ok(())
}

pub fn gradcheck(args: &GradcheckArgs) -> Outcome {
    let fault = match &args.inject_sign_error {
        Some(name) => Some(OpKind::from_name(name).ok_or_else(|| Failure::usage(format!("unknown op `{name}`")))?),
        None => None,
    };
    if args.cases == 0 {
        return Err(Failure::usage("--cases must be at least 1"));
    }
    let mut reports = layer_suite(args.seed, args.cases, fault).map_err(|e| Failure::new(Kind::Check, e))?;
    reports.extend(model_gradcheck(args.seed, args.cases, fault).map_err(|e| Failure::new(Kind::Check, e))?);
    for r in &reports {
        println!(
            "{}  {:<22} max_rel_error {:.3e}  checked {:>5}  skipped {:>3}  cases {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.outcome.max_rel_error,
            r.outcome.checked,
            r.outcome.skipped,
            r.cases
        );
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(
            Kind::Check,
            anyhow::anyhow!("gradient check failed for: {}", failed.join(", ")),
        ))
    }
}

pub fn synth(args: &SynthArgs) -> Outcome {
    let rule = match args.noise {
        Some(p) => SynthesisRule::Noisy(p),
        None => SynthesisRule::Deterministic,
    };
    let corpus = synthesize_corpus(args.seed, args.per_emotion, rule).usage_err()?;
    save_corpus(&corpus, &args.out).data_err()?;
    println!("wrote {} instances to {}", corpus.len(), args.out.display());
    Ok(())
}

pub fn folds(args: &FoldsArgs) -> Outcome {
    let CorpusArgs { corpus, schema } = &args.corpus;
    let corpus = read_corpus(corpus, schema.as_deref())?;
    let plan = split_folds(&corpus, args.k, args.repetitions, args.seed).data_err()?;
    match &args.out {
        Some(path) => {
            write(path, &format!("{}\n", plan.to_json()))?;
            println!("partition hash: {}", plan.partition_hash());
        }
        None => {
            println!("{}", plan.to_json());
            eprintln!("partition hash: {}", plan.partition_hash());
        }
    }
    Ok(())
}
