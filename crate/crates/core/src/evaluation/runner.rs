//! Repeated cross-validation over a shared fold plan.

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{compute_metrics, compute_multilabel_metrics, Metrics};
use super::EvalError;
use crate::agreement::predict_emotion_reference;
use crate::corpus::{AppraisalVector, Corpus, Emotion, Fold, FoldPlan, Instance};
use crate::encoder::TextEncoder;
use crate::models::{
    oracle_ensemble, predict_pipeline, train_a2e, train_multitask, train_t2a, train_t2e, ModelConfig, ModelError,
};
use crate::nn::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Task {
    T2E,
    T2A,
    A2EGold,
    Pipeline,
    MultitaskEmotion,
    MultitaskAppraisal,
    OraclePipeline,
    OracleMultitask,
    ReferenceBaseline,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::T2E,
        Task::T2A,
        Task::A2EGold,
        Task::Pipeline,
        Task::MultitaskEmotion,
        Task::MultitaskAppraisal,
        Task::OraclePipeline,
        Task::OracleMultitask,
        Task::ReferenceBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::T2E => "t2e",
            Task::T2A => "t2a",
            Task::A2EGold => "a2e-gold",
            Task::Pipeline => "pipeline",
            Task::MultitaskEmotion => "multitask-emotion",
            Task::MultitaskAppraisal => "multitask-appraisal",
            Task::OraclePipeline => "oracle-pipeline",
            Task::OracleMultitask => "oracle-multitask",
            Task::ReferenceBaseline => "reference-baseline",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Task::T2E => "T→E",
            Task::T2A => "T→A",
            Task::A2EGold => "A→E(gold)",
            Task::Pipeline => "T→A→E",
            Task::MultitaskEmotion => "T→A/E",
            Task::MultitaskAppraisal => "T→A/E appraisal",
            Task::OraclePipeline => "Oracle(T→A→E, T→E)",
            Task::OracleMultitask => "Oracle(T→A/E, T→E)",
            Task::ReferenceBaseline => "Reference",
        }
    }

    /// Scored on the seven appraisal dimensions rather than on emotions.
    pub fn is_appraisal(self) -> bool {
        matches!(self, Task::T2A | Task::MultitaskAppraisal)
    }

    pub fn needs_text(self) -> bool {
        !matches!(self, Task::A2EGold | Task::ReferenceBaseline)
    }

    pub fn needs_gold_appraisal(self) -> bool {
        self != Task::T2E
    }

    /// Expands a command-line task name. `multitask` covers both heads and
    /// `all` every task.
    pub fn parse_list(name: &str) -> Option<Vec<Task>> {
        match name {
            "all" => Some(Task::ALL.to_vec()),
            "multitask" => Some(vec![Task::MultitaskEmotion, Task::MultitaskAppraisal]),
            _ => Task::ALL.iter().find(|t| t.name() == name).map(|&t| vec![t]),
        }
    }
}

/// One test-instance prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub repetition: usize,
    pub fold: usize,
    /// Corpus index of the instance.
    pub index: usize,
    pub emotion: Option<Emotion>,
    pub appraisal: Option<AppraisalVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub repetition: usize,
    pub fold: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub task: Task,
    pub partition_hash: String,
    pub cells: Vec<Cell>,
    /// Mean over all repetition × fold cells.
    pub aggregate: Metrics,
    pub predictions: Vec<Prediction>,
}

/// Models trained once per fold and shared by every task that needs them.
#[derive(Default)]
struct Needs {
    t2e: bool,
    t2a: bool,
    a2e: bool,
    multitask: bool,
}

impl Needs {
    fn of(tasks: &[Task]) -> Self {
        let has = |ts: &[Task]| tasks.iter().any(|t| ts.contains(t));
        Needs {
            t2e: has(&[Task::T2E, Task::OraclePipeline, Task::OracleMultitask]),
            t2a: has(&[Task::T2A, Task::Pipeline, Task::OraclePipeline]),
            a2e: has(&[Task::A2EGold, Task::Pipeline, Task::OraclePipeline]),
            multitask: has(&[Task::MultitaskEmotion, Task::MultitaskAppraisal, Task::OracleMultitask]),
        }
    }
}

fn fold_error(fold: &Fold) -> impl Fn(ModelError) -> EvalError + '_ {
    move |source| EvalError::Fold {
        repetition: fold.repetition,
        fold: fold.index,
        source,
    }
}

fn accuracy(pred: &[Emotion], gold: &[Emotion]) -> f64 {
    pred.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / gold.len().max(1) as f64
}

/// Predictions of every requested task on the test part of one fold.
fn run_fold(
    tasks: &[Task],
    fold: &Fold,
    corpus: &Corpus,
    encoder: Option<&TextEncoder>,
    config: &ModelConfig,
) -> Result<Vec<Vec<Prediction>>, EvalError> {
    let needs = Needs::of(tasks);
    let seed = Rng::derive(config.seed, &[0xF0, fold.repetition as u64, fold.index as u64]).next_u64();
    let config = config.with_seed(seed);
    let train: Vec<&Instance> = fold.train.iter().map(|&i| &corpus.instances[i]).collect();
    let err = fold_error(fold);
    let text_encoder = || encoder.ok_or(EvalError::MissingEncoder);

    let t2e = needs.t2e.then(|| train_t2e(&train, text_encoder()?, &config).map_err(&err)).transpose()?;
    let t2a = needs.t2a.then(|| train_t2a(&train, text_encoder()?, &config).map_err(&err)).transpose()?;
    let a2e = needs.a2e.then(|| train_a2e(&train, &config).map_err(&err)).transpose()?;
    let multitask = needs
        .multitask
        .then(|| train_multitask(&train, text_encoder()?, &config).map_err(&err))
        .transpose()?;

    let mut out = vec![Vec::with_capacity(fold.test.len()); tasks.len()];
    let mut gold_emotions = Vec::with_capacity(fold.test.len());
    // (oracle, component a, component b) predictions for the dominance check
    let mut oracle_pipeline = (Vec::new(), Vec::new(), Vec::new());
    let mut oracle_multitask = (Vec::new(), Vec::new(), Vec::new());
    for &index in &fold.test {
        let inst = &corpus.instances[index];
        gold_emotions.push(inst.emotion);
        let indices = match encoder {
            Some(enc) if tasks.iter().any(|t| t.needs_text()) => enc.encode(&inst.text),
            _ => Vec::new(),
        };
        let gold_appraisal = || inst.gold_appraisal.ok_or_else(|| EvalError::MissingAppraisal(inst.id.clone()));
        let t2e_pred = t2e.as_ref().map(|m| m.predict(&indices)).transpose().map_err(&err)?;
        let pipeline = match (&t2a, &a2e) {
            (Some(t2a), Some(a2e)) if tasks.iter().any(|t| matches!(t, Task::Pipeline | Task::OraclePipeline)) => {
                Some(predict_pipeline(t2a, a2e, &indices).map_err(&err)?)
            }
            _ => None,
        };
        let mt = multitask.as_ref().map(|m| m.predict(&indices)).transpose().map_err(&err)?;
        if let (Some(p), Some(t)) = (pipeline, t2e_pred) {
            let o = oracle_ensemble(p.1, t, inst.emotion);
            oracle_pipeline.0.push(o);
            oracle_pipeline.1.push(p.1);
            oracle_pipeline.2.push(t);
        }
        if let (Some(m), Some(t)) = (mt, t2e_pred) {
            let o = oracle_ensemble(m.0, t, inst.emotion);
            oracle_multitask.0.push(o);
            oracle_multitask.1.push(m.0);
            oracle_multitask.2.push(t);
        }

        for (slot, &task) in out.iter_mut().zip(tasks) {
            let (emotion, appraisal) = match task {
                Task::T2E => (t2e_pred, None),
                Task::T2A => (None, Some(t2a.as_ref().expect("t2a").predict(&indices).map_err(&err)?)),
                Task::A2EGold => (Some(a2e.as_ref().expect("a2e").predict(&gold_appraisal()?).map_err(&err)?), None),
                Task::Pipeline => {
                    let (bits, e) = pipeline.expect("pipeline");
                    (Some(e), Some(bits))
                }
                Task::MultitaskEmotion | Task::MultitaskAppraisal => {
                    let (e, bits) = mt.expect("multitask");
                    (Some(e), Some(bits))
                }
                Task::OraclePipeline => (oracle_pipeline.0.last().copied(), None),
                Task::OracleMultitask => (oracle_multitask.0.last().copied(), None),
                Task::ReferenceBaseline => (Some(predict_emotion_reference(gold_appraisal()?)), None),
            };
            slot.push(Prediction {
                repetition: fold.repetition,
                fold: fold.index,
                index,
                emotion,
                appraisal,
            });
        }
    }

    for (task, (oracle, a, b)) in [
        (Task::OraclePipeline, &oracle_pipeline),
        (Task::OracleMultitask, &oracle_multitask),
    ] {
        if oracle.is_empty() {
            continue;
        }
        let (o, best) = (
            accuracy(oracle, &gold_emotions),
            accuracy(a, &gold_emotions).max(accuracy(b, &gold_emotions)),
        );
        if o < best {
            return Err(EvalError::OracleViolation {
                task: task.name(),
                repetition: fold.repetition,
                fold: fold.index,
                oracle: o,
                best,
            });
        }
    }
    info!("repetition {} fold {} done", fold.repetition, fold.index);
    Ok(out)
}

fn check_inputs(tasks: &[Task], corpus: &Corpus, plan: &FoldPlan, encoder: Option<&TextEncoder>) -> Result<(), EvalError> {
    if !plan.matches(corpus) {
        return Err(EvalError::FoldPlanMismatch(format!(
            "plan covers {} instances, corpus {} has {}",
            plan.corpus_len(),
            corpus.name,
            corpus.len()
        )));
    }
    if encoder.is_none() && tasks.iter().any(|t| t.needs_text()) {
        return Err(EvalError::MissingEncoder);
    }
    if tasks.iter().any(|t| t.needs_gold_appraisal()) {
        if let Some(i) = corpus.iter().find(|i| i.gold_appraisal.is_none()) {
            return Err(EvalError::MissingAppraisal(i.id.clone()));
        }
    }
    Ok(())
}

/// Runs several tasks on identical folds. Each model is trained once per
/// fold and shared by every task that uses it. Folds run on `jobs`
/// threads; results do not depend on `jobs`.
pub fn run_batch(
    tasks: &[Task],
    corpus: &Corpus,
    plan: &FoldPlan,
    encoder: Option<&TextEncoder>,
    config: &ModelConfig,
    jobs: usize,
) -> Result<Vec<RunResult>, EvalError> {
    check_inputs(tasks, corpus, plan, encoder)?;
    config.validate().map_err(EvalError::Config)?;
    let mut tasks = tasks.to_vec();
    tasks.sort();
    tasks.dedup();
    let folds: Vec<Fold> = plan.folds().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
    let per_fold: Vec<Vec<Vec<Prediction>>> = pool.install(|| {
        folds
            .par_iter()
            .map(|fold| run_fold(&tasks, fold, corpus, encoder, config))
            .collect::<Result<_, _>>()
    })?;

    let hash = plan.partition_hash();
    tasks
        .iter()
        .enumerate()
        .map(|(t, &task)| {
            let mut cells = Vec::with_capacity(folds.len());
            let mut predictions = Vec::new();
            for (fold, outputs) in folds.iter().zip(&per_fold) {
                let preds = &outputs[t];
                let metrics = if task.is_appraisal() {
                    let gold: Vec<AppraisalVector> =
                        preds.iter().map(|p| corpus.instances[p.index].gold_appraisal.expect("checked")).collect();
                    let pred: Vec<AppraisalVector> = preds.iter().map(|p| p.appraisal.expect("appraisal")).collect();
                    compute_multilabel_metrics(&gold, &pred)?
                } else {
                    let gold: Vec<usize> = preds.iter().map(|p| corpus.instances[p.index].emotion.index()).collect();
                    let pred: Vec<usize> = preds.iter().map(|p| p.emotion.expect("emotion").index()).collect();
                    compute_metrics(&gold, &pred, Emotion::COUNT)?
                };
                cells.push(Cell {
                    repetition: fold.repetition,
                    fold: fold.index,
                    metrics,
                });
                predictions.extend_from_slice(preds);
            }
            let aggregate = Metrics::mean(&cells.iter().map(|c| c.metrics.clone()).collect::<Vec<_>>())
                .expect("plans have at least one fold");
            Ok(RunResult {
                task,
                partition_hash: hash.clone(),
                cells,
                aggregate,
                predictions,
            })
        })
        .collect()
}

/// A single task; see [`run_batch`].
pub fn run_experiment(
    task: Task,
    corpus: &Corpus,
    plan: &FoldPlan,
    encoder: Option<&TextEncoder>,
    config: &ModelConfig,
) -> Result<RunResult, EvalError> {
    Ok(run_batch(&[task], corpus, plan, encoder, config, 1)?.remove(0))
}
