//! Instance listings for qualitative error analysis.

use super::runner::{Prediction, RunResult};
use super::EvalError;
use crate::corpus::{Corpus, Dimension, Emotion};
use crate::table::Table;

/// An instance the appraisal model classifies correctly from gold
/// appraisals while the text model does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorRecord {
    pub id: String,
    pub text: String,
    pub gold: Emotion,
    pub appraisal_model: Emotion,
    pub text_model: Emotion,
}

fn by_instance(result: &RunResult, repetition: usize, n: usize) -> Vec<Option<Prediction>> {
    let mut out = vec![None; n];
    for p in result.predictions.iter().filter(|p| p.repetition == repetition) {
        out[p.index] = Some(*p);
    }
    out
}

/// Instances of `repetition` where `a2e` (gold appraisals) is right and
/// `t2e` is wrong, in corpus order.
pub fn error_analysis(
    a2e: &RunResult,
    t2e: &RunResult,
    corpus: &Corpus,
    repetition: usize,
) -> Result<Vec<ErrorRecord>, EvalError> {
    if a2e.partition_hash != t2e.partition_hash {
        return Err(EvalError::FoldPlanMismatch(format!(
            "{} and {} were evaluated on different fold plans",
            a2e.task.name(),
            t2e.task.name()
        )));
    }
    let a = by_instance(a2e, repetition, corpus.len());
    let t = by_instance(t2e, repetition, corpus.len());
    let mut out = Vec::new();
    for (i, inst) in corpus.iter().enumerate() {
        let (Some(pa), Some(pt)) = (a[i], t[i]) else {
            if a[i].is_some() != t[i].is_some() {
                return Err(EvalError::FoldPlanMismatch(format!("instance {} scored by only one run", inst.id)));
            }
            continue;
        };
        if pa.fold != pt.fold {
            return Err(EvalError::FoldPlanMismatch(format!("instance {} tested in different folds", inst.id)));
        }
        let (Some(ea), Some(et)) = (pa.emotion, pt.emotion) else {
            return Err(EvalError::InvalidArgument("error analysis needs emotion predictions".into()));
        };
        if ea == inst.emotion && et != inst.emotion {
            out.push(ErrorRecord {
                id: inst.id.clone(),
                text: inst.text.clone(),
                gold: inst.emotion,
                appraisal_model: ea,
                text_model: et,
            });
        }
    }
    Ok(out)
}

pub fn error_table(records: &[ErrorRecord]) -> Table {
    let mut table = Table::new(["Gold Emotion", "A→E", "T→E", "Text"].map(String::from).to_vec());
    for r in records {
        table.push(vec![
            r.gold.title().to_string(),
            r.appraisal_model.title().to_string(),
            r.text_model.title().to_string(),
            r.text.clone(),
        ]);
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Appraisal vector and emotion both right.
    AllCorrect,
    /// Appraisal vector right, emotion wrong.
    EmotionWrong,
    /// Both wrong.
    BothWrong,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::AllCorrect, Block::EmotionWrong, Block::BothWrong];

    pub fn title(self) -> &'static str {
        match self {
            Block::AllCorrect => "Appr+Emo corr.",
            Block::EmotionWrong => "Emo incorr.",
            Block::BothWrong => "Appr+Emo incorr.",
        }
    }
}

/// Examples of joint appraisal and emotion predictions (pipeline or
/// multitask) in three blocks, up to `per_emotion` instances per gold
/// emotion and block. Predicted bits that differ from gold carry a `*`.
pub fn appraisal_listing(result: &RunResult, corpus: &Corpus, repetition: usize, per_emotion: usize) -> Result<Table, EvalError> {
    let mut columns = vec!["Block".to_string(), "Emotion (G/P)".to_string()];
    columns.extend(Dimension::ALL.iter().map(|d| d.abbrev().to_string()));
    columns.push("Text".into());
    let mut table = Table::new(columns);
    let preds = by_instance(result, repetition, corpus.len());
    for block in Block::ALL {
        for emotion in Emotion::ALL {
            let mut taken = 0;
            for (i, inst) in corpus.iter().enumerate() {
                if taken == per_emotion {
                    break;
                }
                let Some(p) = preds[i] else { continue };
                if inst.emotion != emotion {
                    continue;
                }
                let (Some(pe), Some(pa), Some(ga)) = (p.emotion, p.appraisal, inst.gold_appraisal) else {
                    return Err(EvalError::InvalidArgument(format!(
                        "{} has no joint appraisal and emotion predictions",
                        result.task.name()
                    )));
                };
                let this = match (pa == ga, pe == inst.emotion) {
                    (true, true) => Block::AllCorrect,
                    (true, false) => Block::EmotionWrong,
                    (false, false) => Block::BothWrong,
                    (false, true) => continue,
                };
                if this != block {
                    continue;
                }
                taken += 1;
                let label = if pe == inst.emotion {
                    inst.emotion.title().to_string()
                } else {
                    format!("{}/{}", inst.emotion.title(), pe.title())
                };
                let mut row = vec![block.title().to_string(), label];
                for d in Dimension::ALL {
                    let bit = u8::from(pa.get(d));
                    row.push(if pa.get(d) == ga.get(d) { bit.to_string() } else { format!("{bit}*") });
                }
                row.push(inst.text.clone());
                table.push(row);
            }
        }
    }
    Ok(table)
}
