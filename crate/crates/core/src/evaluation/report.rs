//! Result tables: emotions or appraisal dimensions as rows, one P/R/F1
//! column group per task, values as whole percentages.

use std::fs;
use std::path::Path;

use super::runner::RunResult;
use super::EvalError;
use crate::corpus::{Corpus, Dimension, Emotion};
use crate::table::{fmt_percent, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub emotion: Table,
    pub appraisal: Table,
    pub cells: Table,
}

fn score_table(first: &str, labels: &[&str], results: &[&RunResult]) -> Table {
    let mut columns = vec![first.to_string()];
    for r in results {
        for m in ["P", "R", "F1"] {
            columns.push(format!("{} {m}", r.task.title()));
        }
    }
    let mut table = Table::new(columns);
    if results.is_empty() {
        return table;
    }
    for (c, label) in labels.iter().enumerate() {
        let mut row = vec![label.to_string()];
        for r in results {
            let s = &r.aggregate.per_class[c];
            row.extend([s.precision, s.recall, s.f1].map(fmt_percent));
        }
        table.push(row);
    }
    let mut macro_row = vec!["Macro avg.".to_string()];
    let mut micro_row = vec!["Micro avg.".to_string()];
    for r in results {
        let a = &r.aggregate;
        macro_row.extend([a.macro_precision, a.macro_recall, a.macro_f1].map(fmt_percent));
        micro_row.extend([a.micro_precision, a.micro_recall, a.micro_f1].map(fmt_percent));
    }
    table.push(macro_row);
    table.push(micro_row);
    table
}

/// Per-cell aggregate values with six decimals.
fn cell_table(results: &[RunResult]) -> Table {
    let mut table = Table::new(
        ["task", "repetition", "fold", "macro_p", "macro_r", "macro_f1", "micro_p", "micro_r", "micro_f1"]
            .map(String::from)
            .to_vec(),
    );
    for r in results {
        for c in &r.cells {
            let m = &c.metrics;
            let mut row = vec![r.task.name().to_string(), c.repetition.to_string(), c.fold.to_string()];
            row.extend(
                [m.macro_precision, m.macro_recall, m.macro_f1, m.micro_precision, m.micro_recall, m.micro_f1]
                    .map(|v| format!("{v:.6}")),
            );
            table.push(row);
        }
    }
    table
}

pub fn emit_report(results: &[RunResult]) -> Report {
    let (appraisal, emotion): (Vec<&RunResult>, Vec<&RunResult>) = results.iter().partition(|r| r.task.is_appraisal());
    let emotions: Vec<&str> = Emotion::ALL.iter().map(|e| e.title()).collect();
    let dims: Vec<&str> = Dimension::ALL.iter().map(|d| d.title()).collect();
    Report {
        emotion: score_table("Emotion", &emotions, &emotion),
        appraisal: score_table("Appraisal", &dims, &appraisal),
        cells: cell_table(results),
    }
}

impl Report {
    /// Writes `emotion`, `appraisal` and `cells` tables as `.tsv` and `.md`.
    pub fn write(&self, dir: &Path) -> Result<(), EvalError> {
        for (name, table) in [("emotion", &self.emotion), ("appraisal", &self.appraisal), ("cells", &self.cells)] {
            write_file(&dir.join(format!("{name}.tsv")), &table.to_tsv())?;
            write_file(&dir.join(format!("{name}.md")), &table.to_markdown())?;
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, content: &str) -> Result<(), EvalError> {
    fs::write(path, content).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One row per prediction: id, gold emotion, predicted emotion, predicted
/// appraisal bits (`-` when the task has none).
pub fn predictions_table(result: &RunResult, corpus: &Corpus) -> Table {
    let mut table = Table::new(
        ["repetition", "fold", "id", "gold", "predicted", "appraisal"]
            .map(String::from)
            .to_vec(),
    );
    for p in &result.predictions {
        let inst = &corpus.instances[p.index];
        table.push(vec![
            p.repetition.to_string(),
            p.fold.to_string(),
            inst.id.clone(),
            inst.emotion.name().to_string(),
            p.emotion.map_or("-".into(), |e| e.name().to_string()),
            p.appraisal.map_or("-".into(), |a| a.to_bit_string()),
        ]);
    }
    table
}
