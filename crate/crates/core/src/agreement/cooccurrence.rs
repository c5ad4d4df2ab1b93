use super::AgreementError;
use crate::corpus::{Corpus, Dimension, Emotion};
use crate::table::{fmt_decimal, Table};

/// Counts of instances per (emotion, dimension) with the dimension set,
/// plus ratios normalised by the emotion's instance count.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceTable {
    pub counts: [[usize; 7]; 7],
    pub emotion_totals: [usize; 7],
}

impl CooccurrenceTable {
    pub fn from_counts(counts: [[usize; 7]; 7], emotion_totals: [usize; 7]) -> Self {
        CooccurrenceTable {
            counts,
            emotion_totals,
        }
    }

    pub fn count(&self, e: Emotion, d: Dimension) -> usize {
        self.counts[e.index()][d.index()]
    }

    /// `count / emotion total`, 0 for an emotion without instances.
    pub fn ratio(&self, e: Emotion, d: Dimension) -> f64 {
        match self.emotion_totals[e.index()] {
            0 => 0.0,
            n => self.count(e, d) as f64 / n as f64,
        }
    }

    pub fn dimension_total(&self, d: Dimension) -> usize {
        self.counts.iter().map(|row| row[d.index()]).sum()
    }

    /// Emotions as rows; count and ratio per dimension; a `Total` row of counts.
    pub fn to_table(&self) -> Table {
        let mut header = vec!["Emotion".to_string()];
        for d in Dimension::ALL {
            header.push(d.title().to_string());
            header.push(format!("{} ratio", d.title()));
        }
        let mut table = Table::new(header);
        for e in Emotion::ALL {
            let mut row = vec![e.title().to_string()];
            for d in Dimension::ALL {
                row.push(self.count(e, d).to_string());
                row.push(fmt_decimal(self.ratio(e, d)));
            }
            table.push(row);
        }
        let mut total = vec!["Total".to_string()];
        for d in Dimension::ALL {
            total.push(self.dimension_total(d).to_string());
            total.push(String::new());
        }
        table.push(total);
        table
    }
}

pub fn cooccurrence(corpus: &Corpus) -> Result<CooccurrenceTable, AgreementError> {
    let mut counts = [[0usize; 7]; 7];
    let mut totals = [0usize; 7];
    for inst in &corpus.instances {
        let gold = inst
            .gold_appraisal
            .ok_or_else(|| AgreementError::MissingAppraisal(inst.id.clone()))?;
        let e = inst.emotion.index();
        totals[e] += 1;
        for d in Dimension::ALL {
            if gold.get(d) {
                counts[e][d.index()] += 1;
            }
        }
    }
    Ok(CooccurrenceTable::from_counts(counts, totals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{prototype, synthesize_corpus, AppraisalVector, Instance, SynthesisRule};

    #[test]
    fn counts_follow_prototypes_on_clean_synthetic_data() {
        let corpus = synthesize_corpus(1, 12, SynthesisRule::Deterministic).unwrap();
        let t = cooccurrence(&corpus).unwrap();
        for e in Emotion::ALL {
            for d in Dimension::ALL {
                let expected = if prototype(e).get(d) { 12 } else { 0 };
                assert_eq!(t.count(e, d), expected);
                assert!((0.0..=1.0).contains(&t.ratio(e, d)));
            }
        }
    }

    #[test]
    fn column_totals_sum_counts() {
        let corpus = synthesize_corpus(4, 25, SynthesisRule::Noisy(0.3)).unwrap();
        let t = cooccurrence(&corpus).unwrap();
        for d in Dimension::ALL {
            let sum: usize = Emotion::ALL.iter().map(|&e| t.count(e, d)).sum();
            assert_eq!(sum, t.dimension_total(d));
        }
    }

    #[test]
    fn all_zero_appraisals_give_zero_counts() {
        let mut c = Corpus::new("z", "t");
        for (i, e) in Emotion::ALL.iter().enumerate() {
            c.instances
                .push(Instance::new(i.to_string(), "t", *e).with_appraisal(AppraisalVector::ZERO));
        }
        let t = cooccurrence(&c).unwrap();
        assert!(t.counts.iter().flatten().all(|&n| n == 0));
    }

    #[test]
    fn missing_gold_is_an_error() {
        let mut c = Corpus::new("z", "t");
        c.instances.push(Instance::new("q", "t", Emotion::Fear));
        assert_eq!(cooccurrence(&c), Err(AgreementError::MissingAppraisal("q".into())));
    }

    #[test]
    fn table_layout() {
        let corpus = synthesize_corpus(1, 3, SynthesisRule::Deterministic).unwrap();
        let table = cooccurrence(&corpus).unwrap().to_table();
        assert_eq!(table.columns().len(), 15);
        assert_eq!(table.rows().len(), 8);
        assert_eq!(table.rows()[7][0], "Total");
    }
}
