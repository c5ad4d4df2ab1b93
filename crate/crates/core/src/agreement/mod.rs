//! Annotation aggregation and corpus analytics.
//!
//! Cohen's κ for binary labels, per-dimension majority voting over three
//! annotators, the emotion × appraisal co-occurrence table, and a
//! comparison against published per-emotion appraisal loadings.

mod cooccurrence;
mod reference;

use thiserror::Error;

use crate::corpus::{AppraisalVector, Corpus, Dimension};
use crate::table::{fmt_decimal, Table};

pub use cooccurrence::{cooccurrence, CooccurrenceTable};
pub use reference::{
    predict_emotion_reference, sign_agreement, Axis, ReferenceProfile, SignAgreement,
};

#[derive(Debug, Error, PartialEq)]
pub enum AgreementError {
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty label sequence")]
    EmptyInput,
    #[error("majority vote needs exactly 3 votes, got {0}")]
    WrongVoteCount(usize),
    #[error("instance `{0}` has no annotator votes")]
    MissingVotes(String),
    #[error("instance `{0}` has no gold appraisal")]
    MissingAppraisal(String),
}

/// Cohen's κ between two binary label sequences.
///
/// κ = (p_o − p_e) / (1 − p_e), with p_e from the marginal frequencies of
/// each sequence. When p_e = 1 (both sequences constant) the ratio is
/// undefined; 1 is returned for identical sequences and 0 otherwise.
pub fn cohens_kappa(a: &[bool], b: &[bool]) -> Result<f64, AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AgreementError::EmptyInput);
    }
    let n = a.len();
    let ones_a = a.iter().filter(|&&x| x).count();
    let ones_b = b.iter().filter(|&&x| x).count();
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();

    // Work in counts scaled by n² so the degenerate case is detected exactly.
    let chance = ones_a * ones_b + (n - ones_a) * (n - ones_b);
    let total = n * n;
    if chance == total {
        return Ok(if agree == n { 1.0 } else { 0.0 });
    }
    let observed = (agree * n) as f64;
    Ok((observed - chance as f64) / (total - chance) as f64)
}

/// Per-dimension majority of exactly three votes.
pub fn majority_vote(votes: &[AppraisalVector]) -> Result<AppraisalVector, AgreementError> {
    if votes.len() != 3 {
        return Err(AgreementError::WrongVoteCount(votes.len()));
    }
    let mut out = AppraisalVector::ZERO;
    for d in Dimension::ALL {
        let yes = votes.iter().filter(|v| v.get(d)).count();
        out.set(d, yes >= 2);
    }
    Ok(out)
}

/// Annotator index pairs, in report column order.
pub const ANNOTATOR_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    /// `pairwise[d][p]`: κ for dimension `d` between the annotators of `ANNOTATOR_PAIRS[p]`.
    pub pairwise: [[f64; 3]; 7],
    /// `vs_majority[d][a]`: κ between annotator `a` and the majority vote.
    pub vs_majority: [[f64; 3]; 7],
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl AgreementReport {
    pub fn pairwise_dimension_mean(&self, d: Dimension) -> f64 {
        mean(self.pairwise[d.index()])
    }

    pub fn majority_dimension_mean(&self, d: Dimension) -> f64 {
        mean(self.vs_majority[d.index()])
    }

    pub fn pair_mean(&self, pair: usize) -> f64 {
        mean(self.pairwise.iter().map(|row| row[pair]))
    }

    pub fn annotator_mean(&self, annotator: usize) -> f64 {
        mean(self.vs_majority.iter().map(|row| row[annotator]))
    }

    /// Mean over all dimensions and annotator pairs.
    pub fn pairwise_mean(&self) -> f64 {
        mean(self.pairwise.iter().flatten().copied())
    }

    pub fn majority_mean(&self) -> f64 {
        mean(self.vs_majority.iter().flatten().copied())
    }

    /// Dimensions as rows; pairwise and annotator-vs-majority κ as columns.
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(
            [
                "Appraisal Dimension",
                "A1/A2",
                "A1/A3",
                "A2/A3",
                "avg.",
                "A1",
                "A2",
                "A3",
                "avg.",
            ]
            .map(String::from)
            .to_vec(),
        );
        for d in Dimension::ALL {
            let i = d.index();
            let mut row = vec![d.title().to_string()];
            row.extend(self.pairwise[i].iter().map(|&k| fmt_decimal(k)));
            row.push(fmt_decimal(self.pairwise_dimension_mean(d)));
            row.extend(self.vs_majority[i].iter().map(|&k| fmt_decimal(k)));
            row.push(fmt_decimal(self.majority_dimension_mean(d)));
            table.push(row);
        }
        let mut avg = vec!["Average".to_string()];
        avg.extend((0..3).map(|p| fmt_decimal(self.pair_mean(p))));
        avg.push(fmt_decimal(self.pairwise_mean()));
        avg.extend((0..3).map(|a| fmt_decimal(self.annotator_mean(a))));
        avg.push(fmt_decimal(self.majority_mean()));
        table.push(avg);
        table
    }
}

/// Pairwise and annotator-vs-majority κ per appraisal dimension.
pub fn agreement_report(corpus: &Corpus) -> Result<AgreementReport, AgreementError> {
    if corpus.is_empty() {
        return Err(AgreementError::EmptyInput);
    }
    let mut columns: Vec<[Vec<bool>; 3]> = vec![Default::default(); 7];
    let mut majority: Vec<Vec<bool>> = vec![Vec::new(); 7];
    for inst in &corpus.instances {
        if inst.annotator_votes.len() != 3 {
            return Err(AgreementError::MissingVotes(inst.id.clone()));
        }
        let maj = majority_vote(&inst.annotator_votes)?;
        for d in Dimension::ALL {
            for (a, vote) in inst.annotator_votes.iter().enumerate() {
                columns[d.index()][a].push(vote.get(d));
            }
            majority[d.index()].push(maj.get(d));
        }
    }
    let mut report = AgreementReport {
        pairwise: [[0.0; 3]; 7],
        vs_majority: [[0.0; 3]; 7],
    };
    for d in 0..7 {
        for (p, &(x, y)) in ANNOTATOR_PAIRS.iter().enumerate() {
            report.pairwise[d][p] = cohens_kappa(&columns[d][x], &columns[d][y])?;
        }
        for (a, votes) in columns[d].iter().enumerate() {
            report.vs_majority[d][a] = cohens_kappa(votes, &majority[d])?;
        }
    }
    Ok(report)
}
