//! Emotion-labelled event descriptions with binary appraisal annotations.
//!
//! A [`Corpus`] is an ordered list of [`Instance`]s. Each instance carries a
//! discrete [`Emotion`], an optional gold [`AppraisalVector`] and, when the
//! per-annotator judgements are available, the three raw votes the gold
//! vector was aggregated from.

mod folds;
mod synth;
mod tsv;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::majority_vote;

pub use folds::{split_folds, Fold, FoldPlan};
pub use synth::{cue_tokens, prototype, synthesize_corpus, SynthesisRule};
pub use tsv::{corpus_to_tsv, load_corpus, save_corpus, Field, Schema};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("row {row}: unparseable value {value:?} in column `{column}`")]
    UnparseableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: duplicate instance id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("instance `{id}`: gold appraisal does not match the majority of its votes")]
    InconsistentGold { id: String },
    #[error("instance `{id}`: expected 0 or 3 annotator votes, found {count}")]
    VoteCount { id: String, count: usize },
    #[error("corpus of {size} instances cannot be split into {k} folds")]
    CorpusTooSmall { size: usize, k: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed fold plan: {0}")]
    MalformedPlan(String),
}

/// The seven discrete emotion categories, in their fixed tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Anger,
    Disgust,
    Fear,
    Guilt,
    Joy,
    Sadness,
    Shame,
}

impl Emotion {
    pub const COUNT: usize = 7;
    pub const ALL: [Emotion; 7] = [
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Guilt,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Shame,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Emotion> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Guilt => "guilt",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Shame => "shame",
        }
    }

    /// Capitalised name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            Emotion::Anger => "Anger",
            Emotion::Disgust => "Disgust",
            Emotion::Fear => "Fear",
            Emotion::Guilt => "Guilt",
            Emotion::Joy => "Joy",
            Emotion::Sadness => "Sadness",
            Emotion::Shame => "Shame",
        }
    }

    /// Index of the largest score; ties go to the earlier emotion.
    pub fn argmax(scores: &[f64]) -> Emotion {
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().take(Self::COUNT) {
            if s > scores[best] {
                best = i;
            }
        }
        Self::ALL[best]
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Emotion::ALL
            .iter()
            .copied()
            .find(|e| e.name() == lower)
            .ok_or_else(|| format!("unknown emotion {s:?}"))
    }
}

/// The seven binary appraisal dimensions, in annotation-question order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Attention,
    Certainty,
    Effort,
    Pleasantness,
    Responsibility,
    Control,
    Circumstance,
}

impl Dimension {
    pub const COUNT: usize = 7;
    pub const ALL: [Dimension; 7] = [
        Dimension::Attention,
        Dimension::Certainty,
        Dimension::Effort,
        Dimension::Pleasantness,
        Dimension::Responsibility,
        Dimension::Control,
        Dimension::Circumstance,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Attention => "attention",
            Dimension::Certainty => "certainty",
            Dimension::Effort => "effort",
            Dimension::Pleasantness => "pleasantness",
            Dimension::Responsibility => "responsibility",
            Dimension::Control => "control",
            Dimension::Circumstance => "circumstance",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Dimension::Attention => "Attention",
            Dimension::Certainty => "Certainty",
            Dimension::Effort => "Effort",
            Dimension::Pleasantness => "Pleasantness",
            Dimension::Responsibility => "Responsibility",
            Dimension::Control => "Control",
            Dimension::Circumstance => "Circumstance",
        }
    }

    /// Short column label used in prediction listings.
    pub fn abbrev(self) -> &'static str {
        match self {
            Dimension::Attention => "A",
            Dimension::Certainty => "Ce",
            Dimension::Effort => "E",
            Dimension::Pleasantness => "P",
            Dimension::Responsibility => "R",
            Dimension::Control => "Co",
            Dimension::Circumstance => "Ci",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Dimension::ALL
            .iter()
            .copied()
            .find(|d| d.name() == lower)
            .ok_or_else(|| format!("unknown appraisal dimension {s:?}"))
    }
}

/// Seven binary appraisal flags, indexed by [`Dimension`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct AppraisalVector([bool; 7]);

impl AppraisalVector {
    pub const ZERO: AppraisalVector = AppraisalVector([false; 7]);

    pub fn new(flags: [bool; 7]) -> Self {
        AppraisalVector(flags)
    }

    /// Builds a vector from 0/1 integers in dimension order.
    ///
    /// Panics if any value is not 0 or 1.
    pub fn from_bits(bits: [u8; 7]) -> Self {
        let mut flags = [false; 7];
        for (f, b) in flags.iter_mut().zip(bits) {
            assert!(b <= 1, "appraisal bit must be 0 or 1, got {b}");
            *f = b == 1;
        }
        AppraisalVector(flags)
    }

    /// Bit `i` of `code` (least significant first) becomes dimension `i`.
    pub fn from_code(code: u8) -> Self {
        let mut flags = [false; 7];
        for (i, f) in flags.iter_mut().enumerate() {
            *f = code >> i & 1 == 1;
        }
        AppraisalVector(flags)
    }

    pub fn code(&self) -> u8 {
        self.0
            .iter()
            .enumerate()
            .fold(0u8, |acc, (i, &f)| acc | (u8::from(f) << i))
    }

    pub fn get(&self, d: Dimension) -> bool {
        self.0[d.index()]
    }

    pub fn set(&mut self, d: Dimension, value: bool) {
        self.0[d.index()] = value;
    }

    pub fn flags(&self) -> [bool; 7] {
        self.0
    }

    pub fn bits(&self) -> [u8; 7] {
        self.0.map(u8::from)
    }

    pub fn as_f64(&self) -> [f64; 7] {
        self.0.map(|f| if f { 1.0 } else { 0.0 })
    }

    /// Renders as seven 0/1 characters, e.g. `1100000`.
    pub fn to_bit_string(&self) -> String {
        self.0.iter().map(|&f| if f { '1' } else { '0' }).collect()
    }
}

impl std::ops::Index<Dimension> for AppraisalVector {
    type Output = bool;

    fn index(&self, d: Dimension) -> &bool {
        &self.0[d.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    pub text: String,
    pub emotion: Emotion,
    pub gold_appraisal: Option<AppraisalVector>,
    /// Either empty or exactly three votes.
    pub annotator_votes: Vec<AppraisalVector>,
}

impl Instance {
    pub fn new(id: impl Into<String>, text: impl Into<String>, emotion: Emotion) -> Self {
        Instance {
            id: id.into(),
            text: text.into(),
            emotion,
            gold_appraisal: None,
            annotator_votes: Vec::new(),
        }
    }

    pub fn with_appraisal(mut self, appraisal: AppraisalVector) -> Self {
        self.gold_appraisal = Some(appraisal);
        self
    }

    pub fn with_votes(mut self, votes: Vec<AppraisalVector>) -> Self {
        self.annotator_votes = votes;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub provenance: String,
    pub instances: Vec<Instance>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, provenance: impl Into<String>) -> Self {
        Corpus {
            name: name.into(),
            provenance: provenance.into(),
            instances: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Instance> {
        self.instances.iter()
    }

    /// Instance count per emotion, in [`Emotion::ALL`] order.
    pub fn histogram(&self) -> [usize; 7] {
        let mut counts = [0; 7];
        for inst in &self.instances {
            counts[inst.emotion.index()] += 1;
        }
        counts
    }

    pub fn has_votes(&self) -> bool {
        !self.instances.is_empty() && self.instances.iter().all(|i| i.annotator_votes.len() == 3)
    }

    pub fn has_gold_appraisal(&self) -> bool {
        self.instances.iter().all(|i| i.gold_appraisal.is_some())
    }

    /// Checks id uniqueness and vote counts, and that every instance with
    /// votes carries a gold vector equal to their majority.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for (row, inst) in self.instances.iter().enumerate() {
            if !seen.insert(inst.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    row: row + 1,
                    id: inst.id.clone(),
                });
            }
            match inst.annotator_votes.len() {
                0 => {}
                3 => {
                    let majority = majority_vote(&inst.annotator_votes)
                        .expect("three votes always aggregate");
                    if inst.gold_appraisal != Some(majority) {
                        return Err(CorpusError::InconsistentGold { id: inst.id.clone() });
                    }
                }
                count => {
                    return Err(CorpusError::VoteCount {
                        id: inst.id.clone(),
                        count,
                    })
                }
            }
        }
        Ok(())
    }
}
