//! Repeated, emotion-stratified k-fold partitions.
//!
//! For each repetition the instances of every emotion are shuffled and dealt
//! to folds round-robin. The dealing cursor carries over from one emotion to
//! the next, so per-emotion remainders spread across folds and total fold
//! sizes differ by at most one.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Corpus, CorpusError, Emotion};
use crate::nn::Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Instance ids in corpus order; fold members index into this list.
    ids: Vec<String>,
    /// `repetitions[r][f]` holds the sorted corpus indices of test fold `f`.
    repetitions: Vec<Vec<Vec<usize>>>,
}

/// One train/test split of a plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repetition: usize,
    pub index: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct PlanExport {
    k: usize,
    seed: u64,
    repetitions: Vec<Vec<Vec<String>>>,
}

pub fn split_folds(corpus: &Corpus, k: usize, repetitions: usize, seed: u64) -> Result<FoldPlan, CorpusError> {
    if k < 2 {
        return Err(CorpusError::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if repetitions == 0 {
        return Err(CorpusError::InvalidArgument("at least one repetition is required".into()));
    }
    if corpus.len() < k {
        return Err(CorpusError::CorpusTooSmall { size: corpus.len(), k });
    }
    let mut by_emotion: [Vec<usize>; 7] = Default::default();
    for (i, inst) in corpus.instances.iter().enumerate() {
        by_emotion[inst.emotion.index()].push(i);
    }
    let mut reps = Vec::with_capacity(repetitions);
    for r in 0..repetitions {
        let mut rng = Rng::derive(seed, &[0xF01D, r as u64]);
        let mut folds = vec![Vec::new(); k];
        let mut cursor = 0;
        for emotion in Emotion::ALL {
            let mut members = by_emotion[emotion.index()].clone();
            rng.shuffle(&mut members);
            for idx in members {
                folds[cursor].push(idx);
                cursor = (cursor + 1) % k;
            }
        }
        for f in &mut folds {
            f.sort_unstable();
        }
        reps.push(folds);
    }
    Ok(FoldPlan {
        k,
        seed,
        ids: corpus.instances.iter().map(|i| i.id.clone()).collect(),
        repetitions: reps,
    })
}

impl FoldPlan {
    pub fn repetitions(&self) -> usize {
        self.repetitions.len()
    }

    pub fn corpus_len(&self) -> usize {
        self.ids.len()
    }

    /// Test indices of fold `fold` in repetition `rep`.
    pub fn test_indices(&self, rep: usize, fold: usize) -> &[usize] {
        &self.repetitions[rep][fold]
    }

    pub fn fold(&self, rep: usize, fold: usize) -> Fold {
        let test = self.repetitions[rep][fold].clone();
        let mut in_test = vec![false; self.ids.len()];
        for &i in &test {
            in_test[i] = true;
        }
        let train = (0..self.ids.len()).filter(|&i| !in_test[i]).collect();
        Fold {
            repetition: rep,
            index: fold,
            train,
            test,
        }
    }

    /// All folds, repetition-major.
    pub fn folds(&self) -> impl Iterator<Item = Fold> + '_ {
        (0..self.repetitions()).flat_map(move |r| (0..self.k).map(move |f| self.fold(r, f)))
    }

    /// Checks the plan still describes `corpus` (same ids in the same order).
    pub fn matches(&self, corpus: &Corpus) -> bool {
        self.ids.len() == corpus.len() && self.ids.iter().zip(&corpus.instances).all(|(a, b)| *a == b.id)
    }

    /// JSON export: `{"k", "seed", "repetitions": [[ [id, ...] per fold ] per repetition]}`.
    pub fn to_json(&self) -> String {
        let export = PlanExport {
            k: self.k,
            seed: self.seed,
            repetitions: self
                .repetitions
                .iter()
                .map(|folds| {
                    folds
                        .iter()
                        .map(|f| f.iter().map(|&i| self.ids[i].clone()).collect())
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&export).expect("plan serializes")
    }

    /// Reads an exported plan back against the corpus it was built for.
    pub fn from_json(json: &str, corpus: &Corpus) -> Result<FoldPlan, CorpusError> {
        let export: PlanExport =
            serde_json::from_str(json).map_err(|e| CorpusError::MalformedPlan(e.to_string()))?;
        let index: std::collections::HashMap<&str, usize> = corpus
            .instances
            .iter()
            .enumerate()
            .map(|(i, inst)| (inst.id.as_str(), i))
            .collect();
        let mut repetitions = Vec::new();
        for (r, folds) in export.repetitions.iter().enumerate() {
            if folds.len() != export.k {
                return Err(CorpusError::MalformedPlan(format!(
                    "repetition {r} has {} folds, expected {}",
                    folds.len(),
                    export.k
                )));
            }
            let mut seen = vec![false; corpus.len()];
            let mut rep = Vec::new();
            for fold in folds {
                let mut members = Vec::with_capacity(fold.len());
                for id in fold {
                    let &i = index
                        .get(id.as_str())
                        .ok_or_else(|| CorpusError::MalformedPlan(format!("unknown id `{id}`")))?;
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(CorpusError::MalformedPlan(format!("id `{id}` in two folds")));
                    }
                    members.push(i);
                }
                members.sort_unstable();
                rep.push(members);
            }
            if seen.iter().any(|s| !s) {
                return Err(CorpusError::MalformedPlan(format!("repetition {r} does not cover the corpus")));
            }
            repetitions.push(rep);
        }
        Ok(FoldPlan {
            k: export.k,
            seed: export.seed,
            ids: corpus.instances.iter().map(|i| i.id.clone()).collect(),
            repetitions,
        })
    }

    /// SHA-256 of the JSON export, hex encoded.
    pub fn partition_hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
