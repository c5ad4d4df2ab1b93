//! Template-generated corpora for tests and desk-scale experiments.

use std::fmt;

use super::{AppraisalVector, Corpus, CorpusError, Emotion, Instance};
use crate::agreement::majority_vote;
use crate::nn::Rng;

/// How annotator votes are derived from an emotion's prototype appraisal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthesisRule {
    /// All three votes equal the prototype.
    Deterministic,
    /// Each annotator flips each prototype bit independently with this
    /// probability; gold is the majority of the three votes.
    Noisy(f64),
}

impl fmt::Display for SynthesisRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthesisRule::Deterministic => f.write_str("deterministic"),
            SynthesisRule::Noisy(p) => write!(f, "noisy({p})"),
        }
    }
}

/// Distinct appraisal vector per emotion, following the majority pattern
/// of the released annotation counts.
pub fn prototype(emotion: Emotion) -> AppraisalVector {
    let bits = match emotion {
        Emotion::Anger => [1, 1, 0, 0, 0, 0, 0],
        Emotion::Disgust => [0, 1, 0, 0, 0, 0, 0],
        Emotion::Fear => [1, 0, 1, 0, 0, 0, 0],
        Emotion::Guilt => [0, 1, 0, 0, 1, 1, 0],
        Emotion::Joy => [1, 1, 0, 1, 0, 0, 0],
        Emotion::Sadness => [1, 1, 1, 0, 0, 0, 1],
        Emotion::Shame => [0, 1, 0, 0, 1, 0, 0],
    };
    AppraisalVector::from_bits(bits)
}

/// Tokens that occur only in texts of the given emotion.
pub fn cue_tokens(emotion: Emotion) -> &'static [&'static str] {
    match emotion {
        Emotion::Anger => &["furious", "outrageous", "insulting"],
        Emotion::Disgust => &["revolting", "filthy", "gross"],
        Emotion::Fear => &["terrifying", "dangerous", "threatening"],
        Emotion::Guilt => &["dishonest", "selfish", "regrettable"],
        Emotion::Joy => &["wonderful", "delightful", "celebration"],
        Emotion::Sadness => &["mournful", "tragic", "heartbreaking"],
        Emotion::Shame => &["embarrassing", "humiliating", "awkward"],
    }
}

const SUBJECTS: &[&str] = &["I", "my friend", "my brother", "a colleague", "the neighbour", "my mother"];
const VERBS: &[&str] = &["saw", "heard", "noticed", "remembered", "found", "read about"];
const NOUNS: &[&str] = &[
    "the letter",
    "the garden",
    "the car",
    "the meeting",
    "the dog",
    "the exam",
    "the train",
    "the party",
];

fn render(rng: &mut crate::nn::Rng, emotion: Emotion) -> String {
    let subject = rng.choose(SUBJECTS);
    let verb = rng.choose(VERBS);
    let noun = rng.choose(NOUNS);
    let cue = rng.choose(cue_tokens(emotion));
    match rng.below(3) {
        0 => format!("when {subject} {verb} {noun} and it was {cue}."),
        1 => format!("because {subject} {verb} {noun}, so {cue}."),
        _ => format!("when something {cue} happened after {subject} {verb} {noun}."),
    }
}

/// Builds `7 * n_per_emotion` instances, emotion-interleaved, with
/// template texts containing one emotion cue token and three annotator
/// votes per instance.
///
/// Texts and votes come from independent random streams, so
/// `Noisy(0.0)` produces exactly the `Deterministic` corpus.
pub fn synthesize_corpus(seed: u64, n_per_emotion: usize, rule: SynthesisRule) -> Result<Corpus, CorpusError> {
    if n_per_emotion == 0 {
        return Err(CorpusError::InvalidArgument("n_per_emotion must be at least 1".into()));
    }
    if let SynthesisRule::Noisy(p) = rule {
        if !(0.0..=1.0).contains(&p) {
            return Err(CorpusError::InvalidArgument(format!("flip probability {p} outside [0, 1]")));
        }
    }
    let mut text_rng = Rng::derive(seed, &[0x7E47]);
    let mut vote_rng = Rng::derive(seed, &[0x707E]);
    let mut corpus = Corpus::new(
        "synthetic",
        format!("synthesized: seed={seed}, n_per_emotion={n_per_emotion}, rule={rule}"),
    );
    for i in 0..n_per_emotion {
        for emotion in Emotion::ALL {
            let text = render(&mut text_rng, emotion);
            let proto = prototype(emotion);
            let votes: Vec<AppraisalVector> = (0..3)
                .map(|_| match rule {
                    SynthesisRule::Deterministic => proto,
                    SynthesisRule::Noisy(p) => {
                        let mut v = proto;
                        for d in crate::corpus::Dimension::ALL {
                            if vote_rng.bernoulli(p) {
                                v.set(d, !v.get(d));
                            }
                        }
                        v
                    }
                })
                .collect();
            let gold = majority_vote(&votes).expect("three votes");
            let id = format!("syn-{:05}", i * Emotion::COUNT + emotion.index());
            corpus
                .instances
                .push(Instance::new(id, text, emotion).with_appraisal(gold).with_votes(votes));
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::save_corpus;
    use std::collections::HashMap;

    #[test]
    fn deterministic_mode_is_bijective() {
        let corpus = synthesize_corpus(1, 20, SynthesisRule::Deterministic).unwrap();
        assert_eq!(corpus.len(), 140);
        assert_eq!(corpus.histogram(), [20; 7]);
        let mut by_code: HashMap<u8, Emotion> = HashMap::new();
        for inst in &corpus.instances {
            let code = inst.gold_appraisal.unwrap().code();
            let prev = by_code.insert(code, inst.emotion);
            assert!(prev.is_none() || prev == Some(inst.emotion));
        }
        assert_eq!(by_code.len(), 7);
    }

    #[test]
    fn texts_contain_a_cue_token_of_their_emotion() {
        let corpus = synthesize_corpus(3, 10, SynthesisRule::Deterministic).unwrap();
        for inst in &corpus.instances {
            assert!(cue_tokens(inst.emotion).iter().any(|c| inst.text.contains(c)), "{}", inst.text);
            for other in Emotion::ALL.iter().filter(|&&e| e != inst.emotion) {
                assert!(!cue_tokens(*other).iter().any(|c| inst.text.contains(c)));
            }
        }
    }

    #[test]
    fn same_seed_gives_byte_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv");
        let b = dir.path().join("b.tsv");
        save_corpus(&synthesize_corpus(9, 6, SynthesisRule::Noisy(0.3)).unwrap(), &a).unwrap();
        save_corpus(&synthesize_corpus(9, 6, SynthesisRule::Noisy(0.3)).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn noisy_zero_equals_deterministic() {
        let det = synthesize_corpus(1, 20, SynthesisRule::Deterministic).unwrap();
        let noisy = synthesize_corpus(1, 20, SynthesisRule::Noisy(0.0)).unwrap();
        assert_eq!(det.instances, noisy.instances);
    }

    #[test]
    fn noisy_votes_keep_gold_as_majority() {
        let corpus = synthesize_corpus(2, 30, SynthesisRule::Noisy(0.4)).unwrap();
        corpus.validate().unwrap();
        let flipped = corpus
            .instances
            .iter()
            .filter(|i| i.gold_appraisal != Some(prototype(i.emotion)))
            .count();
        assert!(flipped > 0);
    }

    #[test]
    fn zero_per_emotion_is_rejected() {
        assert!(synthesize_corpus(1, 0, SynthesisRule::Deterministic).is_err());
    }
}
