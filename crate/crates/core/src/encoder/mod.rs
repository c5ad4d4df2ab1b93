//! Text to index sequences and pretrained word vectors.

mod embeddings;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::corpus::Corpus;

pub use embeddings::{load_embeddings, Coverage, EmbeddingTable};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const DEFAULT_MAX_LEN: usize = 64;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {detail}")]
    MalformedLine { line: usize, detail: String },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
}

/// Lowercases, splits on whitespace and peels leading and trailing ASCII
/// punctuation off each chunk as single-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let lower = chunk.to_lowercase();
        let core = lower.trim_start_matches(|c: char| c.is_ascii_punctuation());
        let lead = &lower[..lower.len() - core.len()];
        out.extend(lead.chars().map(String::from));
        let word = core.trim_end_matches(|c: char| c.is_ascii_punctuation());
        if !word.is_empty() {
            out.push(word.to_string());
        }
        out.extend(core[word.len()..].chars().map(String::from));
    }
    out
}

/// Token ↔ index map with `PAD = 0` and `UNK = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            tokens: vec!["<pad>".into(), "<unk>".into()],
            index: HashMap::new(),
        }
    }
}

impl Vocabulary {
    /// Tokens in first-occurrence order.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Vocabulary::default();
        for t in tokens {
            v.insert(t.as_ref());
        }
        v
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::from_tokens(corpus.iter().flat_map(|i| tokenize(&i.text)))
    }

    fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    /// Index of `token`, or `UNK`.
    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    /// Including the two reserved entries.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == 2
    }

    /// One token per line, line number = index.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tokens {
            let _ = writeln!(out, "{t}");
        }
        out
    }
}

/// Exactly `max_len` indices: truncated, unknown tokens mapped to `UNK`,
/// right-padded with `PAD`.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    let mut out: Vec<usize> = tokens.iter().take(max_len).map(|t| vocab.get(t.as_ref())).collect();
    out.resize(max_len, PAD);
    out
}

pub fn encode_text(text: &str, vocab: &Vocabulary, max_len: usize) -> Vec<usize> {
    encode(&tokenize(text), vocab, max_len)
}

/// A vocabulary with its aligned embedding table and sequence length.
#[derive(Debug, Clone)]
pub struct TextEncoder {
    pub vocab: Vocabulary,
    pub embeddings: EmbeddingTable,
    pub max_len: usize,
}

impl TextEncoder {
    pub fn new(vocab: Vocabulary, embeddings: EmbeddingTable, max_len: usize) -> Self {
        assert_eq!(vocab.len(), embeddings.rows(), "embedding rows must match the vocabulary");
        TextEncoder {
            vocab,
            embeddings,
            max_len,
        }
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        encode_text(text, &self.vocab, self.max_len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synthesize_corpus, SynthesisRule};
    use proptest::prelude::*;

    #[test]
    fn tokenizer_examples() {
        assert_eq!(tokenize("I feel sad, honestly."), ["i", "feel", "sad", ",", "honestly", "."]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("snake!!!"), ["snake", "!", "!", "!"]);
        assert_eq!(tokenize("  \"Why?\"  "), ["\"", "why", "?", "\""]);
        assert_eq!(tokenize("don't"), ["don't"]);
        assert_eq!(tokenize("..."), [".", ".", "."]);
        assert_eq!(tokenize("ÉTÉ"), ["été"]);
    }

    #[test]
    fn vocabulary_reserves_pad_and_unk() {
        let v = Vocabulary::from_tokens(["cat", "dog", "cat"]);
        assert_eq!(v.len(), 4);
        assert_eq!(v.get("cat"), 2);
        assert_eq!(v.get("dog"), 3);
        assert_eq!(v.get("emu"), UNK);
        assert_eq!(v.token(PAD), "<pad>");
        assert_eq!(v.to_text().lines().count(), 4);
    }

    #[test]
    fn encode_examples() {
        let v = Vocabulary::from_tokens(["a", "b", "c"]);
        let e = encode(&["a", "b", "c"], &v, 64);
        assert_eq!(&e[..3], &[2, 3, 4]);
        assert!(e[3..].iter().all(|&i| i == PAD));
        assert_eq!(e.len(), 64);
        let long: Vec<String> = (0..80).map(|i| if i % 2 == 0 { "a".into() } else { "b".into() }).collect();
        let e = encode(&long, &v, 64);
        assert_eq!(e, (0..64).map(|i| if i % 2 == 0 { 2 } else { 3 }).collect::<Vec<_>>());
        let e = encode(&["x", "y"], &v, 4);
        assert_eq!(e, [UNK, UNK, PAD, PAD]);
    }

    #[test]
    fn corpus_vocabulary_is_deterministic() {
        let c = synthesize_corpus(2, 5, SynthesisRule::Deterministic).unwrap();
        assert_eq!(Vocabulary::from_corpus(&c), Vocabulary::from_corpus(&c));
        let first = tokenize(&c.instances[0].text);
        assert_eq!(Vocabulary::from_corpus(&c).get(&first[0]), 2);
    }

    proptest! {
        #[test]
        fn encode_is_fixed_length_and_padded_at_end(
            words in proptest::collection::vec("[a-z]{1,4}", 0..100),
            max_len in 1usize..80,
        ) {
            let v = Vocabulary::from_tokens(words.iter().take(10));
            let e = encode(&words, &v, max_len);
            prop_assert_eq!(e.len(), max_len);
            if let Some(first_pad) = e.iter().position(|&i| i == PAD) {
                prop_assert!(e[first_pad..].iter().all(|&i| i == PAD));
            }
        }

        #[test]
        fn tokens_have_no_whitespace(text in "\\PC{0,60}") {
            for t in tokenize(&text) {
                prop_assert!(!t.is_empty());
                prop_assert!(!t.contains(char::is_whitespace));
            }
        }
    }
}
