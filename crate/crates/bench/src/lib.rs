//! Shared fixtures for the benchmarks.

use appraise_core::corpus::{synthesize_corpus, SynthesisRule};
use appraise_core::encoder::{EmbeddingTable, TextEncoder, Vocabulary};
use appraise_core::models::ModelConfig;
use appraise_core::nn::{Rng, Tensor};
use appraise_core::{Corpus, Instance};

pub struct Fixture {
    pub corpus: Corpus,
    pub encoder: TextEncoder,
    pub config: ModelConfig,
}

impl Fixture {
    /// Synthetic corpus with random word vectors and a reduced CNN.
    pub fn new(per_emotion: usize, filters: usize, dim: usize) -> Self {
        let corpus = synthesize_corpus(7, per_emotion, SynthesisRule::Noisy(0.1)).expect("valid synthesis");
        let config = ModelConfig {
            filters,
            embedding_dim: dim,
            max_len: 32,
            hidden: vec![32, 32],
            batch_size: 16,
            epochs: 1,
            ..ModelConfig::default()
        };
        let vocab = Vocabulary::from_corpus(&corpus);
        let table = EmbeddingTable::random(&vocab, dim, 11);
        let encoder = TextEncoder::new(vocab, table, config.max_len);
        Fixture { corpus, encoder, config }
    }

    pub fn instances(&self) -> Vec<&Instance> {
        self.corpus.iter().collect()
    }
}

pub fn random_tensor(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).expect("shape matches data")
}

pub fn random_bits(n: usize, rng: &mut Rng) -> Vec<bool> {
    (0..n).map(|_| rng.uniform() < 0.5).collect()
}
