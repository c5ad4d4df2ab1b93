//! Word-vector text files: one token then `dim` reals per line.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use log::info;

use super::{EncoderError, Vocabulary, PAD, UNK};
use crate::nn::{Rng, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Coverage {
    /// Vocabulary entries (reserved ones excluded).
    pub vocabulary: usize,
    pub exact: usize,
    /// Found only through a differently cased file token.
    pub case_folded: usize,
    pub oov: usize,
    pub file_lines: usize,
}

impl Coverage {
    pub fn found(&self) -> usize {
        self.exact + self.case_folded
    }

    pub fn rate(&self) -> f64 {
        if self.vocabulary == 0 {
            0.0
        } else {
            self.found() as f64 / self.vocabulary as f64
        }
    }
}

/// `[vocab × dim]` matrix aligned with a [`Vocabulary`]. Row `PAD` is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    matrix: Arc<Tensor>,
    pub trainable: bool,
    pub coverage: Coverage,
}

impl EmbeddingTable {
    pub fn from_matrix(matrix: Tensor, trainable: bool) -> Self {
        assert_eq!(matrix.rank(), 2, "embedding matrix must be rank 2");
        EmbeddingTable {
            matrix: Arc::new(matrix),
            trainable,
            coverage: Coverage::default(),
        }
    }

    /// Random vectors in ±0.5 for every non-reserved token, for runs without
    /// pretrained vectors.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = Rng::derive(seed, &[0xE3B]);
        let mut data = vec![0.0; vocab.len() * dim];
        for v in data.iter_mut().skip(2 * dim) {
            *v = rng.uniform_in(-0.5, 0.5);
        }
        let matrix = Tensor::matrix(vocab.len(), dim, data).expect("shape");
        let n = vocab.len() - 2;
        EmbeddingTable {
            matrix: Arc::new(matrix),
            trainable: false,
            coverage: Coverage {
                vocabulary: n,
                exact: n,
                ..Coverage::default()
            },
        }
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn shared(&self) -> Arc<Tensor> {
        Arc::clone(&self.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape()[1]
    }

    pub fn rows(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn row(&self, index: usize) -> &[f64] {
        let d = self.dim();
        &self.matrix.data()[index * d..(index + 1) * d]
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Fill {
    Empty,
    CaseFolded,
    Exact,
}

/// Streams `path`, keeping rows for tokens of `vocab`.
///
/// An exact token match wins; otherwise the first file token whose
/// lowercase form matches is used. A line is split from the right, so
/// tokens containing spaces are accepted. Tokens absent from the file (and
/// the reserved rows) stay zero.
pub fn load_embeddings(path: impl AsRef<Path>, vocab: &Vocabulary, dim: usize) -> Result<EmbeddingTable, EncoderError> {
    let path = path.as_ref();
    let io = |source| EncoderError::Io {
        path: path.display().to_string(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut data = vec![0.0; vocab.len() * dim];
    let mut fill = vec![Fill::Empty; vocab.len()];
    let mut lines = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        let line_no = i + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        lines += 1;
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() < dim + 1 {
            return Err(EncoderError::DimensionMismatch {
                line: line_no,
                expected: dim,
                found: fields.len() - 1,
            });
        }
        let split = fields.len() - dim;
        let token = fields[..split].join(" ");
        let (row, kind) = match vocab.lookup(&token) {
            Some(r) => (r, Fill::Exact),
            None => match vocab.lookup(&token.to_lowercase()) {
                Some(r) => (r, Fill::CaseFolded),
                None => continue,
            },
        };
        if row == PAD || row == UNK || fill[row] == Fill::Exact || (kind == Fill::CaseFolded && fill[row] != Fill::Empty) {
            continue;
        }
        for (slot, text) in data[row * dim..(row + 1) * dim].iter_mut().zip(&fields[split..]) {
            *slot = text.parse::<f64>().map_err(|_| EncoderError::MalformedLine {
                line: line_no,
                detail: format!("bad value {text:?}"),
            })?;
        }
        fill[row] = kind;
    }
    let mut coverage = Coverage {
        vocabulary: vocab.len() - 2,
        file_lines: lines,
        ..Coverage::default()
    };
    for f in &fill[2..] {
        match f {
            Fill::Exact => coverage.exact += 1,
            Fill::CaseFolded => coverage.case_folded += 1,
            Fill::Empty => coverage.oov += 1,
        }
    }
    info!(
        "embeddings: {} of {} vocabulary tokens found ({} by case folding), {} out of vocabulary",
        coverage.found(),
        coverage.vocabulary,
        coverage.case_folded,
        coverage.oov
    );
    Ok(EmbeddingTable {
        matrix: Arc::new(Tensor::matrix(vocab.len(), dim, data).expect("shape")),
        trainable: false,
        coverage,
    })
}
