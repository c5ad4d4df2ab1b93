//! Convolutional text encoder with emotion and/or appraisal heads.
//!
//! embed → for each width w: conv_w → relu → max-pool → flatten;
//! concatenate → dropout → dense head(s). The emotion head ends in a
//! softmax over the seven emotions, the appraisal head in seven sigmoids.

use super::train::fit;
use super::{ModelConfig, ModelError};
use crate::corpus::{AppraisalVector, Dimension, Emotion, Instance};
use crate::encoder::TextEncoder;
use crate::nn::{Graph, Mode, NnError, NodeId, ParamId, ParamStore, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heads {
    Emotion,
    Appraisal,
    Both,
}

impl Heads {
    fn emotion(self) -> bool {
        matches!(self, Heads::Emotion | Heads::Both)
    }

    fn appraisal(self) -> bool {
        matches!(self, Heads::Appraisal | Heads::Both)
    }

    fn stream(self) -> u64 {
        match self {
            Heads::Emotion => 1,
            Heads::Appraisal => 2,
            Heads::Both => 3,
        }
    }
}

/// Probabilities of one forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnnOutput {
    pub emotion: Option<[f64; 7]>,
    pub appraisal: Option<[f64; 7]>,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    embedding: ParamId,
    convs: Vec<(usize, ParamId, ParamId)>,
    emotion: Option<(ParamId, ParamId)>,
    appraisal: Option<(ParamId, ParamId)>,
    pool: usize,
    dropout: f64,
}

pub(crate) struct Nodes {
    pub emotion: Option<NodeId>,
    pub appraisal: Option<NodeId>,
}

impl Layout {
    pub(crate) fn forward(&self, g: &mut Graph<'_>, indices: &[usize], mode: &mut Mode<'_>) -> Result<Nodes, NnError> {
        let x = g.embed(self.embedding, indices)?;
        let mut pooled = Vec::with_capacity(self.convs.len());
        for &(_, w, b) in &self.convs {
            let (w, b) = (g.param(w), g.param(b));
            let c = g.conv1d(x, w, b)?;
            let r = g.relu(c);
            pooled.push(g.max_pool1d(r, self.pool)?);
        }
        let features = g.concat(&pooled);
        let features = g.dropout(features, self.dropout, mode)?;
        let head = |ids: Option<(ParamId, ParamId)>, g: &mut Graph<'_>| -> Result<Option<NodeId>, NnError> {
            ids.map(|(w, b)| {
                let (w, b) = (g.param(w), g.param(b));
                g.dense(features, w, b)
            })
            .transpose()
        };
        let emotion = head(self.emotion, g)?.map(|l| g.softmax(l)).transpose()?;
        let appraisal = head(self.appraisal, g)?.map(|l| g.sigmoid(l));
        Ok(Nodes { emotion, appraisal })
    }

    /// Training objective: cross entropy for emotions, mean binary cross
    /// entropy for appraisals, `CE + λ·BCE` with both heads.
    pub(crate) fn loss(
        &self,
        g: &mut Graph<'_>,
        indices: &[usize],
        emotion: Emotion,
        appraisal: Option<AppraisalVector>,
        lambda: f64,
        mode: &mut Mode<'_>,
    ) -> Result<NodeId, NnError> {
        let out = self.forward(g, indices, mode)?;
        let ce = out.emotion.map(|p| g.cross_entropy(p, emotion.index())).transpose()?;
        let bce = match (out.appraisal, appraisal) {
            (Some(p), Some(a)) => Some(g.binary_cross_entropy(p, &a.as_f64())?),
            _ => None,
        };
        Ok(match (ce, bce) {
            (Some(ce), Some(bce)) => {
                let weighted = g.scale(bce, lambda);
                g.add(ce, weighted)?
            }
            (Some(l), None) | (None, Some(l)) => l,
            (None, None) => unreachable!("model without heads"),
        })
    }
}

/// A trained convolutional text model.
#[derive(Debug, Clone)]
pub struct TextCnn {
    heads: Heads,
    config: ModelConfig,
    store: ParamStore,
    layout: Layout,
    loss_log: Vec<f64>,
}

impl TextCnn {
    /// Freshly initialised model; conv and dense weights Glorot-uniform,
    /// biases zero, embeddings copied from the encoder.
    pub fn init(heads: Heads, config: &ModelConfig, encoder: &TextEncoder) -> Result<Self, ModelError> {
        config.validate()?;
        let dim = encoder.embeddings.dim();
        if dim != config.embedding_dim {
            return Err(ModelError::InvalidConfig(format!(
                "embedding_dim {} but the table has {dim} columns",
                config.embedding_dim
            )));
        }
        if encoder.max_len != config.max_len {
            return Err(ModelError::InvalidConfig(format!(
                "max_len {} but the encoder pads to {}",
                config.max_len, encoder.max_len
            )));
        }
        let mut rng = Rng::derive(config.seed, &[heads.stream(), 0]);
        let mut store = ParamStore::new();
        let embedding = store.add_shared("embedding", encoder.embeddings.shared(), config.train_embeddings);
        let convs = config
            .filter_widths
            .iter()
            .map(|&w| {
                let wid = store.add_glorot(
                    &format!("conv{w}.w"),
                    &[w, dim, config.filters],
                    w * dim,
                    w * config.filters,
                    &mut rng,
                );
                let bid = store.add_zeros(&format!("conv{w}.b"), &[config.filters]);
                (w, wid, bid)
            })
            .collect();
        let n = config.feature_len();
        let mut dense = |name: &str, rng: &mut Rng| {
            let w = store.add_glorot(&format!("{name}.w"), &[n, 7], n, 7, rng);
            let b = store.add_zeros(&format!("{name}.b"), &[7]);
            (w, b)
        };
        let emotion = heads.emotion().then(|| dense("emotion", &mut rng));
        let appraisal = heads.appraisal().then(|| dense("appraisal", &mut rng));
        Ok(TextCnn {
            heads,
            config: config.clone(),
            layout: Layout {
                embedding,
                convs,
                emotion,
                appraisal,
                pool: config.pool,
                dropout: config.dropout,
            },
            store,
            loss_log: Vec::new(),
        })
    }

    /// Trains on `train`. Appraisal heads need gold appraisals.
    pub fn train(heads: Heads, train: &[&Instance], encoder: &TextEncoder, config: &ModelConfig) -> Result<Self, ModelError> {
        if train.is_empty() {
            return Err(ModelError::EmptySplit);
        }
        if heads.appraisal() {
            if let Some(i) = train.iter().find(|i| i.gold_appraisal.is_none()) {
                return Err(ModelError::MissingAppraisal(i.id.clone()));
            }
        }
        let mut model = Self::init(heads, config, encoder)?;
        let encoded: Vec<Vec<usize>> = train.iter().map(|i| encoder.encode(&i.text)).collect();
        let mut rng = Rng::derive(config.seed, &[heads.stream(), 1]);
        let layout = model.layout.clone();
        let lambda = config.lambda;
        model.loss_log = fit(&mut model.store, train.len(), config, &mut rng, |g, i, mode| {
            layout.loss(g, &encoded[i], train[i].emotion, train[i].gold_appraisal, lambda, mode)
        })?;
        Ok(model)
    }

    pub fn heads(&self) -> Heads {
        self.heads
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    /// Replaces parameter values by name, e.g. from a checkpoint.
    pub fn load_params(&mut self, other: &ParamStore) -> Result<(), ModelError> {
        for (_, p) in other.iter() {
            self.store.assign(&p.name, p.value())?;
        }
        Ok(())
    }

    /// Mean training loss per epoch.
    pub fn loss_log(&self) -> &[f64] {
        &self.loss_log
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Inference with dropout disabled.
    pub fn forward(&self, indices: &[usize]) -> Result<CnnOutput, ModelError> {
        let mut g = Graph::new(&self.store);
        let nodes = self.layout.forward(&mut g, indices, &mut Mode::Infer)?;
        let read = |n: Option<NodeId>| {
            n.map(|n| {
                let mut out = [0.0; 7];
                out.copy_from_slice(g.value(n).data());
                out
            })
        };
        Ok(CnnOutput {
            emotion: read(nodes.emotion),
            appraisal: read(nodes.appraisal),
        })
    }
}

/// Positive when the probability is at least one half.
pub fn threshold(probs: &[f64; 7]) -> AppraisalVector {
    let mut v = AppraisalVector::ZERO;
    for d in Dimension::ALL {
        v.set(d, probs[d.index()] >= 0.5);
    }
    v
}

/// Text → emotion.
#[derive(Debug, Clone)]
pub struct EmotionModel(pub TextCnn);

/// Text → appraisal vector.
#[derive(Debug, Clone)]
pub struct AppraisalModel(pub TextCnn);

/// One shared encoder with emotion and appraisal heads.
#[derive(Debug, Clone)]
pub struct MultitaskModel(pub TextCnn);

pub fn train_t2e(train: &[&Instance], encoder: &TextEncoder, config: &ModelConfig) -> Result<EmotionModel, ModelError> {
    TextCnn::train(Heads::Emotion, train, encoder, config).map(EmotionModel)
}

pub fn train_t2a(train: &[&Instance], encoder: &TextEncoder, config: &ModelConfig) -> Result<AppraisalModel, ModelError> {
    TextCnn::train(Heads::Appraisal, train, encoder, config).map(AppraisalModel)
}

pub fn train_multitask(
    train: &[&Instance],
    encoder: &TextEncoder,
    config: &ModelConfig,
) -> Result<MultitaskModel, ModelError> {
    TextCnn::train(Heads::Both, train, encoder, config).map(MultitaskModel)
}

impl EmotionModel {
    pub fn predict_proba(&self, indices: &[usize]) -> Result<[f64; 7], ModelError> {
        Ok(self.0.forward(indices)?.emotion.expect("emotion head"))
    }

    pub fn predict(&self, indices: &[usize]) -> Result<Emotion, ModelError> {
        Ok(Emotion::argmax(&self.predict_proba(indices)?))
    }
}

impl AppraisalModel {
    pub fn predict_proba(&self, indices: &[usize]) -> Result<[f64; 7], ModelError> {
        Ok(self.0.forward(indices)?.appraisal.expect("appraisal head"))
    }

    pub fn predict(&self, indices: &[usize]) -> Result<AppraisalVector, ModelError> {
        Ok(threshold(&self.predict_proba(indices)?))
    }
}

impl MultitaskModel {
    pub fn predict(&self, indices: &[usize]) -> Result<(Emotion, AppraisalVector), ModelError> {
        let out = self.0.forward(indices)?;
        Ok((
            Emotion::argmax(&out.emotion.expect("emotion head")),
            threshold(&out.appraisal.expect("appraisal head")),
        ))
    }
}
