//! Appraisal vector → emotion: dense+ReLU hidden layers, dropout, softmax.

use super::train::fit;
use super::{ModelConfig, ModelError};
use crate::corpus::{AppraisalVector, Emotion, Instance};
use crate::nn::{Graph, Mode, NnError, NodeId, ParamId, ParamStore, Rng, Tensor};

#[derive(Debug, Clone)]
pub(crate) struct MlpLayout {
    hidden: Vec<(ParamId, ParamId)>,
    output: (ParamId, ParamId),
    dropout: f64,
}

impl MlpLayout {
    pub(crate) fn forward(&self, g: &mut Graph<'_>, input: &[f64], mode: &mut Mode<'_>) -> Result<NodeId, NnError> {
        let mut x = g.input(Tensor::vector(input.to_vec()));
        for &(w, b) in &self.hidden {
            let (w, b) = (g.param(w), g.param(b));
            let h = g.dense(x, w, b)?;
            x = g.relu(h);
        }
        x = g.dropout(x, self.dropout, mode)?;
        let (w, b) = (g.param(self.output.0), g.param(self.output.1));
        let logits = g.dense(x, w, b)?;
        g.softmax(logits)
    }

    pub(crate) fn loss(
        &self,
        g: &mut Graph<'_>,
        input: &[f64],
        gold: Emotion,
        mode: &mut Mode<'_>,
    ) -> Result<NodeId, NnError> {
        let p = self.forward(g, input, mode)?;
        g.cross_entropy(p, gold.index())
    }
}

/// Predicts the emotion from the seven appraisal bits.
#[derive(Debug, Clone)]
pub struct AppraisalToEmotionModel {
    config: ModelConfig,
    store: ParamStore,
    layout: MlpLayout,
    loss_log: Vec<f64>,
}

const STREAM: u64 = 4;

impl AppraisalToEmotionModel {
    pub fn init(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = Rng::derive(config.seed, &[STREAM, 0]);
        let mut store = ParamStore::new();
        let mut fan_in = 7;
        let mut hidden = Vec::new();
        for (i, &h) in config.hidden.iter().enumerate() {
            let w = store.add_glorot(&format!("hidden{}.w", i + 1), &[fan_in, h], fan_in, h, &mut rng);
            let b = store.add_zeros(&format!("hidden{}.b", i + 1), &[h]);
            hidden.push((w, b));
            fan_in = h;
        }
        let output = (
            store.add_glorot("output.w", &[fan_in, 7], fan_in, 7, &mut rng),
            store.add_zeros("output.b", &[7]),
        );
        Ok(AppraisalToEmotionModel {
            config: config.clone(),
            store,
            layout: MlpLayout {
                hidden,
                output,
                dropout: config.dropout,
            },
            loss_log: Vec::new(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn loss_log(&self) -> &[f64] {
        &self.loss_log
    }

    pub(crate) fn layout(&self) -> &MlpLayout {
        &self.layout
    }

    pub fn predict_proba(&self, appraisal: &AppraisalVector) -> Result<[f64; 7], ModelError> {
        let mut g = Graph::new(&self.store);
        let p = self.layout.forward(&mut g, &appraisal.as_f64(), &mut Mode::Infer)?;
        let mut out = [0.0; 7];
        out.copy_from_slice(g.value(p).data());
        Ok(out)
    }

    pub fn predict(&self, appraisal: &AppraisalVector) -> Result<Emotion, ModelError> {
        Ok(Emotion::argmax(&self.predict_proba(appraisal)?))
    }
}

/// Trains on the gold appraisals of `train`.
pub fn train_a2e(train: &[&Instance], config: &ModelConfig) -> Result<AppraisalToEmotionModel, ModelError> {
    if train.is_empty() {
        return Err(ModelError::EmptySplit);
    }
    let inputs = train
        .iter()
        .map(|i| {
            i.gold_appraisal
                .map(|a| a.as_f64())
                .ok_or_else(|| ModelError::MissingAppraisal(i.id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut model = AppraisalToEmotionModel::init(config)?;
    let mut rng = Rng::derive(config.seed, &[STREAM, 1]);
    let layout = model.layout.clone();
    model.loss_log = fit(&mut model.store, train.len(), config, &mut rng, |g, i, mode| {
        layout.loss(g, &inputs[i], train[i].emotion, mode)
    })?;
    Ok(model)
}
