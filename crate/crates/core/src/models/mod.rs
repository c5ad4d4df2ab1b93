//! Text and appraisal classifiers, pipelines and oracle ensembles.

mod cnn;
mod config;
mod mlp;
mod train;

use thiserror::Error;

use crate::corpus::{AppraisalVector, Emotion};
use crate::encoder::{EmbeddingTable, TextEncoder, Vocabulary};
use crate::nn::gradcheck::{check_gradients, CheckOptions, CheckReport};
use crate::nn::{Mode, NnError, OpKind, Rng};

pub use cnn::{
    threshold, train_multitask, train_t2a, train_t2e, AppraisalModel, CnnOutput, EmotionModel, Heads, MultitaskModel,
    TextCnn,
};
pub use config::ModelConfig;
pub use mlp::{train_a2e, AppraisalToEmotionModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training split is empty")]
    EmptySplit,
    #[error("instance `{0}` has no gold appraisal")]
    MissingAppraisal(String),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("training loss became non-finite in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Thresholded text→appraisal prediction fed to the appraisal→emotion model.
/// Returns the intermediate vector together with the emotion.
pub fn predict_pipeline(
    t2a: &AppraisalModel,
    a2e: &AppraisalToEmotionModel,
    indices: &[usize],
) -> Result<(AppraisalVector, Emotion), ModelError> {
    let appraisal = t2a.predict(indices)?;
    Ok((appraisal, a2e.predict(&appraisal)?))
}

/// Gold if either prediction is correct, otherwise the first prediction.
pub fn oracle_ensemble(pred_a: Emotion, pred_b: Emotion, gold: Emotion) -> Emotion {
    if pred_a == gold || pred_b == gold {
        gold
    } else {
        pred_a
    }
}

/// Model kinds covered by [`model_gradcheck`].
pub const CHECKED_MODELS: [&str; 4] = ["t2e", "t2a", "a2e", "multitask"];

fn tiny_config(seed: u64) -> ModelConfig {
    ModelConfig {
        filters: 2,
        embedding_dim: 3,
        max_len: 7,
        hidden: vec![4, 3],
        lambda: 0.7,
        train_embeddings: true,
        seed,
        ..ModelConfig::default()
    }
}

/// Finite-difference check of complete forward passes and losses of each
/// model on tiny random instances, dropout active with a fixed mask.
pub fn model_gradcheck(seed: u64, cases: usize, fault: Option<OpKind>) -> Result<Vec<CheckReport>, ModelError> {
    let opts = CheckOptions::default();
    let mut reports = Vec::new();
    for (m, name) in CHECKED_MODELS.iter().enumerate() {
        let mut outcomes = Vec::with_capacity(cases);
        for case in 0..cases {
            let mut rng = Rng::derive(seed, &[0x3D, m as u64, case as u64]);
            let config = tiny_config(rng.next_u64());
            let vocab = Vocabulary::from_tokens(["a", "b", "c", "d", "e"]);
            let table = EmbeddingTable::random(&vocab, config.embedding_dim, rng.next_u64());
            let encoder = TextEncoder::new(vocab, table, config.max_len);
            // real tokens only: the padding row is excluded from updates by design
            let indices: Vec<usize> = (0..config.max_len).map(|_| 2 + rng.below(5)).collect();
            let emotion = Emotion::ALL[rng.below(7)];
            let appraisal = AppraisalVector::from_code(rng.below(128) as u8);
            let mask_seed = rng.next_u64();
            let outcome = match *name {
                "a2e" => {
                    let model = AppraisalToEmotionModel::init(&config)?;
                    let layout = model.layout().clone();
                    let input = appraisal.as_f64();
                    check_gradients(
                        model.params(),
                        move |g| {
                            let mut mask = Rng::new(mask_seed);
                            layout.loss(g, &input, emotion, &mut Mode::Train(&mut mask))
                        },
                        &opts,
                        fault,
                        &mut rng,
                    )?
                }
                _ => {
                    let heads = match *name {
                        "t2e" => Heads::Emotion,
                        "t2a" => Heads::Appraisal,
                        _ => Heads::Both,
                    };
                    let model = TextCnn::init(heads, &config, &encoder)?;
                    let layout = model.layout().clone();
                    let lambda = config.lambda;
                    check_gradients(
                        model.params(),
                        move |g| {
                            let mut mask = Rng::new(mask_seed);
                            layout.loss(g, &indices, emotion, Some(appraisal), lambda, &mut Mode::Train(&mut mask))
                        },
                        &opts,
                        fault,
                        &mut rng,
                    )?
                }
            };
            outcomes.push(outcome);
        }
        reports.push(CheckReport::from_outcomes(name, outcomes, opts.tolerance));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{prototype, synthesize_corpus, Corpus, Dimension, Instance, SynthesisRule};

    fn small_config() -> ModelConfig {
        ModelConfig {
            filters: 8,
            embedding_dim: 16,
            max_len: 16,
            hidden: vec![32, 32],
            lr: 5e-3,
            batch_size: 16,
            epochs: 25,
            seed: 3,
            ..ModelConfig::default()
        }
    }

    fn encoder_for(corpus: &Corpus, config: &ModelConfig) -> TextEncoder {
        let vocab = Vocabulary::from_corpus(corpus);
        let table = EmbeddingTable::random(&vocab, config.embedding_dim, 17);
        TextEncoder::new(vocab, table, config.max_len)
    }

    #[test]
    fn oracle_examples() {
        use Emotion::*;
        assert_eq!(oracle_ensemble(Joy, Sadness, Joy), Joy);
        assert_eq!(oracle_ensemble(Fear, Joy, Joy), Joy);
        assert_eq!(oracle_ensemble(Fear, Anger, Joy), Fear);
    }

    #[test]
    fn threshold_half_is_positive() {
        let v = threshold(&[0.5, 0.49, 0.51, 0.0, 1.0, 0.5, 0.2]);
        assert_eq!(v.bits(), [1, 0, 1, 0, 1, 1, 0]);
    }

    #[test]
    fn t2e_fits_separable_text() {
        let corpus = synthesize_corpus(1, 20, SynthesisRule::Deterministic).unwrap();
        let config = small_config();
        let enc = encoder_for(&corpus, &config);
        let train: Vec<&Instance> = corpus.iter().collect();
        let model = train_t2e(&train, &enc, &config).unwrap();
        let correct = train
            .iter()
            .filter(|i| model.predict(&enc.encode(&i.text)).unwrap() == i.emotion)
            .count();
        assert!(correct as f64 / train.len() as f64 >= 0.95, "{correct}/{}", train.len());
        assert_eq!(model.0.loss_log().len(), config.epochs);
        let p = model.predict_proba(&enc.encode("anything at all")).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let again = train_t2e(&train, &enc, &config).unwrap();
        assert_eq!(again.0.params(), model.0.params());
    }

    #[test]
    fn t2a_learns_cue_implied_bit() {
        let corpus = synthesize_corpus(2, 20, SynthesisRule::Deterministic).unwrap();
        let config = ModelConfig {
            lr: 1e-2,
            ..small_config()
        };
        let enc = encoder_for(&corpus, &config);
        let train: Vec<&Instance> = corpus.iter().collect();
        let model = train_t2a(&train, &enc, &config).unwrap();
        let mut right = 0;
        for i in &train {
            let p = model.predict_proba(&enc.encode(&i.text)).unwrap();
            assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));
            let bit = model.predict(&enc.encode(&i.text)).unwrap()[Dimension::Attention];
            right += usize::from(bit == i.gold_appraisal.unwrap()[Dimension::Attention]);
        }
        assert!(right as f64 / train.len() as f64 >= 0.95, "{right}/{}", train.len());
    }

    #[test]
    fn a2e_learns_bijection() {
        let corpus = synthesize_corpus(3, 20, SynthesisRule::Deterministic).unwrap();
        let mut config = small_config();
        config.epochs = 25;
        let train: Vec<&Instance> = corpus.iter().collect();
        let model = train_a2e(&train, &config).unwrap();
        for e in Emotion::ALL {
            assert_eq!(model.predict(&prototype(e)).unwrap(), e);
        }
        let p = model.predict_proba(&AppraisalVector::ZERO).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(p, model.predict_proba(&AppraisalVector::ZERO).unwrap());
    }

    #[test]
    fn pipeline_equals_a2e_on_gold_when_t2a_is_exact() {
        let corpus = synthesize_corpus(4, 20, SynthesisRule::Deterministic).unwrap();
        let config = small_config();
        let enc = encoder_for(&corpus, &config);
        let train: Vec<&Instance> = corpus.iter().collect();
        let t2a = train_t2a(&train, &enc, &config).unwrap();
        let a2e = train_a2e(&train, &config).unwrap();
        for i in &train {
            let idx = enc.encode(&i.text);
            let (bits, emotion) = predict_pipeline(&t2a, &a2e, &idx).unwrap();
            if bits == i.gold_appraisal.unwrap() {
                assert_eq!(emotion, a2e.predict(&bits).unwrap());
            }
        }
    }

    #[test]
    fn missing_appraisal_and_empty_split() {
        let corpus = synthesize_corpus(4, 2, SynthesisRule::Deterministic).unwrap();
        let config = small_config();
        let enc = encoder_for(&corpus, &config);
        let bare = Instance::new("bare", "no appraisal here", Emotion::Joy);
        assert!(matches!(train_a2e(&[&bare], &config), Err(ModelError::MissingAppraisal(id)) if id == "bare"));
        assert!(matches!(train_multitask(&[&bare], &enc, &config), Err(ModelError::MissingAppraisal(_))));
        assert!(matches!(train_t2e(&[], &enc, &config), Err(ModelError::EmptySplit)));
    }

    #[test]
    fn multitask_shares_one_encoder() {
        let corpus = synthesize_corpus(5, 4, SynthesisRule::Deterministic).unwrap();
        let mut config = small_config();
        config.epochs = 1;
        let enc = encoder_for(&corpus, &config);
        let train: Vec<&Instance> = corpus.iter().collect();
        let model = train_multitask(&train, &enc, &config).unwrap();
        let names: Vec<&str> = model.0.params().iter().map(|(_, p)| p.name.as_str()).collect();
        assert_eq!(names.iter().filter(|n| n.starts_with("conv")).count(), 6);
        assert!(names.contains(&"emotion.w") && names.contains(&"appraisal.w"));
        let (_, bits) = model.predict(&enc.encode(&train[0].text)).unwrap();
        let _ = bits.code();
    }

    #[test]
    fn lambda_zero_leaves_appraisal_head_at_init() {
        let corpus = synthesize_corpus(6, 4, SynthesisRule::Deterministic).unwrap();
        let mut config = small_config();
        config.epochs = 2;
        config.lambda = 0.0;
        let enc = encoder_for(&corpus, &config);
        let train: Vec<&Instance> = corpus.iter().collect();
        let trained = train_multitask(&train, &enc, &config).unwrap();
        let fresh = TextCnn::init(Heads::Both, &config, &enc).unwrap();
        let get = |m: &TextCnn, n: &str| m.params().get(m.params().id(n).unwrap()).clone();
        assert_eq!(get(&trained.0, "appraisal.w"), get(&fresh, "appraisal.w"));
        assert_ne!(get(&trained.0, "emotion.w"), get(&fresh, "emotion.w"));

        // with λ = 0 the shared gradients are those of the emotion loss alone
        let idx = enc.encode(&train[0].text);
        let grads = |appraisal: Option<AppraisalVector>| {
            let mut g = crate::nn::Graph::new(fresh.params());
            let l = fresh.layout().loss(&mut g, &idx, train[0].emotion, appraisal, 0.0, &mut Mode::Infer).unwrap();
            let mut out = crate::nn::Gradients::new(fresh.params());
            g.backward(l, &mut out).unwrap();
            out
        };
        let (joint, alone) = (grads(train[0].gold_appraisal), grads(None));
        for name in ["conv2.w", "conv3.b", "conv4.w", "emotion.w", "emotion.b"] {
            let id = fresh.params().id(name).unwrap();
            assert_eq!(joint.get(id), alone.get(id), "{name}");
        }
    }

    #[test]
    fn full_models_pass_gradient_check() {
        for r in model_gradcheck(7, 5, None).unwrap() {
            assert!(r.passed, "{}: {:?}", r.name, r.outcome);
        }
    }

    #[test]
    fn model_check_catches_conv_fault() {
        let reports = model_gradcheck(7, 2, Some(OpKind::Conv1d)).unwrap();
        let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        assert_eq!(failed, ["t2e", "t2a", "multitask"]);
    }

    #[test]
    fn checkpoint_round_trip_preserves_predictions() {
        let corpus = synthesize_corpus(8, 3, SynthesisRule::Deterministic).unwrap();
        let mut config = small_config();
        config.epochs = 1;
        let enc = encoder_for(&corpus, &config);
        let train: Vec<&Instance> = corpus.iter().collect();
        let model = train_t2e(&train, &enc, &config).unwrap();
        let text = crate::nn::params_to_text(model.0.params());
        let mut restored = TextCnn::init(Heads::Emotion, &config.with_seed(99), &enc).unwrap();
        restored.load_params(&crate::nn::params_from_text(&text).unwrap()).unwrap();
        let idx = enc.encode(&train[0].text);
        assert_eq!(restored.forward(&idx).unwrap(), model.0.forward(&idx).unwrap());
    }
}
