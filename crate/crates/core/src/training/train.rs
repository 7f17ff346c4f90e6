use crate::data::{CaptionPairSet, Corpus, Split, Vocabulary};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_model, RetrievalProtocol};
use crate::model::ModelParams;
use crate::numerics::{adam_step, AdamConfig, Matrix, ParamSet};

use super::config::{EvalCadence, TrainConfig};
use super::cursor::BatchCursor;
use super::history::{
    evaluate_stopping, EvalRecord, StepRecord, StopDecision, StopReason, TrainHistory,
};
use super::scheduler::{Task, TaskScheduler};
use super::step::{c2c_gradients, c2i_gradients};

/// Hooks for progress reporting and checkpointing. Errors abort training.
pub trait TrainObserver {
    fn on_step(&mut self, _step: &StepRecord) -> Result<()> {
        Ok(())
    }

    /// Called after every evaluation; `params` are the current parameters.
    fn on_eval(
        &mut self,
        _record: &EvalRecord,
        _params: &ModelParams<f32>,
        _is_best: bool,
    ) -> Result<()> {
        Ok(())
    }
}

impl TrainObserver for () {}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters at the best validation evaluation.
    pub best: ModelParams<f32>,
    pub history: TrainHistory,
}

struct Datasets {
    /// Per configured language: training caption indices.
    c2i: Vec<Vec<usize>>,
    /// Token ids for every caption (empty outside the training split).
    encoded: Vec<Vec<usize>>,
}

fn prepare(corpus: &Corpus, vocab: &Vocabulary, config: &TrainConfig) -> Result<Datasets> {
    let mut encoded = vec![Vec::new(); corpus.captions().len()];
    for c in corpus.caption_indices(Split::Train, None) {
        encoded[c] = vocab.encode_tokens(&corpus.captions()[c].tokens)?;
    }
    let mut c2i = Vec::new();
    for lang in &config.languages {
        let caps = corpus.caption_indices(Split::Train, Some(lang));
        if caps.is_empty() {
            return Err(Error::UnknownLanguage(format!(
                "{lang} (no training captions)"
            )));
        }
        if corpus.caption_indices(Split::Val, Some(lang)).is_empty() {
            return Err(Error::UnknownLanguage(format!(
                "{lang} (no validation captions)"
            )));
        }
        c2i.push(caps);
    }
    Ok(Datasets { c2i, encoded })
}

/// Runs the multi-task loop until early stopping or the iteration cap.
pub fn train(
    corpus: &Corpus,
    vocab: &Vocabulary,
    pairs: &CaptionPairSet,
    params: ModelParams<f32>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with(corpus, vocab, pairs, params, config, &mut ())
}

pub fn train_with(
    corpus: &Corpus,
    vocab: &Vocabulary,
    pairs: &CaptionPairSet,
    mut params: ModelParams<f32>,
    config: &TrainConfig,
    observer: &mut dyn TrainObserver,
) -> Result<TrainOutcome> {
    config.validate()?;
    let use_c2c = config.c2c && config.p_c2i < 1.0;
    if use_c2c && pairs.is_empty() {
        return Err(Error::Config(
            "c2c is enabled but the caption pair set is empty".into(),
        ));
    }
    if params.vocab_size() != vocab.len() {
        return Err(Error::Incompatible(format!(
            "model has {} embedding rows, vocabulary has {} tokens",
            params.vocab_size(),
            vocab.len()
        )));
    }
    let data = prepare(corpus, vocab, config)?;
    let protocol = RetrievalProtocol::new(&config.languages);
    let adam = AdamConfig::with_lr(config.lr);

    let mut scheduler =
        TaskScheduler::new(config.seed, config.p_c2i, config.languages.len(), use_c2c);
    let mut c2i_cursors = data
        .c2i
        .iter()
        .map(|d| BatchCursor::new(d.len(), scheduler.derive_seed()))
        .collect::<Result<Vec<_>>>()?;
    let pair_seed = scheduler.derive_seed();
    let mut pair_cursor = if use_c2c {
        Some(BatchCursor::new(pairs.len(), pair_seed)?)
    } else {
        None
    };

    let epoch_len = {
        let items: usize = data.c2i.iter().map(Vec::len).sum();
        items.div_ceil(config.batch_size).max(1)
    };
    let interval = match config.resolved_cadence() {
        EvalCadence::Every(n) => n,
        _ => epoch_len,
    };

    let mut history = TrainHistory::default();
    let mut best = params.clone();
    let (mut c2i_steps, mut c2c_steps) = (0, 0);

    let evaluate = |iteration: usize,
                    params: &ModelParams<f32>,
                    history: &mut TrainHistory,
                    best: &mut ModelParams<f32>,
                    c2i_steps: usize,
                    c2c_steps: usize,
                    observer: &mut dyn TrainObserver|
     -> Result<()> {
        let report = evaluate_model(params, vocab, corpus, Split::Val, &protocol)?;
        let record = EvalRecord {
            iteration,
            recall_sum: report.recall_sum(),
            metrics: report.entries,
            c2i_steps,
            c2c_steps,
        };
        let improved = history.record_eval(record);
        if improved {
            *best = params.clone();
        }
        observer.on_eval(history.evals.last().expect("just pushed"), params, improved)
    };

    evaluate(0, &params, &mut history, &mut best, 0, 0, observer)?;
    let mut iteration = 0;
    while iteration < config.max_iterations {
        let task = scheduler.next_task();
        params.zero_grads();
        let (loss, batch) = match task {
            Task::C2i { language } => {
                let idx = c2i_cursors[language].next_batch(config.batch_size);
                let caps: Vec<usize> = idx.iter().map(|&i| data.c2i[language][i]).collect();
                let seqs: Vec<&[usize]> =
                    caps.iter().map(|&c| data.encoded[c].as_slice()).collect();
                let d_img = corpus.feature_dim();
                let mut feats = Vec::with_capacity(caps.len() * d_img);
                for &c in &caps {
                    feats.extend_from_slice(&corpus.images()[corpus.captions()[c].image].features);
                }
                let features = Matrix::from_vec(caps.len(), d_img, feats)?;
                let loss = c2i_gradients(&mut params, &seqs, &features, &config.loss)?;
                (loss, caps.len())
            }
            Task::C2c => {
                let cursor = pair_cursor.as_mut().expect("c2c enabled");
                let idx = cursor.next_batch(config.batch_size);
                let (a, b): (Vec<&[usize]>, Vec<&[usize]>) = idx
                    .iter()
                    .map(|&i| {
                        let p = pairs.pairs[i];
                        (data.encoded[p.a].as_slice(), data.encoded[p.b].as_slice())
                    })
                    .unzip();
                let loss = c2c_gradients(&mut params, &a, &b, &config.loss)?;
                (loss, idx.len())
            }
        };
        iteration += 1;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { iteration });
        }
        let blocks = match task {
            Task::C2i { .. } => {
                c2i_steps += 1;
                params.blocks_mut()
            }
            Task::C2c => {
                c2c_steps += 1;
                params.text_blocks_mut()
            }
        };
        for block in blocks {
            adam_step(block, &adam).map_err(|e| match e {
                Error::TrainingDivergence { block, .. } => Error::TrainingDivergence {
                    block,
                    iteration: Some(iteration),
                },
                other => other,
            })?;
        }
        let step = StepRecord {
            iteration,
            task,
            batch,
            loss: f64::from(loss),
        };
        observer.on_step(&step)?;
        history.steps.push(step);

        if iteration % interval == 0 {
            evaluate(
                iteration,
                &params,
                &mut history,
                &mut best,
                c2i_steps,
                c2c_steps,
                observer,
            )?;
            if evaluate_stopping(&history, config.patience) == StopDecision::Stop {
                history.stop_reason = Some(StopReason::Patience);
                break;
            }
        }
    }
    if history.stop_reason.is_none() {
        if history.evals.last().map(|e| e.iteration) != Some(iteration) {
            evaluate(
                iteration,
                &params,
                &mut history,
                &mut best,
                c2i_steps,
                c2c_steps,
                observer,
            )?;
        }
        history.stop_reason = Some(StopReason::MaxIterations);
    }
    Ok(TrainOutcome { best, history })
}
