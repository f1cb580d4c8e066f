use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::{adamw_step, AdamWState, TrainConfig, TrainError};
use crate::corpus::NUM_CLASSES;
use crate::model::{forward, predict, Batch, ModelError, Parameters, Tape, Tensor};
use crate::rng::{derive_seed, seeded_rng};
use crate::tokenizer::EncodedPair;

/// An encoded pair with its class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair {
    pub pair: EncodedPair,
    pub class: usize,
}

/// Mean over the batch of `w[label] · −log softmax(logits)[label]`.
pub fn cross_entropy_loss(logits: &Tensor, labels: &[usize], weights: Option<&[f64]>) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let l = tape.constant(logits.clone());
    let loss = tape.cross_entropy(l, labels, weights)?;
    Ok(tape.value(loss).data()[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub eval_loss: f64,
    pub eval_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,eval_loss,eval_acc";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Floats use the shortest representation that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch, r.train_loss, r.train_acc, r.eval_loss, r.eval_acc
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TrainError> {
        let mut lines = text.lines();
        if lines.next() != Some(Self::CSV_HEADER) {
            return Err(TrainError::Config("history CSV header mismatch".into()));
        }
        let bad = |line: &str| TrainError::Config(format!("bad history row {line:?}"));
        let records = lines
            .filter(|l| !l.is_empty())
            .map(|line| {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 5 {
                    return Err(bad(line));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
                Ok(EpochRecord {
                    epoch: f[0].parse().map_err(|_| bad(line))?,
                    train_loss: num(f[1])?,
                    train_acc: num(f[2])?,
                    eval_loss: num(f[3])?,
                    eval_acc: num(f[4])?,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { records })
    }
}

/// Evaluation-mode predictions over a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    /// One probability row per example.
    pub probabilities: Vec<[f64; NUM_CLASSES]>,
}

/// Runs the model without dropout over `examples` in fixed-size chunks.
///
/// Every example's logits are independent of how the set is chunked.
pub fn evaluate(
    params: &Parameters,
    examples: &[LabeledPair],
    batch_size: usize,
    class_weights: Option<&[f64]>,
) -> Result<Evaluation, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptySet("evaluation"));
    }
    let mut total_loss = 0.0;
    let mut predictions = Vec::with_capacity(examples.len());
    let mut probabilities = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(batch_size.max(1)) {
        let batch = Batch::from_pairs(chunk.iter().map(|e| &e.pair))?;
        let out = predict(params, &batch)?;
        let labels: Vec<usize> = chunk.iter().map(|e| e.class).collect();
        total_loss += cross_entropy_loss(&out.logits, &labels, class_weights)? * chunk.len() as f64;
        predictions.extend(out.predictions());
        for row in out.probabilities.data().chunks(NUM_CLASSES) {
            probabilities.push(row.try_into().expect("7 classes"));
        }
    }
    let correct = predictions.iter().zip(examples).filter(|(p, e)| **p == e.class).count();
    Ok(Evaluation {
        loss: total_loss / examples.len() as f64,
        accuracy: correct as f64 / examples.len() as f64,
        predictions,
        probabilities,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: Parameters,
    /// Parameters at the highest evaluation accuracy seen (earliest on ties).
    pub best: Parameters,
    pub best_eval_acc: f64,
    pub history: TrainingHistory,
}

/// State handed back when the loss stops being finite.
#[derive(Debug, Clone)]
pub struct DivergedRun {
    pub epoch: usize,
    pub step: u64,
    /// Parameters before the failing step.
    pub last_good: Parameters,
    pub best: Option<Parameters>,
    pub history: TrainingHistory,
}

pub fn train_loop(
    train: &[LabeledPair],
    eval: &[LabeledPair],
    params: Parameters,
    config: &TrainConfig,
) -> Result<TrainOutput, TrainError> {
    train_loop_observed(train, eval, params, config, &mut |_, _| {})
}

/// [`train_loop`] that reports each finished epoch to `observer`.
pub fn train_loop_observed(
    train: &[LabeledPair],
    eval: &[LabeledPair],
    mut params: Parameters,
    config: &TrainConfig,
    observer: &mut dyn FnMut(&EpochRecord, &Parameters),
) -> Result<TrainOutput, TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptySet("training"));
    }
    if eval.is_empty() {
        return Err(TrainError::EmptySet("evaluation"));
    }
    if let Some(bad) = train.iter().chain(eval).find(|e| e.class >= NUM_CLASSES) {
        return Err(TrainError::LabelOutOfRange { class: bad.class });
    }
    let weights = config.class_weights.as_ref().map(|w| &w[..]);
    let mut order_rng = seeded_rng(config.seed);
    let mut dropout_rng = seeded_rng(derive_seed(config.seed, 1));
    let mut state = AdamWState::new(&params);
    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, Parameters)> = None;
    params.zero_grad();

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch = Batch::from_pairs(chunk.iter().map(|&i| &train[i].pair))?;
            let labels: Vec<usize> = chunk.iter().map(|&i| train[i].class).collect();
            let mut tape = Tape::new();
            let logits = forward(&mut tape, &params, &batch, Some(&mut dropout_rng))?;
            let loss = tape.cross_entropy(logits, &labels, weights)?;
            let loss_value = tape.value(loss).data()[0];
            if !loss_value.is_finite() {
                return Err(TrainError::Diverged(Box::new(DivergedRun {
                    epoch,
                    step: state.t + 1,
                    last_good: params,
                    best: best.map(|(_, p)| p),
                    history,
                })));
            }
            let logit_values = tape.value(logits);
            correct += logit_values
                .data()
                .chunks(NUM_CLASSES)
                .zip(&labels)
                .filter(|(row, &label)| argmax(row) == label)
                .count();
            loss_sum += loss_value * chunk.len() as f64;
            tape.backward(loss, &mut params)?;
            let step = adamw_step(&mut params, &mut state, config);
            params.zero_grad();
            if let Err(TrainError::NonFiniteGradient { .. }) = step {
                return Err(TrainError::Diverged(Box::new(DivergedRun {
                    epoch,
                    step: state.t + 1,
                    last_good: params,
                    best: best.map(|(_, p)| p),
                    history,
                })));
            }
            step?;
            if let Some(every) = config.eval_every {
                if state.t.is_multiple_of(every as u64) {
                    let ev = evaluate(&params, eval, config.batch_size, weights)?;
                    keep_if_better(&mut best, ev.accuracy, &params);
                }
            }
        }
        let ev = evaluate(&params, eval, config.batch_size, weights)?;
        keep_if_better(&mut best, ev.accuracy, &params);
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_acc: correct as f64 / train.len() as f64,
            eval_loss: ev.loss,
            eval_acc: ev.accuracy,
        };
        observer(&record, &params);
        history.records.push(record);
    }
    let (best_eval_acc, best) = match best {
        Some(b) => b,
        None => {
            let ev = evaluate(&params, eval, config.batch_size, weights)?;
            (ev.accuracy, params.clone())
        }
    };
    Ok(TrainOutput {
        params,
        best,
        best_eval_acc,
        history,
    })
}

fn keep_if_better(best: &mut Option<(f64, Parameters)>, accuracy: f64, params: &Parameters) {
    if best.as_ref().is_none_or(|(acc, _)| accuracy > *acc) {
        *best = Some((accuracy, params.clone()));
    }
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        )
        .0
}
