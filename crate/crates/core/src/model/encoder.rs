use rand_chacha::ChaCha8Rng;

use super::params::Parameters;
use super::tape::{Tape, Var};
use super::tensor::{softmax, Tensor};
use super::ModelError;
use crate::tokenizer::EncodedPair;

/// Token, segment and mask rows for a batch, flattened row-major `(batch, seq_len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<u32>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
    pub batch: usize,
    pub seq_len: usize,
}

impl Batch {
    /// Stacks pairs, cutting trailing padding shared by every pair.
    ///
    /// Padding never influences unmasked outputs, so the cut changes nothing
    /// but the amount of work.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a EncodedPair>,
    {
        let pairs: Vec<&EncodedPair> = pairs.into_iter().collect();
        let seq_len = pairs.iter().map(|p| p.true_length).max().unwrap_or(0);
        Self::stack(&pairs, seq_len)
    }

    /// Stacks pairs at their full padded length; all must share it.
    pub fn from_pairs_padded<'a, I>(pairs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a EncodedPair>,
    {
        let pairs: Vec<&EncodedPair> = pairs.into_iter().collect();
        let seq_len = pairs.first().map_or(0, |p| p.len());
        if pairs.iter().any(|p| p.len() != seq_len) {
            return Err(ModelError::Shape("pairs have different padded lengths".into()));
        }
        Self::stack(&pairs, seq_len)
    }

    fn stack(pairs: &[&EncodedPair], seq_len: usize) -> Result<Self, ModelError> {
        if pairs.is_empty() {
            return Err(ModelError::Shape("empty batch".into()));
        }
        let mut batch = Self {
            ids: Vec::with_capacity(pairs.len() * seq_len),
            segment_ids: Vec::with_capacity(pairs.len() * seq_len),
            attention_mask: Vec::with_capacity(pairs.len() * seq_len),
            batch: pairs.len(),
            seq_len,
        };
        for pair in pairs {
            if pair.len() < seq_len || pair.segment_ids.len() != pair.len() || pair.attention_mask.len() != pair.len() {
                return Err(ModelError::Shape(format!(
                    "pair of length {} cannot fill {seq_len} positions",
                    pair.len()
                )));
            }
            batch.ids.extend_from_slice(&pair.ids[..seq_len]);
            batch.segment_ids.extend_from_slice(&pair.segment_ids[..seq_len]);
            batch.attention_mask.extend_from_slice(&pair.attention_mask[..seq_len]);
        }
        Ok(batch)
    }
}

/// Pre-normalization sum of token, position and segment embeddings, `(batch, seq, hidden)`.
pub fn embedding_sum(tape: &mut Tape, params: &Parameters, batch: &Batch) -> Result<Var, ModelError> {
    let config = params.config();
    if batch.seq_len > config.max_len {
        return Err(ModelError::IndexOutOfRange {
            index: batch.seq_len - 1,
            size: config.max_len,
        });
    }
    let shape = vec![batch.batch, batch.seq_len, config.hidden];
    let emb = &params.layout().embeddings;
    let token_rows: Vec<usize> = batch.ids.iter().map(|&id| id as usize).collect();
    let position_rows: Vec<usize> = (0..batch.batch).flat_map(|_| 0..batch.seq_len).collect();
    let segment_rows: Vec<usize> = batch.segment_ids.iter().map(|&s| s as usize).collect();

    let table = tape.param(params, emb.token);
    let tokens = tape.gather(table, &token_rows, shape.clone())?;
    let table = tape.param(params, emb.position);
    let positions = tape.gather(table, &position_rows, shape.clone())?;
    let table = tape.param(params, emb.segment);
    let segments = tape.gather(table, &segment_rows, shape)?;
    let sum = tape.add(tokens, positions)?;
    tape.add(sum, segments)
}

/// Summed embeddings followed by layer norm and dropout.
pub fn embed(
    tape: &mut Tape,
    params: &Parameters,
    batch: &Batch,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Var, ModelError> {
    let emb = &params.layout().embeddings;
    let sum = embedding_sum(tape, params, batch)?;
    let scale = tape.param(params, emb.norm_scale);
    let shift = tape.param(params, emb.norm_shift);
    let normed = tape.layer_norm(sum, scale, shift, params.config().layer_norm_eps)?;
    tape.dropout(normed, params.config().dropout, rng)
}

fn linear(
    tape: &mut Tape,
    params: &Parameters,
    x: Var,
    weight: super::ParamId,
    bias: super::ParamId,
) -> Result<Var, ModelError> {
    let w = tape.param(params, weight);
    let b = tape.param(params, bias);
    let y = tape.matmul(x, w)?;
    tape.add_bias(y, b)
}

/// Runs every encoder block over `x` of shape `(batch, seq, hidden)`.
pub fn encoder_forward(
    tape: &mut Tape,
    x: Var,
    attention_mask: &[u8],
    params: &Parameters,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<Var, ModelError> {
    let config = params.config();
    let shape = tape.value(x).shape().to_vec();
    if shape.len() != 3 || shape[2] != config.hidden || attention_mask.len() != shape[0] * shape[1] {
        return Err(ModelError::Shape(format!(
            "encoder input {shape:?} with {} mask entries for hidden size {}",
            attention_mask.len(),
            config.hidden
        )));
    }
    let eps = config.layer_norm_eps;
    let mut hidden = x;
    for layer in &params.layout().layers {
        let q = linear(tape, params, hidden, layer.query_weight, layer.query_bias)?;
        let k = linear(tape, params, hidden, layer.key_weight, layer.key_bias)?;
        let v = linear(tape, params, hidden, layer.value_weight, layer.value_bias)?;
        let context = tape.attention(q, k, v, attention_mask, config.heads)?;
        let attended = linear(tape, params, context, layer.output_weight, layer.output_bias)?;
        let attended = tape.dropout(attended, config.dropout, rng.as_deref_mut())?;
        let residual = tape.add(hidden, attended)?;
        let scale = tape.param(params, layer.attention_norm_scale);
        let shift = tape.param(params, layer.attention_norm_shift);
        let normed = tape.layer_norm(residual, scale, shift, eps)?;

        let inner = linear(tape, params, normed, layer.ff_in_weight, layer.ff_in_bias)?;
        let inner = tape.gelu(inner)?;
        let outer = linear(tape, params, inner, layer.ff_out_weight, layer.ff_out_bias)?;
        let outer = tape.dropout(outer, config.dropout, rng.as_deref_mut())?;
        let residual = tape.add(normed, outer)?;
        let scale = tape.param(params, layer.output_norm_scale);
        let shift = tape.param(params, layer.output_norm_shift);
        hidden = tape.layer_norm(residual, scale, shift, eps)?;
    }
    Ok(hidden)
}

/// Linear classifier over the `[CLS]` position; returns logits `(batch, n_labels)`.
pub fn classify(
    tape: &mut Tape,
    encoded: Var,
    params: &Parameters,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<Var, ModelError> {
    let shape = tape.value(encoded).shape().to_vec();
    if shape.len() != 3 || shape[2] != params.config().hidden {
        return Err(ModelError::Shape(format!("classifier input {shape:?}")));
    }
    let (batch, seq) = (shape[0], shape[1]);
    let cls_rows: Vec<usize> = (0..batch).map(|b| b * seq).collect();
    let cls = tape.select_rows(encoded, &cls_rows)?;
    let cls = tape.dropout(cls, params.config().dropout, rng)?;
    let layout = params.layout();
    linear(tape, params, cls, layout.classifier_weight, layout.classifier_bias)
}

/// Full forward pass to logits. Dropout is active only when `rng` is given.
pub fn forward(
    tape: &mut Tape,
    params: &Parameters,
    batch: &Batch,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<Var, ModelError> {
    let x = embed(tape, params, batch, rng.as_deref_mut())?;
    let encoded = encoder_forward(tape, x, &batch.attention_mask, params, rng.as_deref_mut())?;
    classify(tape, encoded, params, rng)
}

/// Logits and their row-wise softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierOutput {
    pub logits: Tensor,
    pub probabilities: Tensor,
}

impl ClassifierOutput {
    pub fn from_logits(logits: Tensor) -> Self {
        let cols = logits.cols();
        let probs: Vec<f64> = logits.data().chunks(cols).flat_map(softmax).collect();
        let probabilities = Tensor::new(logits.shape().to_vec(), probs).expect("same shape");
        Self { logits, probabilities }
    }

    /// Highest-probability class per row (first index on ties).
    pub fn predictions(&self) -> Vec<usize> {
        self.probabilities
            .data()
            .chunks(self.probabilities.cols())
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |best, (i, &p)| if p > best.1 { (i, p) } else { best },
                    )
                    .0
            })
            .collect()
    }
}

/// Evaluation-mode prediction.
pub fn predict(params: &Parameters, batch: &Batch) -> Result<ClassifierOutput, ModelError> {
    let mut tape = Tape::new();
    let logits = forward(&mut tape, params, batch, None)?;
    Ok(ClassifierOutput::from_logits(tape.value(logits).clone()))
}
