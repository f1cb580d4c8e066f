use serde::{Deserialize, Serialize};

use super::{
    pre_tokenize, tokenize_ids, TokenId, TokenizerError, Vocabulary, CLS_ID, CONTINUATION_PREFIX, PAD_ID, SEP_ID,
};

pub const DEFAULT_MAX_LEN: usize = 128;
pub const MIN_MAX_LEN: usize = 8;

/// A padded `[CLS] review [SEP] auxiliary [SEP] [PAD]…` sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedPair {
    pub ids: Vec<TokenId>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
    /// Number of non-padding positions (up to and including the second `[SEP]`).
    pub true_length: usize,
}

impl EncodedPair {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Encodes a pair, protecting the first word of the auxiliary from truncation.
pub fn encode_pair(
    review: &str,
    auxiliary: &str,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedPair, TokenizerError> {
    let head = pre_tokenize(auxiliary).into_iter().next().unwrap_or("");
    encode_pair_with_headword(review, auxiliary, head, vocab, max_len)
}

/// Encodes a pair whose auxiliary sentence starts with `headword`.
///
/// When the pair does not fit, review tokens are dropped from the tail (down
/// to one), then auxiliary tokens from the tail (down to the headword's
/// tokens). If that is still too long the pair is rejected.
pub fn encode_pair_with_headword(
    review: &str,
    auxiliary: &str,
    headword: &str,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedPair, TokenizerError> {
    if max_len < MIN_MAX_LEN {
        return Err(TokenizerError::MaxLenTooSmall(max_len));
    }
    let mut review_ids = tokenize_ids(review, vocab);
    if review_ids.is_empty() {
        return Err(TokenizerError::EmptyReview);
    }
    let mut aux_ids = tokenize_ids(auxiliary, vocab);
    if aux_ids.is_empty() {
        return Err(TokenizerError::EmptyAuxiliary);
    }
    let floor = tokenize_ids(headword, vocab).len().clamp(1, aux_ids.len());

    let budget = max_len - 3;
    let mut excess = (review_ids.len() + aux_ids.len()).saturating_sub(budget);
    let cut_review = excess.min(review_ids.len() - 1);
    review_ids.truncate(review_ids.len() - cut_review);
    excess -= cut_review;
    if excess > aux_ids.len() - floor {
        return Err(TokenizerError::AuxiliaryTooLong {
            needed: floor + 4,
            max_len,
        });
    }
    aux_ids.truncate(aux_ids.len() - excess);

    let mut ids = Vec::with_capacity(max_len);
    let mut segment_ids = Vec::with_capacity(max_len);
    ids.push(CLS_ID);
    ids.extend_from_slice(&review_ids);
    ids.push(SEP_ID);
    segment_ids.resize(ids.len(), 0);
    ids.extend_from_slice(&aux_ids);
    ids.push(SEP_ID);
    segment_ids.resize(ids.len(), 1);
    let true_length = ids.len();
    ids.resize(max_len, PAD_ID);
    segment_ids.resize(max_len, 0);
    let mut attention_mask = vec![1u8; true_length];
    attention_mask.resize(max_len, 0);
    Ok(EncodedPair {
        ids,
        segment_ids,
        attention_mask,
        true_length,
    })
}

/// Joins pieces back into space-separated words, dropping reserved tokens.
pub fn decode(ids: &[TokenId], vocab: &Vocabulary) -> Result<String, TokenizerError> {
    let mut words: Vec<String> = Vec::new();
    for &id in ids {
        let token = vocab
            .token(id)
            .ok_or(TokenizerError::IdOutOfRange { id, size: vocab.len() })?;
        if Vocabulary::is_special(id) {
            continue;
        }
        match (token.strip_prefix(CONTINUATION_PREFIX), words.last_mut()) {
            (Some(rest), Some(last)) => last.push_str(rest),
            (Some(rest), None) => words.push(rest.to_string()),
            (None, _) => words.push(token.to_string()),
        }
    }
    Ok(words.join(" "))
}
