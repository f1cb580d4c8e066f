//! WordPiece tokenization and `[CLS] review [SEP] auxiliary [SEP]` pair encoding.

mod encode;
mod vocab;

use thiserror::Error;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

pub use encode::{decode, encode_pair, encode_pair_with_headword, EncodedPair, DEFAULT_MAX_LEN, MIN_MAX_LEN};
pub use vocab::{
    build_vocab, load_vocab, Vocabulary, CLS, CLS_ID, MASK, MASK_ID, MAX_VOCAB_SIZE, PAD, PAD_ID, RESERVED, SEP,
    SEP_ID, UNK, UNK_ID,
};

pub type TokenId = u32;

/// Prefix marking a piece that continues the previous one.
pub const CONTINUATION_PREFIX: &str = "##";

/// Words longer than this many characters become `[UNK]`.
const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum TokenizerError {
    #[error("vocabulary is not valid UTF-8 (byte {0})")]
    Encoding(usize),
    #[error("token {token:?} appears on lines {first_line} and {second_line}")]
    DuplicateToken {
        token: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("line {line}: expected reserved token {expected}, found {found:?}")]
    ReservedToken {
        line: usize,
        expected: String,
        found: Option<String>,
    },
    #[error("line {line}: empty token")]
    EmptyToken { line: usize },
    #[error("vocabulary size {0} exceeds {MAX_VOCAB_SIZE}")]
    VocabTooLarge(usize),
    #[error("target size {target} cannot hold the reserved tokens and alphabet ({minimum})")]
    TargetTooSmall { target: usize, minimum: usize },
    #[error("review is empty")]
    EmptyReview,
    #[error("auxiliary sentence is empty")]
    EmptyAuxiliary,
    #[error("max_len {0} is below the minimum of {MIN_MAX_LEN}")]
    MaxLenTooSmall(usize),
    #[error("pair needs at least {needed} positions but max_len is {max_len}")]
    AuxiliaryTooLong { needed: usize, max_len: usize },
    #[error("token id {id} is outside a vocabulary of {size}")]
    IdOutOfRange { id: TokenId, size: usize },
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || c.general_category_group() == GeneralCategoryGroup::Punctuation
}

/// Splits on Unicode whitespace and isolates every punctuation character.
pub fn pre_tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let mut start = 0;
        for (i, c) in chunk.char_indices() {
            if is_punctuation(c) {
                if start < i {
                    out.push(&chunk[start..i]);
                }
                out.push(&chunk[i..i + c.len_utf8()]);
                start = i + c.len_utf8();
            }
        }
        if start < chunk.len() {
            out.push(&chunk[start..]);
        }
    }
    out
}

/// Greedy longest-match-first segmentation of one word into vocabulary ids.
///
/// Returns `[UNK]` when no complete segmentation exists. Reserved tokens never
/// match word text.
pub fn wordpiece_ids(word: &str, vocab: &Vocabulary) -> Vec<TokenId> {
    let chars: Vec<(usize, char)> = word.char_indices().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() > MAX_WORD_CHARS {
        return vec![UNK_ID];
    }
    let byte_at = |i: usize| chars.get(i).map_or(word.len(), |&(b, _)| b);
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut candidate = String::new();
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while end > start {
            candidate.clear();
            if start > 0 {
                candidate.push_str(CONTINUATION_PREFIX);
            }
            candidate.push_str(&word[byte_at(start)..byte_at(end)]);
            if let Some(id) = vocab.id(&candidate).filter(|&id| !Vocabulary::is_special(id)) {
                found = Some(id);
                break;
            }
            end -= 1;
        }
        match found {
            Some(id) => {
                pieces.push(id);
                start = end;
            }
            None => return vec![UNK_ID],
        }
    }
    pieces
}

/// [`wordpiece_ids`] as token strings.
pub fn wordpiece_tokenize(word: &str, vocab: &Vocabulary) -> Vec<String> {
    wordpiece_ids(word, vocab)
        .into_iter()
        .map(|id| vocab.token(id).expect("ids come from the vocabulary").to_string())
        .collect()
}

/// Pre-tokenizes and segments a whole text.
pub fn tokenize_ids(text: &str, vocab: &Vocabulary) -> Vec<TokenId> {
    pre_tokenize(text)
        .into_iter()
        .flat_map(|word| wordpiece_ids(word, vocab))
        .collect()
}

pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<String> {
    pre_tokenize(text)
        .into_iter()
        .flat_map(|word| wordpiece_tokenize(word, vocab))
        .collect()
}
