//! Glue from annotated examples to model-ready labeled pairs.

use crate::corpus::{Example, LabelMap};
use crate::lexicon::{enrich_aspect, EnrichedAspect, Lexicon, LexiconError};
use crate::tokenizer::{encode_pair_with_headword, TokenizerError, Vocabulary};
use crate::train::LabeledPair;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("review {review_id}, aspect {aspect:?}: {source}")]
    Lexicon {
        review_id: String,
        aspect: String,
        source: LexiconError,
    },
    #[error("review {review_id}, aspect {aspect:?}: {source}")]
    Tokenizer {
        review_id: String,
        aspect: String,
        source: TokenizerError,
    },
}

/// Whether auxiliary sentences carry lexicon synonyms.
#[derive(Debug, Clone, Copy)]
pub enum Auxiliary<'a> {
    Enriched {
        lexicon: &'a Lexicon,
        max_tokens: usize,
    },
    /// The aspect term alone.
    Raw,
}

impl Auxiliary<'_> {
    pub fn render(&self, aspect: &str) -> Result<EnrichedAspect, LexiconError> {
        match *self {
            Auxiliary::Enriched { lexicon, max_tokens } => enrich_aspect(lexicon, aspect, max_tokens),
            Auxiliary::Raw => enrich_aspect(&Lexicon::new(), aspect, usize::MAX),
        }
    }
}

/// Example with its rendered auxiliary sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedExample {
    pub example: Example,
    pub auxiliary: EnrichedAspect,
}

pub fn prepare_examples(examples: &[Example], auxiliary: Auxiliary<'_>) -> Result<Vec<PreparedExample>, PipelineError> {
    examples
        .iter()
        .map(|e| {
            let aux = auxiliary
                .render(&e.aspect_term)
                .map_err(|source| PipelineError::Lexicon {
                    review_id: e.review_id.clone(),
                    aspect: e.aspect_term.clone(),
                    source,
                })?;
            Ok(PreparedExample {
                example: e.clone(),
                auxiliary: aux,
            })
        })
        .collect()
}

/// Tokenizes and labels prepared examples; the headword is protected from truncation.
pub fn encode_examples(
    prepared: &[PreparedExample],
    vocab: &Vocabulary,
    max_len: usize,
    label_map: &LabelMap,
) -> Result<Vec<LabeledPair>, PipelineError> {
    prepared
        .iter()
        .map(|p| {
            let pair = encode_pair_with_headword(
                &p.example.review_text,
                &p.auxiliary.rendered,
                &p.auxiliary.headword,
                vocab,
                max_len,
            )
            .map_err(|source| PipelineError::Tokenizer {
                review_id: p.example.review_id.clone(),
                aspect: p.example.aspect_term.clone(),
                source,
            })?;
            Ok(LabeledPair {
                pair,
                class: label_map.class_of(p.example.label),
            })
        })
        .collect()
}

/// Texts a vocabulary should be learned from: every review plus every auxiliary.
pub fn vocab_corpus(prepared: &[PreparedExample]) -> Vec<&str> {
    let mut seen = std::collections::HashSet::new();
    let mut texts = Vec::new();
    for p in prepared {
        for text in [p.example.review_text.as_str(), p.auxiliary.rendered.as_str()] {
            if seen.insert(text) {
                texts.push(text);
            }
        }
    }
    texts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{flatten_examples, parse_dataset};
    use crate::synthetic::{sample_lexicon, SAMPLE_REVIEWS_XML};
    use crate::tokenizer::build_vocab;

    #[test]
    fn sample_end_to_end() {
        let reviews = parse_dataset(SAMPLE_REVIEWS_XML.as_bytes()).unwrap();
        let map = LabelMap::default();
        let examples = flatten_examples(&reviews, &map).unwrap();
        let lex = sample_lexicon();
        let prepared = prepare_examples(
            &examples,
            Auxiliary::Enriched {
                lexicon: &lex,
                max_tokens: 32,
            },
        )
        .unwrap();
        assert_eq!(prepared[0].auxiliary.rendered, "طعم، چاشنی، مزه، چشایی، ذائقه و مذاق");
        let raw = prepare_examples(&examples, Auxiliary::Raw).unwrap();
        assert_eq!(raw[1].auxiliary.rendered, "ارزش خرید");
        let vocab = build_vocab(&vocab_corpus(&prepared), 300).unwrap();
        let pairs = encode_examples(&prepared, &vocab, 64, &map).unwrap();
        assert_eq!(pairs.len(), 4);
        assert_eq!(pairs[2].class, map.class_of(crate::SentimentLabel::new(1).unwrap()));
    }
}
