//! Aspect-based sentiment analysis over (review, lexicon-enriched aspect)
//! sentence pairs with a from-scratch BERT-style encoder.

pub mod corpus;
pub mod eval;
pub mod lexicon;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod synthetic;
pub mod tokenizer;
pub mod train;

pub use corpus::{Example, LabelDistribution, LabelMap, Review, SentimentLabel, SplitConfig, NUM_CLASSES};
pub use lexicon::{EnrichedAspect, Lexicon};
pub use tokenizer::{EncodedPair, Vocabulary};
