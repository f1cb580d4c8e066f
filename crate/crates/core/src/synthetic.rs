//! Deterministic fixture generators used by tests, benches and the acceptance suite.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AspectAnnotation, Review, SentimentLabel};
use crate::eval::{ClassMetrics, ConfusionMatrix};
use crate::lexicon::{load_lexicon, Lexicon};
use crate::rng::seeded_rng;

pub const SAMPLE_LEXICON_TSV: &str = include_str!("../fixtures/sample_lexicon.tsv");
pub const SAMPLE_REVIEWS_XML: &str = include_str!("../fixtures/sample_reviews.xml");

/// Aspect term and its expected enriched rendering.
pub const SAMPLE_RENDERINGS: [(&str, &str); 3] = [
    ("طعم", "طعم، چاشنی، مزه، چشایی، ذائقه و مذاق"),
    ("ارزش خرید", "ارزش خرید، ارزشمند، شایسته خریدن و لایق خریدن"),
    ("کلی", "کلی، عام، عمومی، همگانی، در مجموع، فراگیر، جامع و در کل"),
];

pub fn sample_lexicon() -> Lexicon {
    load_lexicon(SAMPLE_LEXICON_TSV.as_bytes()).expect("bundled lexicon parses")
}

/// Per-class (precision, recall, F1, support) rows of the proposed model's metrics table.
pub const PROPOSED_METRIC_ROWS: [(f64, f64, f64, u64); 7] = [
    (0.97, 0.97, 0.97, 943),
    (0.72, 0.69, 0.71, 91),
    (0.63, 0.67, 0.65, 88),
    (1.00, 0.12, 0.22, 8),
    (0.65, 0.77, 0.70, 111),
    (0.75, 0.63, 0.69, 76),
    (0.44, 0.30, 0.36, 27),
];

/// Same layout for the baseline model.
pub const BASELINE_METRIC_ROWS: [(f64, f64, f64, u64); 7] = [
    (0.96, 0.97, 0.97, 943),
    (0.74, 0.69, 0.72, 91),
    (0.55, 0.59, 0.57, 88),
    (0.00, 0.00, 0.00, 8),
    (0.62, 0.65, 0.63, 111),
    (0.68, 0.71, 0.70, 76),
    (0.38, 0.22, 0.28, 27),
];

/// Rows of a metrics table as [`ClassMetrics`], taking every value verbatim.
pub fn metric_rows(rows: &[(f64, f64, f64, u64); 7]) -> [ClassMetrics; 7] {
    rows.map(|(precision, recall, f1, support)| ClassMetrics {
        precision,
        recall,
        f1,
        support,
        undefined: false,
    })
}

/// A confusion matrix whose per-class precision, recall and F1 all round to
/// the [`PROPOSED_METRIC_ROWS`] values. The counts are reconstructed, not original.
pub const PROPOSED_CONFUSION: ConfusionMatrix = ConfusionMatrix {
    counts: [
        [914, 0, 0, 0, 29, 0, 0],
        [0, 63, 28, 0, 0, 0, 0],
        [29, 0, 59, 0, 0, 0, 0],
        [4, 0, 2, 1, 0, 0, 1],
        [0, 0, 0, 0, 86, 16, 9],
        [0, 24, 0, 0, 4, 48, 0],
        [0, 0, 5, 0, 14, 0, 8],
    ],
};

/// Label share per raw label value, in the order the distribution is usually
/// quoted: no comment, positive, negative, very negative, very positive,
/// neutral, mixed.
pub const LABEL_PROPORTIONS: [(i8, f64); 7] = [
    (-3, 0.695),
    (1, 0.08),
    (-1, 0.068),
    (-2, 0.066),
    (2, 0.06),
    (0, 0.003),
    (3, 0.028),
];

/// Distinct lowercase pseudo-words built from consonant-vowel syllables.
pub fn pseudo_words(rng: &mut ChaCha8Rng, count: usize, syllables: usize) -> Vec<String> {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut seen = std::collections::HashSet::new();
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let word: String = (0..syllables)
            .flat_map(|_| {
                [
                    *CONSONANTS.choose(rng).expect("nonempty") as char,
                    *VOWELS.choose(rng).expect("nonempty") as char,
                ]
            })
            .collect();
        if seen.insert(word.clone()) {
            words.push(word);
        }
    }
    words
}

fn label(raw: i8) -> SentimentLabel {
    SentimentLabel::new(i64::from(raw)).expect("valid label")
}

/// 200 equal-length reviews with 5 aspects each whose 1,000 labels follow
/// [`LABEL_PROPORTIONS`] exactly.
pub fn proportioned_dataset(seed: u64) -> Vec<Review> {
    let mut rng = seeded_rng(seed);
    let mut labels: Vec<i8> = LABEL_PROPORTIONS
        .iter()
        .flat_map(|&(raw, share)| std::iter::repeat_n(raw, (share * 1000.0).round() as usize))
        .collect();
    debug_assert_eq!(labels.len(), 1000);
    labels.shuffle(&mut rng);
    let vocabulary = pseudo_words(&mut rng, 50, 2);
    let aspects = ["taste", "price", "quality", "packaging", "freshness"];
    labels
        .chunks(aspects.len())
        .enumerate()
        .map(|(i, chunk)| Review {
            id: format!("lp-{i:03}"),
            category: if i % 2 == 0 { "dairy" } else { "snacks" }.to_string(),
            text: (0..8)
                .map(|_| vocabulary.choose(&mut rng).expect("nonempty").as_str())
                .collect::<Vec<_>>()
                .join(" "),
            aspects: aspects
                .iter()
                .zip(chunk)
                .map(|(term, &raw)| AspectAnnotation {
                    term: term.to_string(),
                    label: label(raw),
                })
                .collect(),
        })
        .collect()
}

/// 64 single-aspect reviews, each holding exactly one of seven cue words
/// that fixes its label, surrounded by random filler.
pub fn overfit_reviews(seed: u64) -> Vec<Review> {
    let mut rng = seeded_rng(seed);
    let words = pseudo_words(&mut rng, 67, 2);
    let (cues, filler) = words.split_at(7);
    let aspects = ["taste", "price", "quality", "smell"];
    let mut labels: Vec<i8> = (0..64).map(|i| (i % 7) as i8 - 3).collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, raw)| {
            let len = rng.random_range(5..=9);
            let mut text: Vec<&str> = (0..len)
                .map(|_| filler.choose(&mut rng).expect("nonempty").as_str())
                .collect();
            text.insert(rng.random_range(0..=len), &cues[(raw + 3) as usize]);
            Review {
                id: format!("of-{i:02}"),
                category: "food".into(),
                text: text.join(" "),
                aspects: vec![AspectAnnotation {
                    term: aspects[i % aspects.len()].into(),
                    label: label(raw),
                }],
            }
        })
        .collect()
}

/// Shape of the synonym-only corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynonymCorpusConfig {
    pub aspects: usize,
    pub synonyms_per_aspect: usize,
    /// Synonyms per aspect that appear only in test reviews.
    pub held_out_synonyms: usize,
    pub train_reviews: usize,
    pub test_reviews: usize,
    pub filler_words: usize,
    pub words_per_review: usize,
}

impl Default for SynonymCorpusConfig {
    fn default() -> Self {
        Self {
            aspects: 8,
            synonyms_per_aspect: 6,
            held_out_synonyms: 2,
            train_reviews: 400,
            test_reviews: 100,
            filler_words: 40,
            words_per_review: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynonymCorpus {
    pub lexicon: Lexicon,
    pub train: Vec<Review>,
    pub test: Vec<Review>,
}

/// Reviews that each praise or criticize one aspect and say nothing of a
/// second one (label -3).
///
/// Training reviews name the aspect by its headword or one of its training
/// synonyms; test reviews only ever use a held-out synonym, so the aspect term
/// itself never occurs in any test review.
pub fn synonym_corpus(config: &SynonymCorpusConfig, seed: u64) -> SynonymCorpus {
    assert!(config.aspects >= 2 && config.held_out_synonyms >= 1);
    assert!(config.held_out_synonyms < config.synonyms_per_aspect);
    let mut rng = seeded_rng(seed);
    let words = pseudo_words(
        &mut rng,
        config.aspects * (1 + config.synonyms_per_aspect) + config.filler_words + 6,
        3,
    );
    let mut pool = words.into_iter();
    let mut lexicon = Lexicon::new();
    let mut entries = Vec::new();
    for _ in 0..config.aspects {
        let head = pool.next().expect("enough words");
        let synonyms: Vec<String> = pool.by_ref().take(config.synonyms_per_aspect).collect();
        lexicon.insert(&head, &synonyms);
        entries.push((head, synonyms));
    }
    let positive: Vec<String> = pool.by_ref().take(3).collect();
    let negative: Vec<String> = pool.by_ref().take(3).collect();
    let filler: Vec<String> = pool.collect();

    let mut make = |prefix: &str, count: usize, test: bool| -> Vec<Review> {
        (0..count)
            .map(|i| {
                let a = rng.random_range(0..config.aspects);
                let mut b = rng.random_range(0..config.aspects - 1);
                if b >= a {
                    b += 1;
                }
                let (head, synonyms) = &entries[a];
                let train_forms = &synonyms[..synonyms.len() - config.held_out_synonyms];
                let mention = if test {
                    synonyms[synonyms.len() - config.held_out_synonyms..].choose(&mut rng)
                } else if rng.random_bool(0.25) {
                    Some(head)
                } else {
                    train_forms.choose(&mut rng)
                }
                .expect("nonempty")
                .clone();
                let good = rng.random_bool(0.5);
                let sentiment = if good { &positive } else { &negative }
                    .choose(&mut rng)
                    .expect("nonempty")
                    .clone();
                let mut tokens: Vec<String> = (0..config.words_per_review.saturating_sub(2))
                    .map(|_| filler.choose(&mut rng).expect("nonempty").clone())
                    .collect();
                tokens.push(mention);
                tokens.push(sentiment);
                tokens.shuffle(&mut rng);
                let mut aspects = vec![
                    AspectAnnotation {
                        term: head.clone(),
                        label: label(if good { 1 } else { -1 }),
                    },
                    AspectAnnotation {
                        term: entries[b].0.clone(),
                        label: label(-3),
                    },
                ];
                aspects.shuffle(&mut rng);
                Review {
                    id: format!("{prefix}-{i:04}"),
                    category: "synthetic".into(),
                    text: tokens.join(" "),
                    aspects,
                }
            })
            .collect()
    };
    let train = make("syn-train", config.train_reviews, false);
    let test = make("syn-test", config.test_reviews, true);
    SynonymCorpus { lexicon, train, test }
}
