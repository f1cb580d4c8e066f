//! Review datasets: XML ingestion, aspect-level flattening, length filtering,
//! train/test splitting and label statistics.
//!
//! The on-disk schema is
//!
//! ```xml
//! <dataset>
//!   <review id="r1" category="dairy">
//!     <text>…</text>
//!     <aspects>
//!       <aspect term="طعم" polarity="1"/>
//!     </aspects>
//!   </review>
//! </dataset>
//! ```
//!
//! Unknown elements and attributes are skipped.

use std::collections::{HashMap, HashSet};
use std::fmt;

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::seeded_rng;

/// Number of sentiment classes.
pub const NUM_CLASSES: usize = 7;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("review {review_id:?}: {message}")]
    Validation { review_id: String, message: String },
    #[error("label {0} is outside -3..=3")]
    LabelOutOfRange(i64),
    #[error("invalid label map: {0}")]
    LabelMap(String),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("class {class} has zero examples; disable class weighting or merge classes")]
    ZeroCountClass { class: usize },
}

/// A raw polarity value from the dataset, always in `-3..=3`.
///
/// `-3` marks an aspect the review does not talk about, `3` a mixed opinion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub struct SentimentLabel(i8);

impl SentimentLabel {
    pub const MIN: i8 = -3;
    pub const MAX: i8 = 3;

    pub fn new(raw: i64) -> Result<Self, CorpusError> {
        if (Self::MIN as i64..=Self::MAX as i64).contains(&raw) {
            Ok(Self(raw as i8))
        } else {
            Err(CorpusError::LabelOutOfRange(raw))
        }
    }

    pub fn raw(self) -> i8 {
        self.0
    }

    /// Human-readable name of the polarity.
    pub fn name(self) -> &'static str {
        match self.0 {
            -3 => "not mentioned",
            -2 => "very negative",
            -1 => "negative",
            0 => "neutral",
            1 => "positive",
            2 => "very positive",
            _ => "mixed",
        }
    }
}

impl TryFrom<i8> for SentimentLabel {
    type Error = CorpusError;

    fn try_from(raw: i8) -> Result<Self, Self::Error> {
        Self::new(raw as i64)
    }
}

impl From<SentimentLabel> for i8 {
    fn from(label: SentimentLabel) -> i8 {
        label.0
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bijection between raw polarities and class indices `0..7`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    raw_by_class: [i8; NUM_CLASSES],
}

impl Default for LabelMap {
    /// Ascending raw order: `-3 → 0`, `-2 → 1`, …, `3 → 6`.
    fn default() -> Self {
        Self {
            raw_by_class: [-3, -2, -1, 0, 1, 2, 3],
        }
    }
}

impl LabelMap {
    /// Builds a map from the raw label assigned to each class index.
    pub fn from_order(raw_by_class: [i8; NUM_CLASSES]) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for &raw in &raw_by_class {
            SentimentLabel::new(raw as i64)
                .map_err(|_| CorpusError::LabelMap(format!("{raw} is not a valid polarity")))?;
            if !seen.insert(raw) {
                return Err(CorpusError::LabelMap(format!("polarity {raw} listed twice")));
            }
        }
        Ok(Self { raw_by_class })
    }

    pub fn class_of(&self, label: SentimentLabel) -> usize {
        self.raw_by_class
            .iter()
            .position(|&raw| raw == label.raw())
            .expect("label map covers every polarity")
    }

    pub fn label_of(&self, class: usize) -> Option<SentimentLabel> {
        self.raw_by_class.get(class).map(|&raw| SentimentLabel(raw))
    }

    pub fn order(&self) -> [i8; NUM_CLASSES] {
        self.raw_by_class
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectAnnotation {
    pub term: String,
    pub label: SentimentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub id: String,
    pub category: String,
    pub text: String,
    pub aspects: Vec<AspectAnnotation>,
}

impl Review {
    /// Whitespace-delimited word count of the review text.
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }
}

/// One (review, aspect) classification instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub review_id: String,
    pub review_text: String,
    pub aspect_term: String,
    pub label: SentimentLabel,
}

#[derive(Default)]
struct ReviewBuilder {
    id: Option<String>,
    category: String,
    text: Option<String>,
    aspects: Vec<AspectAnnotation>,
    offset: u64,
}

impl ReviewBuilder {
    fn finish(self) -> Result<Review, CorpusError> {
        let id = self.id.ok_or_else(|| CorpusError::Validation {
            review_id: String::new(),
            message: format!("review at byte {} has no id attribute", self.offset),
        })?;
        let text = self.text.unwrap_or_default();
        if text.trim().is_empty() {
            return Err(CorpusError::Validation {
                review_id: id,
                message: "review text is empty".into(),
            });
        }
        let mut terms = HashSet::new();
        for aspect in &self.aspects {
            if !terms.insert(aspect.term.as_str()) {
                return Err(CorpusError::Validation {
                    review_id: id.clone(),
                    message: format!("aspect {:?} annotated twice", aspect.term),
                });
            }
        }
        Ok(Review {
            id,
            category: self.category,
            text,
            aspects: self.aspects,
        })
    }
}

fn attr(start: &BytesStart<'_>, name: &str, offset: u64) -> Result<Option<String>, CorpusError> {
    match start.try_get_attribute(name) {
        Ok(Some(a)) => a
            .unescape_value()
            .map(|v| Some(v.into_owned()))
            .map_err(|e| CorpusError::Xml {
                offset,
                message: e.to_string(),
            }),
        Ok(None) => Ok(None),
        Err(e) => Err(CorpusError::Xml {
            offset,
            message: e.to_string(),
        }),
    }
}

fn parse_aspect(start: &BytesStart<'_>, review_id: &str, offset: u64) -> Result<AspectAnnotation, CorpusError> {
    let invalid = |message: String| CorpusError::Validation {
        review_id: review_id.to_string(),
        message,
    };
    let term = attr(start, "term", offset)?
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .ok_or_else(|| invalid("aspect without a term".into()))?;
    let polarity =
        attr(start, "polarity", offset)?.ok_or_else(|| invalid(format!("aspect {term:?} has no polarity")))?;
    let raw: i64 = polarity
        .trim()
        .parse()
        .map_err(|_| invalid(format!("aspect {term:?} has non-integer polarity {polarity:?}")))?;
    let label =
        SentimentLabel::new(raw).map_err(|_| invalid(format!("aspect {term:?} has polarity {raw} outside -3..=3")))?;
    Ok(AspectAnnotation { term, label })
}

/// Parses a dataset document into reviews in document order.
pub fn parse_dataset(xml: &[u8]) -> Result<Vec<Review>, CorpusError> {
    let source = std::str::from_utf8(xml).map_err(|e| CorpusError::Xml {
        offset: e.valid_up_to() as u64,
        message: "input is not valid UTF-8".into(),
    })?;
    let mut reader = Reader::from_str(source);
    reader.config_mut().check_end_names = true;

    let mut reviews = Vec::new();
    let mut current: Option<ReviewBuilder> = None;
    let mut in_text = false;
    let mut depth = 0usize;

    loop {
        let offset = reader.buffer_position();
        let event = reader.read_event().map_err(|e| CorpusError::Xml {
            offset: reader.error_position(),
            message: e.to_string(),
        })?;
        match event {
            Event::Start(start) => {
                depth += 1;
                match start.local_name().as_ref() {
                    b"review" => {
                        current = Some(ReviewBuilder {
                            id: attr(&start, "id", offset)?,
                            category: attr(&start, "category", offset)?.unwrap_or_default(),
                            offset,
                            ..Default::default()
                        })
                    }
                    b"text" if current.is_some() => {
                        in_text = true;
                        if let Some(r) = current.as_mut() {
                            r.text.get_or_insert_with(String::new);
                        }
                    }
                    b"aspect" => {
                        if let Some(r) = current.as_mut() {
                            let id = r.id.clone().unwrap_or_default();
                            r.aspects.push(parse_aspect(&start, &id, offset)?);
                        }
                    }
                    _ => {}
                }
            }
            Event::Empty(start) => match start.local_name().as_ref() {
                b"aspect" => {
                    if let Some(r) = current.as_mut() {
                        let id = r.id.clone().unwrap_or_default();
                        r.aspects.push(parse_aspect(&start, &id, offset)?);
                    }
                }
                b"review" => {
                    let builder = ReviewBuilder {
                        id: attr(&start, "id", offset)?,
                        offset,
                        ..Default::default()
                    };
                    reviews.push(builder.finish()?);
                }
                _ => {}
            },
            Event::End(end) => {
                depth = depth.saturating_sub(1);
                match end.local_name().as_ref() {
                    b"review" => {
                        if let Some(builder) = current.take() {
                            reviews.push(builder.finish()?);
                        }
                    }
                    b"text" => in_text = false,
                    _ => {}
                }
            }
            Event::Text(text) if in_text => {
                let chunk = text.decode().map_err(|e| CorpusError::Xml {
                    offset,
                    message: e.to_string(),
                })?;
                if let Some(r) = current.as_mut() {
                    r.text.get_or_insert_with(String::new).push_str(&chunk);
                }
            }
            Event::CData(data) if in_text => {
                let chunk = data.decode().map_err(|e| CorpusError::Xml {
                    offset,
                    message: e.to_string(),
                })?;
                if let Some(r) = current.as_mut() {
                    r.text.get_or_insert_with(String::new).push_str(&chunk);
                }
            }
            Event::GeneralRef(reference) => {
                let resolved = match reference.resolve_char_ref() {
                    Ok(Some(c)) => c.to_string(),
                    Ok(None) => {
                        let name = reference.decode().map_err(|e| CorpusError::Xml {
                            offset,
                            message: e.to_string(),
                        })?;
                        resolve_predefined_entity(&name)
                            .ok_or_else(|| CorpusError::Xml {
                                offset,
                                message: format!("unknown entity &{name};"),
                            })?
                            .to_string()
                    }
                    Err(e) => {
                        return Err(CorpusError::Xml {
                            offset,
                            message: e.to_string(),
                        })
                    }
                };
                if in_text {
                    if let Some(r) = current.as_mut() {
                        r.text.get_or_insert_with(String::new).push_str(&resolved);
                    }
                }
            }
            Event::Eof => {
                if depth != 0 {
                    return Err(CorpusError::Xml {
                        offset: reader.buffer_position(),
                        message: "unexpected end of input inside an element".into(),
                    });
                }
                break;
            }
            _ => {}
        }
    }
    Ok(reviews)
}

/// Serializes reviews into the dataset schema accepted by [`parse_dataset`].
pub fn write_dataset(reviews: &[Review]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dataset>\n");
    for review in reviews {
        out.push_str(&format!(
            "  <review id=\"{}\" category=\"{}\">\n    <text>{}</text>\n    <aspects>\n",
            escape(review.id.as_str()),
            escape(review.category.as_str()),
            escape(review.text.as_str())
        ));
        for aspect in &review.aspects {
            out.push_str(&format!(
                "      <aspect term=\"{}\" polarity=\"{}\"/>\n",
                escape(aspect.term.as_str()),
                aspect.label
            ));
        }
        out.push_str("    </aspects>\n  </review>\n");
    }
    out.push_str("</dataset>\n");
    out
}

/// One example per (review, aspect) pair, in document order.
///
/// Labels are already range-checked by [`SentimentLabel`]; the map is taken so
/// callers fail here rather than later if the map is not a bijection.
pub fn flatten_examples(reviews: &[Review], label_map: &LabelMap) -> Result<Vec<Example>, CorpusError> {
    LabelMap::from_order(label_map.order())?;
    Ok(reviews
        .iter()
        .flat_map(|review| {
            review.aspects.iter().map(move |aspect| Example {
                review_id: review.id.clone(),
                review_text: review.text.clone(),
                aspect_term: aspect.term.clone(),
                label: aspect.label,
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LengthPolicy {
    /// Keep reviews with at most this many words.
    AbsoluteCap(usize),
    /// Keep reviews at or below the nearest-rank percentile of word counts.
    Percentile(f64),
}

impl Default for LengthPolicy {
    fn default() -> Self {
        LengthPolicy::Percentile(95.0)
    }
}

impl fmt::Display for LengthPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthPolicy::AbsoluteCap(n) => write!(f, "cap:{n}"),
            LengthPolicy::Percentile(p) => write!(f, "p{p}"),
        }
    }
}

impl std::str::FromStr for LengthPolicy {
    type Err = String;

    /// Accepts `cap:<words>` or `p<percentile>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(n) = s.strip_prefix("cap:") {
            n.parse()
                .map(LengthPolicy::AbsoluteCap)
                .map_err(|_| format!("bad word cap {n:?}"))
        } else if let Some(p) = s.strip_prefix('p') {
            let p: f64 = p.parse().map_err(|_| format!("bad percentile {p:?}"))?;
            if p > 0.0 && p < 100.0 {
                Ok(LengthPolicy::Percentile(p))
            } else {
                Err(format!("percentile {p} must lie in (0, 100)"))
            }
        } else {
            Err(format!("length policy {s:?} must be cap:<n> or p<percentile>"))
        }
    }
}

impl LengthPolicy {
    /// Maximum admissible word count for a collection with these counts.
    fn word_cap(&self, counts: &[usize]) -> usize {
        match *self {
            LengthPolicy::AbsoluteCap(n) => n,
            LengthPolicy::Percentile(p) => {
                if counts.is_empty() {
                    return usize::MAX;
                }
                let mut sorted = counts.to_vec();
                sorted.sort_unstable();
                let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
                sorted[rank.clamp(1, sorted.len()) - 1]
            }
        }
    }
}

/// Drops reviews whose word count exceeds the policy's cap.
pub fn filter_long_reviews(reviews: Vec<Review>, policy: LengthPolicy) -> (Vec<Review>, usize) {
    let counts: Vec<usize> = reviews.iter().map(Review::word_count).collect();
    let cap = policy.word_cap(&counts);
    let before = reviews.len();
    let kept: Vec<Review> = reviews
        .into_iter()
        .zip(counts)
        .filter(|(_, count)| *count <= cap)
        .map(|(review, _)| review)
        .collect();
    let removed = before - kept.len();
    (kept, removed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub group_by_review: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 42,
            group_by_review: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Train,
    Test,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Train => "train",
            Side::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Example>,
    pub test: Vec<Example>,
    /// Side of every review id, in first-seen order.
    pub manifest: Vec<(String, Side)>,
}

/// Seeded train/test partition.
///
/// Units (review groups, or single examples when grouping is off) are shuffled
/// and the first `floor(train_fraction · units)` go to train, clamped so both
/// sides receive at least one unit. Each side keeps document order.
pub fn split(examples: &[Example], config: &SplitConfig) -> Result<Split, CorpusError> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(CorpusError::Split(format!(
            "train fraction {} must lie in (0, 1)",
            config.train_fraction
        )));
    }

    // unit index of each example
    let mut unit_of = Vec::with_capacity(examples.len());
    let mut units = 0usize;
    if config.group_by_review {
        let mut group_index: HashMap<&str, usize> = HashMap::new();
        for example in examples {
            let next = group_index.len();
            let id = *group_index.entry(example.review_id.as_str()).or_insert(next);
            unit_of.push(id);
        }
        units = group_index.len();
        if units < 2 {
            return Err(CorpusError::Split(format!(
                "grouped split needs at least 2 reviews, found {units}"
            )));
        }
    } else {
        for i in 0..examples.len() {
            unit_of.push(i);
            units += 1;
        }
        if units < 2 {
            return Err(CorpusError::Split(format!(
                "split needs at least 2 examples, found {units}"
            )));
        }
    }

    let mut order: Vec<usize> = (0..units).collect();
    order.shuffle(&mut seeded_rng(config.seed));
    let n_train = ((config.train_fraction * units as f64).floor() as usize).clamp(1, units - 1);
    let mut is_train = vec![false; units];
    for &unit in &order[..n_train] {
        is_train[unit] = true;
    }

    let mut out = Split {
        train: Vec::new(),
        test: Vec::new(),
        manifest: Vec::new(),
    };
    let mut listed = HashSet::new();
    for (example, &unit) in examples.iter().zip(&unit_of) {
        let side = if is_train[unit] { Side::Train } else { Side::Test };
        match side {
            Side::Train => out.train.push(example.clone()),
            Side::Test => out.test.push(example.clone()),
        }
        if listed.insert(example.review_id.as_str()) {
            out.manifest.push((example.review_id.clone(), side));
        }
    }
    Ok(out)
}

/// `review_id<TAB>train|test` lines.
///
/// Without grouping one review can land on both sides; it is then listed with
/// the side of its first example.
pub fn write_split_manifest(split: &Split) -> String {
    split
        .manifest
        .iter()
        .map(|(id, side)| format!("{id}\t{}\n", side.as_str()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub counts: [u64; NUM_CLASSES],
    pub fractions: [f64; NUM_CLASSES],
}

impl LabelDistribution {
    pub fn from_counts(counts: [u64; NUM_CLASSES]) -> Self {
        let total: u64 = counts.iter().sum();
        let mut fractions = [0.0; NUM_CLASSES];
        if total > 0 {
            for (f, &c) in fractions.iter_mut().zip(&counts) {
                *f = c as f64 / total as f64;
            }
        }
        Self { counts, fractions }
    }

    pub fn from_examples(examples: &[Example], label_map: &LabelMap) -> Self {
        let mut counts = [0u64; NUM_CLASSES];
        for example in examples {
            counts[label_map.class_of(example.label)] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Inverse-frequency weights `N / (K · count_k)`, whose support-weighted sum is `N`.
pub fn compute_class_weights(dist: &LabelDistribution) -> Result<[f64; NUM_CLASSES], CorpusError> {
    if let Some(class) = dist.counts.iter().position(|&c| c == 0) {
        return Err(CorpusError::ZeroCountClass { class });
    }
    let total = dist.total() as f64;
    let mut weights = [0.0; NUM_CLASSES];
    for (w, &c) in weights.iter_mut().zip(&dist.counts) {
        *w = total / (NUM_CLASSES as f64 * c as f64);
    }
    Ok(weights)
}

/// Review counts per category, sorted by category name.
pub fn category_counts(reviews: &[Review]) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for review in reviews {
        *counts.entry(review.category.as_str()).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> = counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(id: &str, words: usize, labels: &[i64]) -> Review {
        Review {
            id: id.into(),
            category: "dairy".into(),
            text: vec!["w"; words].join(" "),
            aspects: labels
                .iter()
                .enumerate()
                .map(|(i, &l)| AspectAnnotation {
                    term: format!("t{i}"),
                    label: SentimentLabel::new(l).unwrap(),
                })
                .collect(),
        }
    }

    #[test]
    fn empty_dataset() {
        assert!(parse_dataset(b"<dataset/>").unwrap().is_empty());
        assert!(parse_dataset(b"<dataset></dataset>").unwrap().is_empty());
    }

    #[test]
    fn parses_two_aspects_and_ignores_extras() {
        let xml = r#"<?xml version="1.0"?>
<dataset source="x">
  <review id="r1" category="meat" stars="4">
    <text>خوب &amp; تازه</text>
    <note>ignored</note>
    <aspects>
      <aspect term="T1" polarity="-3" from="0"/>
      <aspect term="T2" polarity="1"></aspect>
    </aspects>
  </review>
</dataset>"#;
        let reviews = parse_dataset(xml.as_bytes()).unwrap();
        assert_eq!(reviews.len(), 1);
        let r = &reviews[0];
        assert_eq!(r.id, "r1");
        assert_eq!(r.category, "meat");
        assert_eq!(r.text, "خوب & تازه");
        let got: Vec<(&str, i8)> = r.aspects.iter().map(|a| (a.term.as_str(), a.label.raw())).collect();
        assert_eq!(got, vec![("T1", -3), ("T2", 1)]);
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let err = parse_dataset(b"<dataset><review id=\"a\"><text>x</txt></review></dataset>").unwrap_err();
        match err {
            CorpusError::Xml { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_dataset(b"<dataset><review id=\"a\">").unwrap_err(),
            CorpusError::Xml { .. }
        ));
    }

    #[test]
    fn out_of_range_polarity_names_review() {
        let xml = r#"<dataset><review id="r9"><text>x</text><aspects><aspect term="a" polarity="4"/></aspects></review></dataset>"#;
        match parse_dataset(xml.as_bytes()).unwrap_err() {
            CorpusError::Validation { review_id, .. } => assert_eq!(review_id, "r9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_aspect_and_empty_text_rejected() {
        let dup = r#"<dataset><review id="r"><text>x</text><aspects><aspect term="a" polarity="1"/><aspect term="a" polarity="2"/></aspects></review></dataset>"#;
        assert!(matches!(
            parse_dataset(dup.as_bytes()),
            Err(CorpusError::Validation { .. })
        ));
        let empty = r#"<dataset><review id="r"><text>  </text></review></dataset>"#;
        assert!(matches!(
            parse_dataset(empty.as_bytes()),
            Err(CorpusError::Validation { .. })
        ));
    }

    #[test]
    fn serialize_round_trip_with_markup_characters() {
        let mut r = review("a<b", 3, &[-3, 1]);
        r.text = "x < y & \"z\" ' >".into();
        r.aspects[0].term = "t&1".into();
        let reviews = vec![r, review("b", 1, &[])];
        let back = parse_dataset(write_dataset(&reviews).as_bytes()).unwrap();
        assert_eq!(back, reviews);
    }

    #[test]
    fn flatten_counts() {
        let map = LabelMap::default();
        assert!(flatten_examples(&[], &map).unwrap().is_empty());
        let examples = flatten_examples(&[review("a", 2, &[-3, 1]), review("b", 2, &[0])], &map).unwrap();
        assert_eq!(examples.len(), 3);
        assert_eq!(examples[0].review_id, "a");
        assert_eq!(examples[2].review_id, "b");
    }

    #[test]
    fn label_map_is_bijection() {
        let map = LabelMap::default();
        for class in 0..NUM_CLASSES {
            assert_eq!(map.class_of(map.label_of(class).unwrap()), class);
        }
        assert!(LabelMap::from_order([-3, -3, -1, 0, 1, 2, 3]).is_err());
        assert!(LabelMap::from_order([-4, -2, -1, 0, 1, 2, 3]).is_err());
        assert!(SentimentLabel::new(-4).is_err());
    }

    #[test]
    fn length_filter_cap_and_percentile() {
        let reviews: Vec<Review> = (1..=100).map(|n| review(&n.to_string(), n, &[1])).collect();
        let (kept, removed) = filter_long_reviews(reviews.clone(), LengthPolicy::AbsoluteCap(1000));
        assert_eq!((kept.len(), removed), (100, 0));
        let (kept, removed) = filter_long_reviews(reviews, LengthPolicy::Percentile(95.0));
        assert_eq!(removed, 5);
        assert!(kept.iter().all(|r| r.word_count() <= 95));

        let long = vec![review("long", 10_000, &[1]), review("short", 4, &[1])];
        let (kept, removed) = filter_long_reviews(long, LengthPolicy::AbsoluteCap(256));
        assert_eq!(removed, 1);
        assert_eq!(kept[0].id, "short");

        let (kept, removed) = filter_long_reviews(vec![], LengthPolicy::Percentile(95.0));
        assert!(kept.is_empty());
        assert_eq!(removed, 0);
    }

    #[test]
    fn length_policy_parsing() {
        assert_eq!(
            "cap:256".parse::<LengthPolicy>().unwrap(),
            LengthPolicy::AbsoluteCap(256)
        );
        assert_eq!("p95".parse::<LengthPolicy>().unwrap(), LengthPolicy::Percentile(95.0));
        assert!("p100".parse::<LengthPolicy>().is_err());
        assert!("95".parse::<LengthPolicy>().is_err());
    }

    fn examples_from(ids: &[&str]) -> Vec<Example> {
        ids.iter()
            .map(|id| Example {
                review_id: id.to_string(),
                review_text: "x".into(),
                aspect_term: "a".into(),
                label: SentimentLabel::new(1).unwrap(),
            })
            .collect()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ids: Vec<String> = (0..100).map(|i| format!("r{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let examples = examples_from(&refs);
        let config = SplitConfig::default();
        let a = split(&examples, &config).unwrap();
        let b = split(&examples, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.train.len(), a.test.len()), (80, 20));
        assert_eq!(a.manifest.len(), 100);
    }

    #[test]
    fn split_keeps_review_groups_together() {
        let examples = examples_from(&["x", "x", "x", "y", "z"]);
        for seed in 0..20 {
            let s = split(
                &examples,
                &SplitConfig {
                    seed,
                    ..Default::default()
                },
            )
            .unwrap();
            let train_x = s.train.iter().filter(|e| e.review_id == "x").count();
            assert!(train_x == 0 || train_x == 3);
        }
        let single = examples_from(&["x", "x"]);
        assert!(split(&single, &SplitConfig::default()).is_err());
        let bad = SplitConfig {
            train_fraction: 1.0,
            ..Default::default()
        };
        assert!(split(&examples, &bad).is_err());
    }

    #[test]
    fn manifest_format() {
        let s = split(&examples_from(&["a", "b"]), &SplitConfig::default()).unwrap();
        let text = write_split_manifest(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.ends_with("\ttrain") || l.ends_with("\ttest")));
    }

    #[test]
    fn class_weights() {
        let uniform = LabelDistribution::from_counts([5; NUM_CLASSES]);
        assert_eq!(compute_class_weights(&uniform).unwrap(), [1.0; NUM_CLASSES]);

        let table = LabelDistribution::from_counts([943, 91, 88, 8, 111, 76, 27]);
        let w = compute_class_weights(&table).unwrap();
        assert!((w[0] - 1344.0 / (7.0 * 943.0)).abs() < 1e-15);
        assert!((w[0] - 0.2036).abs() < 5e-5);
        let weighted_total: f64 = w.iter().zip(&table.counts).map(|(w, &c)| w * c as f64).sum();
        assert!((weighted_total - 1344.0).abs() < 1e-6);

        let zero = LabelDistribution::from_counts([1, 2, 0, 4, 5, 6, 7]);
        assert_eq!(
            compute_class_weights(&zero),
            Err(CorpusError::ZeroCountClass { class: 2 })
        );
    }

    #[test]
    fn distribution_fractions() {
        let d = LabelDistribution::from_counts([695, 80, 68, 66, 60, 3, 28]);
        assert_eq!(d.total(), 1000);
        assert!((d.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(d.fractions[0], 0.695);
        let empty = LabelDistribution::from_counts([0; NUM_CLASSES]);
        assert_eq!(empty.fractions, [0.0; NUM_CLASSES]);
    }
}
