//! Synonym lexicon and aspect enrichment.
//!
//! An enriched aspect is rendered the way Persian lists are written: the
//! headword first, items separated by `"، "`, and `" و "` before the last one,
//! e.g. `طعم، چاشنی، مزه، چشایی، ذائقه و مذاق`.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default whitespace-token budget for an auxiliary sentence.
pub const DEFAULT_MAX_TOKENS: usize = 32;

/// Separator between list items (Arabic comma plus space).
pub const ITEM_SEPARATOR: &str = "، ";
/// Conjunction placed before the final item.
pub const FINAL_CONJUNCTION: &str = " و ";

/// Longest headword accepted, in words.
const MAX_HEADWORD_WORDS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum LexiconError {
    #[error("lexicon is not valid UTF-8 (byte {0})")]
    Encoding(usize),
    #[error("line {line}: expected `headword<TAB>syn1|syn2|…`")]
    MissingTab { line: usize },
    #[error("line {line}: empty headword")]
    EmptyHeadword { line: usize },
    #[error("line {line}: headword {headword:?} has more than {MAX_HEADWORD_WORDS} words")]
    HeadwordTooLong { line: usize, headword: String },
    #[error("aspect is empty")]
    EmptyAspect,
    #[error("token budget {max_tokens} is smaller than the aspect's {needed} tokens")]
    BudgetTooSmall { max_tokens: usize, needed: usize },
}

/// Trims and collapses internal whitespace runs to a single space.
pub fn normalize(phrase: &str) -> String {
    phrase.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Headword → ordered synonyms. Immutable once loaded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: Vec<(String, Vec<String>)>,
    index: HashMap<String, usize>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds synonyms for a headword, merging with any existing entry.
    ///
    /// Synonyms are normalized; empties, repeats and the headword itself are dropped.
    pub fn insert<I, S>(&mut self, headword: &str, synonyms: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let headword = normalize(headword);
        let slot = match self.index.get(&headword) {
            Some(&i) => i,
            None => {
                self.entries.push((headword.clone(), Vec::new()));
                self.index.insert(headword.clone(), self.entries.len() - 1);
                self.entries.len() - 1
            }
        };
        let entry = &mut self.entries[slot].1;
        let mut seen: HashSet<String> = entry.iter().cloned().collect();
        for synonym in synonyms {
            let synonym = normalize(synonym.as_ref());
            if synonym.is_empty() || synonym == headword || seen.contains(&synonym) {
                continue;
            }
            seen.insert(synonym.clone());
            entry.push(synonym);
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact match on the normalized phrase.
    pub fn lookup(&self, phrase: &str) -> Option<&[String]> {
        self.index
            .get(&normalize(phrase))
            .map(|&i| self.entries[i].1.as_slice())
    }

    /// Entries in first-seen order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(h, s)| (h.as_str(), s.as_slice()))
    }

    /// Serializes to the TSV format read by [`load_lexicon`].
    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|(h, s)| format!("{h}\t{}\n", s.join("|")))
            .collect()
    }
}

/// Reads `headword<TAB>syn1|syn2|…` lines. Blank lines and `#` comments are skipped;
/// repeated headwords are merged in first-seen order.
pub fn load_lexicon(bytes: &[u8]) -> Result<Lexicon, LexiconError> {
    let text = std::str::from_utf8(bytes).map_err(|e| LexiconError::Encoding(e.valid_up_to()))?;
    let mut lexicon = Lexicon::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (head, rest) = raw.split_once('\t').ok_or(LexiconError::MissingTab { line })?;
        let headword = normalize(head);
        if headword.is_empty() {
            return Err(LexiconError::EmptyHeadword { line });
        }
        if headword.split(' ').count() > MAX_HEADWORD_WORDS {
            return Err(LexiconError::HeadwordTooLong { line, headword });
        }
        lexicon.insert(&headword, rest.split('|'));
    }
    Ok(lexicon)
}

/// The auxiliary sentence built for one aspect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichedAspect {
    pub headword: String,
    pub synonyms_used: Vec<String>,
    pub rendered: String,
}

fn render(headword: &str, synonyms: &[String]) -> String {
    match synonyms.split_last() {
        None => headword.to_string(),
        Some((last, init)) => {
            let mut out = headword.to_string();
            for s in init {
                out.push_str(ITEM_SEPARATOR);
                out.push_str(s);
            }
            out.push_str(FINAL_CONJUNCTION);
            out.push_str(last);
            out
        }
    }
}

fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Renders an aspect with as many of its synonyms as fit in `max_tokens`
/// whitespace tokens. Aspects missing from the lexicon pass through unchanged.
pub fn enrich_aspect(lexicon: &Lexicon, aspect: &str, max_tokens: usize) -> Result<EnrichedAspect, LexiconError> {
    let headword = normalize(aspect);
    if headword.is_empty() {
        return Err(LexiconError::EmptyAspect);
    }
    let needed = token_count(&headword);
    if max_tokens < needed {
        return Err(LexiconError::BudgetTooSmall { max_tokens, needed });
    }
    let Some(synonyms) = lexicon.lookup(&headword) else {
        return Ok(EnrichedAspect {
            headword: aspect.to_string(),
            synonyms_used: Vec::new(),
            rendered: aspect.to_string(),
        });
    };
    // token count grows with every added synonym, so the first overflow ends the search
    let mut used = 0;
    for k in 1..=synonyms.len() {
        if token_count(&render(&headword, &synonyms[..k])) > max_tokens {
            break;
        }
        used = k;
    }
    let synonyms_used = synonyms[..used].to_vec();
    Ok(EnrichedAspect {
        rendered: render(&headword, &synonyms_used),
        headword,
        synonyms_used,
    })
}
