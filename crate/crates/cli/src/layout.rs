//! Run-root directory layout and the prepared-example TSV format.

use std::path::{Path, PathBuf};

use aspectforge_core::corpus::{Example, SentimentLabel};
use aspectforge_core::lexicon::EnrichedAspect;
use aspectforge_core::pipeline::PreparedExample;

use crate::error::{validation, CliError, Result};

pub const PREPARED_HEADER: &str = "review_id\tlabel\taspect\theadword\tsynonyms\tauxiliary\treview_text";

/// Paths under one run root.
#[derive(Debug, Clone)]
pub struct RunLayout {
    pub root: PathBuf,
}

impl RunLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn prepared(&self, name: &str) -> PathBuf {
        self.root.join("prepared").join(name)
    }

    pub fn checkpoint(&self, name: &str) -> PathBuf {
        self.root.join("checkpoints").join(name)
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(name)
    }

    pub fn snapshot(&self) -> PathBuf {
        self.root.join(crate::config::SNAPSHOT_NAME)
    }
}

fn escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    for c in field.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(field: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

pub fn write_prepared(examples: &[PreparedExample]) -> String {
    let mut out = String::from(PREPARED_HEADER);
    out.push('\n');
    for p in examples {
        let synonyms = p.auxiliary.synonyms_used.join("|");
        let fields = [
            p.example.review_id.as_str(),
            &p.example.label.raw().to_string(),
            &p.example.aspect_term,
            &p.auxiliary.headword,
            &synonyms,
            &p.auxiliary.rendered,
            &p.example.review_text,
        ];
        let line: Vec<String> = fields.iter().map(|f| escape(f)).collect();
        out.push_str(&line.join("\t"));
        out.push('\n');
    }
    out
}

pub fn read_prepared(path: &Path) -> Result<Vec<PreparedExample>> {
    let text = crate::error::read_text(path)?;
    let bad = |line: usize, msg: String| CliError::Validation(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == PREPARED_HEADER => {}
        _ => return Err(bad(1, "missing prepared-file header".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let fields: Vec<String> = line
            .split('\t')
            .map(unescape)
            .collect::<std::result::Result<_, _>>()
            .map_err(|m| bad(i + 1, m))?;
        let [review_id, label, aspect, headword, synonyms, rendered, review_text]: [String; 7] = fields
            .try_into()
            .map_err(|f: Vec<String>| bad(i + 1, format!("{} fields, expected 7", f.len())))?;
        let raw: i64 = label.parse().map_err(|_| bad(i + 1, format!("bad label {label:?}")))?;
        let label = SentimentLabel::new(raw).map_err(|e| bad(i + 1, e.to_string()))?;
        let synonyms_used = if synonyms.is_empty() {
            Vec::new()
        } else {
            synonyms.split('|').map(str::to_string).collect()
        };
        out.push(PreparedExample {
            example: Example {
                review_id,
                review_text,
                aspect_term: aspect,
                label,
            },
            auxiliary: EnrichedAspect {
                headword,
                synonyms_used,
                rendered,
            },
        });
    }
    if out.is_empty() {
        return Err(validation(format!("{} holds no examples", path.display())));
    }
    Ok(out)
}
