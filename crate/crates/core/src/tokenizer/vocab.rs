use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use super::{pre_tokenize, TokenId, TokenizerError, CONTINUATION_PREFIX};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const MASK: &str = "[MASK]";
pub const SEP: &str = "[SEP]";

pub const PAD_ID: TokenId = 0;
pub const UNK_ID: TokenId = 1;
pub const CLS_ID: TokenId = 2;
pub const MASK_ID: TokenId = 3;
pub const SEP_ID: TokenId = 4;

/// Reserved tokens in id order.
pub const RESERVED: [&str; 5] = [PAD, UNK, CLS, MASK, SEP];

pub const MAX_VOCAB_SIZE: usize = 100_000;

/// Ordered token list; a token's id is its position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Validates reserved slots, uniqueness and size. Errors report 1-based positions.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, TokenizerError> {
        if tokens.len() > MAX_VOCAB_SIZE {
            return Err(TokenizerError::VocabTooLarge(tokens.len()));
        }
        for (i, expected) in RESERVED.iter().enumerate() {
            match tokens.get(i) {
                Some(found) if found == expected => {}
                found => {
                    return Err(TokenizerError::ReservedToken {
                        line: i + 1,
                        expected: expected.to_string(),
                        found: found.cloned(),
                    })
                }
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(TokenizerError::EmptyToken { line: i + 1 });
            }
            if let Some(&first) = index.get(token) {
                return Err(TokenizerError::DuplicateToken {
                    token: token.clone(),
                    first_line: first as usize + 1,
                    second_line: i + 1,
                });
            }
            index.insert(token.clone(), i as TokenId);
        }
        Ok(Self { tokens, index })
    }

    /// Vocabulary holding only the reserved tokens.
    pub fn reserved_only() -> Self {
        Self::from_tokens(RESERVED.iter().map(|s| s.to_string()).collect()).expect("reserved tokens are valid")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn is_special(id: TokenId) -> bool {
        (id as usize) < RESERVED.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// One token per line, the format read by [`load_vocab`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for token in &self.tokens {
            out.push_str(token);
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the serialized vocabulary, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

/// Reads a vocabulary file: one token per line, the five reserved tokens first.
pub fn load_vocab(bytes: &[u8]) -> Result<Vocabulary, TokenizerError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TokenizerError::Encoding(e.valid_up_to()))?;
    let tokens = text
        .lines()
        .map(|line| line.strip_suffix('\r').unwrap_or(line).to_string())
        .collect();
    Vocabulary::from_tokens(tokens)
}

fn continuation(c: char) -> String {
    format!("{CONTINUATION_PREFIX}{c}")
}

/// Trains a WordPiece-style vocabulary on a corpus.
///
/// Layout: reserved tokens, every corpus character, every character's
/// continuation form, then merged pieces. Each round merges the adjacent pair
/// with the highest frequency, ties going to the lexicographically smallest
/// pair, until `target_size` tokens exist or no pair remains.
pub fn build_vocab<S: AsRef<str>>(corpus: &[S], target_size: usize) -> Result<Vocabulary, TokenizerError> {
    let mut word_counts: HashMap<&str, u64> = HashMap::new();
    for text in corpus {
        for word in pre_tokenize(text.as_ref()) {
            *word_counts.entry(word).or_default() += 1;
        }
    }
    let alphabet: BTreeSet<char> = word_counts.keys().flat_map(|w| w.chars()).collect();
    let minimum = RESERVED.len() + alphabet.len();
    if target_size < minimum {
        return Err(TokenizerError::TargetTooSmall {
            target: target_size,
            minimum,
        });
    }
    if target_size > MAX_VOCAB_SIZE {
        return Err(TokenizerError::VocabTooLarge(target_size));
    }

    let mut tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut push = |tokens: &mut Vec<String>, token: String| -> u32 {
        if let Some(&id) = index.get(&token) {
            return id;
        }
        let id = tokens.len() as u32;
        index.insert(token.clone(), id);
        tokens.push(token);
        id
    };
    for &c in &alphabet {
        push(&mut tokens, c.to_string());
    }
    for &c in &alphabet {
        if tokens.len() >= target_size {
            break;
        }
        push(&mut tokens, continuation(c));
    }

    // Sorted words make every pass deterministic regardless of hash order.
    let mut words: Vec<(&str, u64)> = word_counts.into_iter().collect();
    words.sort_unstable();
    // Piece ids here index `pieces`, which also holds continuation forms that
    // did not fit in the vocabulary.
    let mut pieces: Vec<String> = tokens.clone();
    let mut piece_index: HashMap<String, u32> = pieces.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    let mut intern = |pieces: &mut Vec<String>, piece: String| -> u32 {
        if let Some(&id) = piece_index.get(&piece) {
            return id;
        }
        let id = pieces.len() as u32;
        piece_index.insert(piece.clone(), id);
        pieces.push(piece);
        id
    };
    let mut segmented: Vec<(Vec<u32>, u64)> = words
        .iter()
        .map(|(word, count)| {
            let ids = word
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    let piece = if i == 0 { c.to_string() } else { continuation(c) };
                    intern(&mut pieces, piece)
                })
                .collect();
            (ids, *count)
        })
        .collect();

    while tokens.len() < target_size {
        let mut pair_counts: HashMap<(u32, u32), u64> = HashMap::new();
        for (ids, count) in &segmented {
            for w in ids.windows(2) {
                *pair_counts.entry((w[0], w[1])).or_default() += count;
            }
        }
        let Some(best) = pair_counts
            .iter()
            .max_by(|(a, ca), (b, cb)| {
                ca.cmp(cb).then_with(|| {
                    let ka = (&pieces[a.0 as usize], &pieces[a.1 as usize]);
                    let kb = (&pieces[b.0 as usize], &pieces[b.1 as usize]);
                    kb.cmp(&ka)
                })
            })
            .map(|(pair, _)| *pair)
        else {
            break;
        };
        let right = &pieces[best.1 as usize];
        let merged = format!(
            "{}{}",
            pieces[best.0 as usize],
            right.strip_prefix(CONTINUATION_PREFIX).unwrap_or(right)
        );
        push(&mut tokens, merged.clone());
        let merged_id = intern(&mut pieces, merged);
        for (ids, _) in segmented.iter_mut() {
            if ids.len() < 2 {
                continue;
            }
            let mut out = Vec::with_capacity(ids.len());
            let mut i = 0;
            while i < ids.len() {
                if i + 1 < ids.len() && ids[i] == best.0 && ids[i + 1] == best.1 {
                    out.push(merged_id);
                    i += 2;
                } else {
                    out.push(ids[i]);
                    i += 1;
                }
            }
            *ids = out;
        }
    }
    Vocabulary::from_tokens(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(tokens: &[&str]) -> String {
        tokens.iter().map(|t| format!("{t}\n")).collect()
    }

    #[test]
    fn reserved_only_file() {
        let v = load_vocab(lines(&RESERVED).as_bytes()).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.id(SEP), Some(SEP_ID));
        assert_eq!(v, Vocabulary::reserved_only());
    }

    #[test]
    fn duplicate_names_both_lines() {
        let mut t = RESERVED.to_vec();
        t.extend(["a", "b", "a"]);
        assert_eq!(
            load_vocab(lines(&t).as_bytes()),
            Err(TokenizerError::DuplicateToken {
                token: "a".into(),
                first_line: 6,
                second_line: 8
            })
        );
    }

    #[test]
    fn reserved_order_enforced() {
        let t = [PAD, CLS, UNK, MASK, SEP];
        assert!(matches!(
            load_vocab(lines(&t).as_bytes()),
            Err(TokenizerError::ReservedToken { line: 2, .. })
        ));
        assert!(matches!(
            load_vocab(b"[PAD]\n"),
            Err(TokenizerError::ReservedToken { line: 2, .. })
        ));
    }

    #[test]
    fn line_index_is_id() {
        let mut t: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        t.extend((0..100).map(|i| format!("tok{i}")));
        assert_eq!(t.len(), 105);
        let v = load_vocab(t.join("\n").as_bytes()).unwrap();
        assert_eq!(v.id(&t[99]), Some(99));
        assert_eq!(v.token(99), Some(t[99].as_str()));
    }

    #[test]
    fn build_single_word_corpus() {
        let v = build_vocab(&["aa"], 9).unwrap();
        // reserved, a, ##a, then the only merge a + ##a
        let expected: Vec<&str> = RESERVED.iter().copied().chain(["a", "##a", "aa"]).collect();
        assert_eq!(v.tokens(), expected);
    }

    #[test]
    fn build_empty_and_deterministic() {
        let empty: [&str; 0] = [];
        assert_eq!(build_vocab(&empty, 50).unwrap(), Vocabulary::reserved_only());
        let corpus = ["the cat sat", "the hat", "a cat, a hat!"];
        assert_eq!(build_vocab(&corpus, 40).unwrap(), build_vocab(&corpus, 40).unwrap());
        let v = build_vocab(&corpus, 40).unwrap();
        assert!(v.len() <= 40);
        assert!(v.contains(",") && v.contains("!"));
    }

    #[test]
    fn build_target_too_small() {
        assert!(matches!(
            build_vocab(&["abc"], 7),
            Err(TokenizerError::TargetTooSmall { minimum: 8, .. })
        ));
    }

    #[test]
    fn tie_break_prefers_smallest_pair() {
        // "ab" and "cd" both occur once; (a, ##b) sorts first
        let v = build_vocab(&["cd ab"], 14).unwrap();
        assert_eq!(v.tokens()[13], "ab");
    }
}
