//! Deterministic subword tokenizer.
//!
//! A line is split into pieces: runs of alphanumerics/underscore, and single
//! punctuation characters. A piece preceded by whitespace carries a leading
//! `▁` marker. Each piece is then covered by greedy longest match against the
//! vocabulary; characters with no vocabulary entry fall back to byte tokens.
//!
//! Whitespace policy: `decode(tokenize(line))` equals the line with leading
//! and trailing whitespace removed and inner whitespace runs collapsed to a
//! single space (see [`normalize_whitespace`]).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const PAD: u32 = 0;
pub const BOS: u32 = 1;
pub const EOS: u32 = 2;
const BYTE_BASE: u32 = 3;
const SPECIALS: [&str; 3] = ["<pad>", "<bos>", "<eos>"];
const SPACE_MARK: char = '\u{2581}';

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabConfig {
    /// Upper bound on the vocabulary size, specials and byte tokens included.
    pub max_size: usize,
    /// Pieces seen fewer times than this are left to subwords and bytes.
    pub min_count: usize,
    /// Longest character n-gram admitted as a subword unit.
    pub max_ngram: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            max_size: 8192,
            min_count: 1,
            max_ngram: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    max_chars: usize,
}

impl Vocab {
    /// Vocabulary holding only the specials and byte tokens.
    pub fn bytes_only() -> Self {
        Self::from_units(std::iter::empty())
    }

    /// Rebuilds a vocabulary from its learned units, in id order.
    pub fn from_units<I: IntoIterator<Item = String>>(units: I) -> Self {
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend((0..=255u8).map(|b| format!("<0x{b:02X}>")));
        let mut index = HashMap::new();
        let mut max_chars = 1;
        for unit in units {
            if index.contains_key(&unit) || unit.is_empty() {
                continue;
            }
            max_chars = max_chars.max(unit.chars().count());
            index.insert(unit.clone(), tokens.len() as u32);
            tokens.push(unit);
        }
        Self {
            tokens,
            index,
            max_chars,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Learned units (everything after specials and byte tokens), in id order.
    pub fn units(&self) -> &[String] {
        &self.tokens[BYTE_BASE as usize + 256..]
    }

    pub fn id(&self, unit: &str) -> Option<u32> {
        self.index.get(unit).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn is_byte(&self, id: u32) -> bool {
        (BYTE_BASE..BYTE_BASE + 256).contains(&id)
    }

    /// Decodes ids back to text under the whitespace policy. Special tokens are dropped.
    pub fn decode(&self, ids: &[u32]) -> String {
        let mut bytes = Vec::new();
        for &id in ids {
            if id < BYTE_BASE {
                continue;
            }
            if self.is_byte(id) {
                bytes.push((id - BYTE_BASE) as u8);
            } else if let Some(unit) = self.token(id) {
                bytes.extend_from_slice(unit.as_bytes());
            }
        }
        String::from_utf8_lossy(&bytes)
            .replace(SPACE_MARK, " ")
            .to_string()
    }
}

/// The text a line decodes back to after tokenization.
pub fn normalize_whitespace(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn pieces(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    let mut spaced = false;
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            spaced = !out.is_empty();
            chars.next();
            continue;
        }
        let mut piece = String::new();
        if spaced {
            piece.push(SPACE_MARK);
        }
        spaced = false;
        if is_word_char(c) {
            while let Some(&c) = chars.peek() {
                if !is_word_char(c) {
                    break;
                }
                piece.push(c);
                chars.next();
            }
        } else {
            piece.push(c);
            chars.next();
        }
        out.push(piece);
    }
    out
}

/// Builds a subword vocabulary from a corpus of lines.
///
/// Units are admitted in three tiers, each ordered by descending frequency
/// with ties broken lexicographically: single characters, whole pieces (up to
/// three quarters of the remaining budget), then character n-grams of pieces
/// that did not make it in whole. Leftover budget goes to further pieces.
pub fn build_vocab<'a, I>(lines: I, config: &VocabConfig) -> Vocab
where
    I: IntoIterator<Item = &'a str>,
{
    let mut piece_counts: HashMap<String, usize> = HashMap::new();
    for line in lines {
        for p in pieces(line) {
            *piece_counts.entry(p).or_default() += 1;
        }
    }
    let ranked = |counts: HashMap<String, usize>| -> Vec<String> {
        let mut v: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= config.min_count)
            .collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.into_iter().map(|(s, _)| s).collect()
    };

    let mut char_counts: HashMap<String, usize> = HashMap::new();
    for (p, c) in &piece_counts {
        for ch in p.chars() {
            *char_counts.entry(ch.to_string()).or_default() += c;
        }
    }

    let fixed = BYTE_BASE as usize + 256;
    let mut budget = config.max_size.saturating_sub(fixed);
    let mut units: Vec<String> = Vec::new();
    let mut seen: std::collections::HashSet<String> = Default::default();
    let mut admit = |unit: String, units: &mut Vec<String>, budget: &mut usize| -> bool {
        if *budget == 0 {
            return false;
        }
        if seen.insert(unit.clone()) {
            units.push(unit);
            *budget -= 1;
        }
        true
    };

    for ch in ranked(char_counts) {
        if !admit(ch, &mut units, &mut budget) {
            break;
        }
    }
    let whole = ranked(piece_counts.clone());
    let whole_share = budget - budget / 4;
    let mut taken = 0;
    let mut rest_pieces = Vec::new();
    for p in whole {
        if taken < whole_share && admit(p.clone(), &mut units, &mut budget) {
            taken += 1;
        } else {
            rest_pieces.push(p);
        }
    }
    if budget > 0 && !rest_pieces.is_empty() {
        let mut gram_counts: HashMap<String, usize> = HashMap::new();
        for p in &rest_pieces {
            let count = piece_counts[p];
            let chars: Vec<char> = p.chars().collect();
            for n in 2..=config.max_ngram.min(chars.len()) {
                for w in chars.windows(n) {
                    *gram_counts.entry(w.iter().collect()).or_default() += count;
                }
            }
        }
        for g in ranked(gram_counts) {
            if !admit(g, &mut units, &mut budget) {
                break;
            }
        }
        for p in rest_pieces {
            if !admit(p, &mut units, &mut budget) {
                break;
            }
        }
    }
    Vocab::from_units(units)
}

/// Tokenizes one line. Never fails: uncovered characters become byte tokens.
pub fn tokenize(line: &str, vocab: &Vocab) -> Vec<u32> {
    let mut ids = Vec::new();
    for piece in pieces(line) {
        let chars: Vec<char> = piece.chars().collect();
        let mut pos = 0;
        while pos < chars.len() {
            let longest = vocab.max_chars.min(chars.len() - pos);
            let hit = (1..=longest).rev().find_map(|n| {
                let cand: String = chars[pos..pos + n].iter().collect();
                vocab.id(&cand).map(|id| (id, n))
            });
            match hit {
                Some((id, n)) => {
                    ids.push(id);
                    pos += n;
                }
                None => {
                    let mut buf = [0u8; 4];
                    for b in chars[pos].encode_utf8(&mut buf).bytes() {
                        ids.push(BYTE_BASE + b as u32);
                    }
                    pos += 1;
                }
            }
        }
    }
    ids
}
