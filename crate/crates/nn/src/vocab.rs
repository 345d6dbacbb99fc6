//! Word-level vocabulary for the randomly initialized tiny backbones.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use crate::error::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "<mask>";
pub const BOS: &str = "[BOS]";
pub const EOS: &str = "[EOS]";

const SPECIALS: [&str; 7] = [PAD, UNK, CLS, SEP, MASK, BOS, EOS];

static TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"<mask>|\$\w+\$|\w+|[^\w\s]").expect("token pattern"));

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordVocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl WordVocab {
    /// Specials first, then words by descending frequency (ties sorted
    /// lexicographically), capped at `max_size` entries in total.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, max_size: usize) -> Self {
        let mut freq: HashMap<String, usize> = HashMap::new();
        for t in texts {
            for tok in Self::tokenize(t) {
                *freq.entry(tok).or_default() += 1;
            }
        }
        let mut words: Vec<(String, usize)> = freq
            .into_iter()
            .filter(|(w, _)| !SPECIALS.contains(&w.as_str()))
            .collect();
        words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let room = max_size.saturating_sub(SPECIALS.len());
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(words.into_iter().take(room).map(|(w, _)| w))
            .collect();
        Self::from_tokens(tokens)
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }

    pub fn tokenize(text: &str) -> Vec<String> {
        let lower = text.to_lowercase();
        TOKEN
            .find_iter(&lower)
            .map(|m| m.as_str().to_owned())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(1)
    }

    /// Token ids, truncated to `max_len`; with `cls` the sequence starts
    /// with the classification token.
    pub fn encode(&self, text: &str, max_len: usize, cls: bool) -> Vec<u32> {
        let head = cls.then(|| self.id(CLS));
        head.into_iter()
            .chain(Self::tokenize(text).iter().map(|t| self.id(t)))
            .take(max_len)
            .collect()
    }

    /// Space-joined words; special tokens are dropped.
    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .filter(|&&i| i as usize >= SPECIALS.len())
            .filter_map(|&i| self.tokens.get(i as usize))
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.tokens.join("\n")).map_err(|e| Error::checkpoint(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::checkpoint(path, e))?;
        let tokens: Vec<String> = body.split('\n').map(str::to_owned).collect();
        if tokens.len() < SPECIALS.len() || tokens[..SPECIALS.len()] != SPECIALS {
            return Err(Error::checkpoint(path, "vocabulary does not start with the special tokens"));
        }
        Ok(Self::from_tokens(tokens))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenization_keeps_markers_whole() {
        assert_eq!(
            WordVocab::tokenize("Hi $MENTION$, <mask> you!"),
            ["hi", "$mention$", ",", "<mask>", "you", "!"]
        );
    }

    #[test]
    fn build_orders_by_frequency() {
        let v = WordVocab::build(["b a a", "c a b"], 9);
        assert_eq!(v.len(), 9);
        assert_eq!(v.id("a"), 7);
        assert_eq!(v.id("b"), 8);
        assert_eq!(v.id("c"), 1, "over capacity → unknown");
    }

    #[test]
    fn encode_truncates_and_prefixes() {
        let v = WordVocab::build(["x y z"], 100);
        let ids = v.encode("x y z q", 3, true);
        assert_eq!(ids, [v.id(CLS), v.id("x"), v.id("y")]);
        assert_eq!(v.decode(&v.encode("x y z q", 10, true)), "x y z");
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = WordVocab::build(["alpha beta", "gamma"], 100);
        let p = dir.path().join("vocab");
        v.save(&p).unwrap();
        assert_eq!(WordVocab::load(&p).unwrap(), v);
    }
}
