use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub const PAD: usize = 0;
pub const OOV: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";

/// Whitespace-token vocabulary. Index 0 is padding, 1 is out-of-vocabulary,
/// real tokens follow densely.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Default for Vocab {
    fn default() -> Self {
        Vocab::from_tokens(core::iter::empty::<&str>())
    }
}

impl Vocab {
    /// Adds tokens in iteration order, skipping repeats and the reserved
    /// spellings.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocab { tokens: Vec::new(), index: BTreeMap::new() };
        vocab.push(PAD_TOKEN);
        vocab.push(OOV_TOKEN);
        for t in tokens {
            vocab.push(t.as_ref());
        }
        vocab
    }

    /// Vocabulary of every token seen at least `min_count` times, in
    /// lexicographic order.
    pub fn build<'a, I, S>(sentences: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for sentence in sentences {
            for t in sentence {
                *counts.entry(t.as_ref()).or_default() += 1;
            }
        }
        Vocab::from_tokens(counts.into_iter().filter(|(_, c)| *c >= min_count.max(1)).map(|(t, _)| t))
    }

    fn push(&mut self, token: &str) {
        if !self.index.contains_key(token) {
            self.index.insert(token.to_string(), self.tokens.len());
            self.tokens.push(token.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false: the reserved entries are present.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    /// Tokens in index order, reserved entries included.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn tokenize<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.get(t.as_ref()).unwrap_or(OOV)).collect()
    }
}

pub fn tokenize<S: AsRef<str>>(tokens: &[S], vocab: &Vocab) -> Vec<usize> {
    vocab.tokenize(tokens)
}
