//! Training-free phrase dictionary tagger.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chat::Transcript;
use crate::ciu::{parse_ciu_name, CiuId, CiuSequence};
use crate::error::DictionaryError;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CiuDictionary {
    /// Phrase -> CIUs in declaration order.
    entries: BTreeMap<Vec<String>, Vec<CiuId>>,
    max_len: usize,
}

impl CiuDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `phrase -> cius`, merging with an existing entry for the same
    /// phrase. Empty phrases or CIU lists are ignored.
    pub fn insert<S: AsRef<str>>(&mut self, phrase: &[S], cius: &[CiuId]) {
        let phrase: Vec<String> = phrase.iter().map(|t| t.as_ref().to_lowercase()).collect();
        if phrase.is_empty() || cius.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(phrase.len());
        let targets = self.entries.entry(phrase).or_default();
        for c in cius {
            if !targets.contains(c) {
                targets.push(*c);
            }
        }
    }

    /// Parses `<phrase> -> <ciu>[, <ciu>...]` lines; `#` starts a comment.
    pub fn from_text(source: &str) -> Result<Self, DictionaryError> {
        let mut dict = CiuDictionary::new();
        for (i, raw) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (phrase, targets) = line
                .split_once("->")
                .ok_or_else(|| DictionaryError::Parse { line: line_no, message: "expected `<phrase> -> <ciu>[, <ciu>...]`".to_string() })?;
            let phrase: Vec<&str> = phrase.split_whitespace().collect();
            if phrase.is_empty() {
                return Err(DictionaryError::Parse { line: line_no, message: "empty phrase".to_string() });
            }
            let mut cius = Vec::new();
            for name in targets.split(',') {
                let name = name.trim();
                if name.is_empty() {
                    return Err(DictionaryError::Parse { line: line_no, message: "empty CIU name".to_string() });
                }
                cius.push(parse_ciu_name(name).map_err(|e| DictionaryError::Ciu { line: line_no, source: e })?);
            }
            dict.insert(&phrase, &cius);
        }
        Ok(dict)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (phrase, cius) in &self.entries {
            out.push_str(&phrase.join(" "));
            out.push_str(" -> ");
            let names: Vec<&str> = cius.iter().map(|c| c.name()).collect();
            out.push_str(&names.join(", "));
            out.push('\n');
        }
        out
    }

    pub fn get<S: AsRef<str>>(&self, phrase: &[S]) -> Option<&[CiuId]> {
        // BTreeMap<Vec<String>> cannot be queried by &[&str] directly.
        let key: Vec<String> = phrase.iter().map(|s| s.as_ref().to_string()).collect();
        self.entries.get(&key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_phrase_len(&self) -> usize {
        self.max_len
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[String], &[CiuId])> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), v.as_slice()))
    }

    /// Longest phrase starting at `tokens[start]`, as `(length, cius)`.
    fn longest_match<S: AsRef<str>>(&self, tokens: &[S], start: usize) -> Option<(usize, &[CiuId])> {
        let available = tokens.len() - start;
        let mut key: Vec<String> = tokens[start..start + available.min(self.max_len)].iter().map(|t| t.as_ref().to_string()).collect();
        while !key.is_empty() {
            if let Some(cius) = self.entries.get(&key) {
                return Some((key.len(), cius));
            }
            key.pop();
        }
        None
    }

    /// Greedy left-to-right longest-match scan. Each match emits its CIUs in
    /// declaration order and the scan resumes after the matched phrase.
    pub fn tag_sentence<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<CiuId> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < tokens.len() {
            match self.longest_match(tokens, pos) {
                Some((len, cius)) => {
                    out.extend_from_slice(cius);
                    pos += len;
                }
                None => pos += 1,
            }
        }
        out
    }

    /// Concatenates per-sentence output, tagging each item with its
    /// sentence index.
    pub fn tag_sentences<'a, I, S>(&self, sentences: I) -> CiuSequence
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut seq = CiuSequence::new();
        for (i, tokens) in sentences.into_iter().enumerate() {
            seq.push_sentence(i, &self.tag_sentence(tokens));
        }
        seq
    }

    /// Tags the participant tier of a transcript.
    pub fn tag_transcript(&self, transcript: &Transcript, tier: &str) -> CiuSequence {
        self.tag_sentences(transcript.sentences(tier))
    }
}

pub fn load_dictionary(source: &str) -> Result<CiuDictionary, DictionaryError> {
    CiuDictionary::from_text(source)
}

pub fn tag_sentence_dict<S: AsRef<str>>(tokens: &[S], dict: &CiuDictionary) -> CiuSequence {
    CiuSequence::from_ids(dict.tag_sentence(tokens))
}

pub fn tag_transcript_dict(transcript: &Transcript, dict: &CiuDictionary) -> CiuSequence {
    dict.tag_transcript(transcript, crate::chat::DEFAULT_PARTICIPANT_TIER)
}
