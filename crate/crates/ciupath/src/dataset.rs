//! Line-delimited JSON records: labeled sentences, the speaker manifest and
//! tagged CIU sequences.

use std::path::Path;

use ciupath_core::{parse_ciu_name, CiuId, CiuSequence, Group, LabeledSentence, SpeakerInfo};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentenceRecord {
    pub speaker_id: String,
    pub sentence_tokens: Vec<String>,
    /// Canonical CIU names in mention order.
    pub ciu_labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub speaker_id: String,
    pub age: f64,
    /// 0 = male, 1 = female.
    pub gender: u8,
    pub education: f64,
    /// `control` or `impaired`.
    pub group: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceRecord {
    pub speaker_id: String,
    pub cius: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_indices: Option<Vec<usize>>,
}

fn parse_lines<T: DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<(usize, T)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map(|r| (i + 1, r)).map_err(|e| Error::Record {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn to_lines<T: Serialize>(records: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("records serialize"));
        out.push('\n');
    }
    out
}

fn cius(path: &Path, line: usize, names: &[String]) -> Result<Vec<CiuId>> {
    names.iter().map(|n| parse_ciu_name(n).map_err(|e| Error::Record { path: path.to_path_buf(), line, message: e.to_string() })).collect()
}

fn names(ids: &[CiuId]) -> Vec<String> {
    ids.iter().map(|c| c.name().to_string()).collect()
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<Vec<LabeledSentence>> {
    parse_lines::<SentenceRecord>(path, text)?
        .into_iter()
        .map(|(line, r)| Ok(LabeledSentence::new(r.speaker_id, r.sentence_tokens, cius(path, line, &r.ciu_labels)?)))
        .collect()
}

pub fn format_dataset(sentences: &[LabeledSentence]) -> String {
    to_lines(sentences.iter().map(|s| SentenceRecord {
        speaker_id: s.speaker_id.clone(),
        sentence_tokens: s.tokens.clone(),
        ciu_labels: names(&s.labels),
    }))
}

pub fn read_dataset(path: &Path) -> Result<Vec<LabeledSentence>> {
    parse_dataset(path, &read_to_string(path)?)
}

pub fn write_dataset(path: &Path, sentences: &[LabeledSentence]) -> Result<()> {
    write(path, format_dataset(sentences))
}

pub fn parse_manifest(path: &Path, text: &str) -> Result<Vec<SpeakerInfo>> {
    parse_lines::<ManifestRecord>(path, text)?
        .into_iter()
        .map(|(line, r)| {
            let bad = |message: String| Error::Record { path: path.to_path_buf(), line, message };
            let group = Group::parse(&r.group).ok_or_else(|| bad(format!("unknown group `{}`", r.group)))?;
            if r.gender > 1 {
                return Err(bad(format!("gender code {} is not 0 or 1", r.gender)));
            }
            Ok(SpeakerInfo { speaker_id: r.speaker_id, age: r.age, gender: r.gender, education: r.education, group })
        })
        .collect()
}

pub fn format_manifest(speakers: &[SpeakerInfo]) -> String {
    to_lines(speakers.iter().map(|s| ManifestRecord {
        speaker_id: s.speaker_id.clone(),
        age: s.age,
        gender: s.gender,
        education: s.education,
        group: s.group.name().to_string(),
    }))
}

pub fn read_manifest(path: &Path) -> Result<Vec<SpeakerInfo>> {
    parse_manifest(path, &read_to_string(path)?)
}

pub fn write_manifest(path: &Path, speakers: &[SpeakerInfo]) -> Result<()> {
    write(path, format_manifest(speakers))
}

pub fn parse_sequences(path: &Path, text: &str) -> Result<Vec<(String, CiuSequence)>> {
    parse_lines::<SequenceRecord>(path, text)?
        .into_iter()
        .map(|(line, r)| {
            let ids = cius(path, line, &r.cius)?;
            let seq = match r.sentence_indices {
                Some(idx) => CiuSequence::with_sentences(ids, idx).ok_or_else(|| Error::Record {
                    path: path.to_path_buf(),
                    line,
                    message: "sentence_indices must be non-decreasing and match cius in length".into(),
                })?,
                None => CiuSequence::from_ids(ids),
            };
            Ok((r.speaker_id, seq))
        })
        .collect()
}

pub fn format_sequences(rows: &[(String, CiuSequence)]) -> String {
    to_lines(rows.iter().map(|(id, seq)| SequenceRecord {
        speaker_id: id.clone(),
        cius: names(seq.ids()),
        sentence_indices: seq.sentence_indices().map(<[usize]>::to_vec),
    }))
}

pub fn read_sequences(path: &Path) -> Result<Vec<(String, CiuSequence)>> {
    parse_sequences(path, &read_to_string(path)?)
}

pub fn write_sequences(path: &Path, rows: &[(String, CiuSequence)]) -> Result<()> {
    write(path, format_sequences(rows))
}
