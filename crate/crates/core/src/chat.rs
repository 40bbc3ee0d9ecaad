//! A practical subset of the CHAT transcription format.
//!
//! Supported line kinds: `@Header:` metadata, `*TIER:` main tiers, `%tier:`
//! dependent tiers and tab-indented continuation lines. Utterance text is
//! cleaned of CHAT control codes and split into lowercase token sentences.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ciu::CiuId;
use crate::error::ChatError;

pub const DEFAULT_PARTICIPANT_TIER: &str = "PAR";
pub const UNKNOWN_SPEAKER: &str = "unknown";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utterance {
    pub tier: String,
    pub raw: String,
    /// Cleaned, sentence-split tokens of `raw`.
    pub sentences: Vec<Vec<String>>,
    /// Dependent `%` tiers as `(name, content)`; carried along, never tagged.
    pub dependents: Vec<(String, String)>,
    /// 1-based line of the `*` tier in the source.
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub speaker_id: String,
    /// Lowercased header names mapped to values. `age`, `gender`, `group` and
    /// `education` are filled from the participant `@ID` line when present.
    pub metadata: BTreeMap<String, String>,
    pub utterances: Vec<Utterance>,
}

impl Transcript {
    pub fn tier_utterances<'a>(&'a self, tier: &'a str) -> impl Iterator<Item = &'a Utterance> + 'a {
        self.utterances.iter().filter(move |u| u.tier == tier)
    }

    /// Sentences spoken on `tier`, in file order.
    pub fn sentences<'a>(&'a self, tier: &'a str) -> impl Iterator<Item = &'a [String]> + 'a {
        self.tier_utterances(tier).flat_map(|u| u.sentences.iter().map(Vec::as_slice))
    }

    pub fn participant_sentences(&self) -> impl Iterator<Item = &[String]> + '_ {
        self.sentences(DEFAULT_PARTICIPANT_TIER)
    }
}

/// A cleaned sentence with its CIU annotation in mention order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledSentence {
    pub speaker_id: String,
    pub tokens: Vec<String>,
    pub labels: Vec<CiuId>,
}

impl LabeledSentence {
    /// Drops repeated labels after their first mention.
    pub fn new(speaker_id: impl Into<String>, tokens: Vec<String>, labels: Vec<CiuId>) -> Self {
        let mut seen = [false; crate::NUM_CIUS];
        let labels = labels.into_iter().filter(|c| !core::mem::replace(&mut seen[c.code()], true)).collect();
        LabeledSentence { speaker_id: speaker_id.into(), tokens, labels }
    }

    /// Multi-hot label vector indexed by CIU code.
    pub fn targets(&self) -> [bool; crate::NUM_CIUS] {
        let mut y = [false; crate::NUM_CIUS];
        for c in &self.labels {
            y[c.code()] = true;
        }
        y
    }
}

/// Diagnostic group. Any cognitive-impairment diagnosis pools into `Impaired`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    Control,
    Impaired,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Control => "control",
            Group::Impaired => "impaired",
        }
    }

    /// Accepts `control`/`impaired` and the usual clinical group labels.
    pub fn parse(text: &str) -> Option<Group> {
        match text.trim().to_lowercase().as_str() {
            "control" | "hc" | "healthy" => Some(Group::Control),
            "impaired" | "mci" | "dementia" | "probablead" | "possiblead" | "ad" | "vascular" => Some(Group::Impaired),
            _ => None,
        }
    }
}

/// Per-speaker covariates. `gender` is coded 0 (male) / 1 (female).
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerInfo {
    pub speaker_id: String,
    pub age: f64,
    pub gender: u8,
    pub education: f64,
    pub group: Group,
}

impl SpeakerInfo {
    /// Reads the covariates from transcript metadata; `None` if any is
    /// missing or unparseable.
    pub fn from_transcript(t: &Transcript) -> Option<SpeakerInfo> {
        let get = |k: &str| t.metadata.get(k).map(|v| v.trim());
        let gender = match get("gender")?.to_lowercase().as_str() {
            "male" | "m" | "0" => 0,
            "female" | "f" | "1" => 1,
            _ => return None,
        };
        Some(SpeakerInfo {
            speaker_id: t.speaker_id.clone(),
            age: get("age")?.parse().ok()?,
            gender,
            education: get("education")?.parse().ok()?,
            group: Group::parse(get("group")?)?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ChatOptions<'a> {
    pub participant_tier: &'a str,
    /// Used when no `@ID` line names the speaker.
    pub default_speaker: &'a str,
}

impl Default for ChatOptions<'_> {
    fn default() -> Self {
        ChatOptions { participant_tier: DEFAULT_PARTICIPANT_TIER, default_speaker: UNKNOWN_SPEAKER }
    }
}

pub fn parse_chat(text: &str) -> Result<Transcript, ChatError> {
    parse_chat_with(text, &ChatOptions::default())
}

enum Last {
    None,
    Header(String),
    Main,
    Dependent,
}

pub fn parse_chat_with(text: &str, opts: &ChatOptions<'_>) -> Result<Transcript, ChatError> {
    let mut metadata = BTreeMap::new();
    let mut ids: Vec<Vec<String>> = Vec::new();
    let mut utterances: Vec<Utterance> = Vec::new();
    let mut last = Last::None;

    let malformed = |line: usize, content: &str| ChatError::MalformedLine { line, content: content.to_string() };

    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        // Leading BOM on the first line.
        let line = line.strip_prefix('\u{feff}').unwrap_or(line);

        if line.starts_with(['\t', ' ']) {
            let extra = line.trim();
            match &last {
                Last::Main => append(&mut utterances.last_mut().unwrap().raw, extra),
                Last::Dependent => {
                    let dep = utterances.last_mut().unwrap().dependents.last_mut().unwrap();
                    append(&mut dep.1, extra);
                }
                Last::Header(key) => {
                    if let Some(v) = metadata.get_mut(key) {
                        append(v, extra);
                    }
                }
                Last::None => return Err(malformed(line_no, line)),
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix('@') {
            match rest.split_once(':') {
                Some((key, value)) if !key.is_empty() && !key.contains(char::is_whitespace) => {
                    let key = key.to_lowercase();
                    let value = value.trim().to_string();
                    if key == "id" {
                        ids.push(value.split('|').map(|f| f.trim().to_string()).collect());
                        last = Last::None;
                    } else {
                        metadata.entry(key.clone()).or_insert(value);
                        last = Last::Header(key);
                    }
                }
                // Bare markers such as `@Begin`, `@End`, `@UTF8`.
                None if !rest.is_empty() && !rest.contains(char::is_whitespace) => last = Last::None,
                _ => return Err(malformed(line_no, line)),
            }
            continue;
        }

        if let Some(rest) = line.strip_prefix('*') {
            let (tier, content) = split_tier(rest).ok_or_else(|| malformed(line_no, line))?;
            utterances.push(Utterance {
                tier: tier.to_string(),
                raw: content.trim().to_string(),
                sentences: Vec::new(),
                dependents: Vec::new(),
                line: line_no,
            });
            last = Last::Main;
            continue;
        }

        if let Some(rest) = line.strip_prefix('%') {
            let (tier, content) = split_tier(rest).ok_or_else(|| malformed(line_no, line))?;
            let utt = utterances.last_mut().ok_or_else(|| malformed(line_no, line))?;
            utt.dependents.push((tier.to_string(), content.trim().to_string()));
            last = Last::Dependent;
            continue;
        }

        return Err(malformed(line_no, line));
    }

    if utterances.is_empty() {
        return Err(ChatError::EmptyTranscript);
    }
    for u in &mut utterances {
        u.sentences = clean_and_segment(&u.raw);
    }

    let participant = ids
        .iter()
        .find(|f| f.get(2).is_some_and(|code| code == opts.participant_tier))
        .or_else(|| ids.iter().find(|f| f.get(2).is_none_or(|code| code.is_empty())))
        .or(ids.first());
    let mut speaker_id = opts.default_speaker.to_string();
    if let Some(fields) = participant {
        if let Some(id) = fields.get(1).filter(|s| !s.is_empty()) {
            speaker_id = id.clone();
        }
        if let Some(age) = fields.get(3).and_then(|a| parse_chat_age(a)) {
            metadata.insert("age".into(), age_string(age));
        }
        for (idx, key) in [(4, "gender"), (5, "group"), (8, "education")] {
            if let Some(v) = fields.get(idx).filter(|s| !s.is_empty()) {
                metadata.insert(key.into(), v.clone());
            }
        }
    }

    Ok(Transcript { speaker_id, metadata, utterances })
}

fn split_tier(rest: &str) -> Option<(&str, &str)> {
    let (tier, content) = rest.split_once(':')?;
    if tier.is_empty() || tier.contains(char::is_whitespace) {
        return None;
    }
    if !content.is_empty() && !content.starts_with(char::is_whitespace) {
        return None;
    }
    Some((tier, content))
}

fn append(target: &mut String, extra: &str) {
    if extra.is_empty() {
        return;
    }
    if !target.is_empty() {
        target.push(' ');
    }
    target.push_str(extra);
}

/// CHAT ages look like `57;`, `57;06.` or `57;06.15`.
fn parse_chat_age(text: &str) -> Option<f64> {
    let text = text.trim().trim_end_matches('.');
    let (years, rest) = match text.split_once(';') {
        Some((y, r)) => (y, r),
        None => (text, ""),
    };
    let years: f64 = years.trim().parse().ok()?;
    let months = rest.split('.').next().unwrap_or("").trim();
    let months: f64 = if months.is_empty() { 0.0 } else { months.parse().ok()? };
    Some(years + months / 12.0)
}

fn age_string(age: f64) -> String {
    alloc::format!("{age}")
}

enum Piece {
    Word(String),
    Code(String),
    Open,
    Close,
}

fn scan(text: &str) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut word = String::new();
    let mut chars = text.chars().peekable();
    let flush = |word: &mut String, pieces: &mut Vec<Piece>| {
        if !word.is_empty() {
            pieces.push(Piece::Word(core::mem::take(word)));
        }
    };
    while let Some(c) = chars.next() {
        match c {
            '[' => {
                flush(&mut word, &mut pieces);
                let mut code = String::new();
                for d in chars.by_ref() {
                    if d == ']' {
                        break;
                    }
                    code.push(d);
                }
                pieces.push(Piece::Code(code));
            }
            // Media bullets: \u{15}start_end\u{15}.
            '\u{15}' => {
                flush(&mut word, &mut pieces);
                for d in chars.by_ref() {
                    if d == '\u{15}' {
                        break;
                    }
                }
            }
            '<' => {
                flush(&mut word, &mut pieces);
                pieces.push(Piece::Open);
            }
            '>' => {
                flush(&mut word, &mut pieces);
                pieces.push(Piece::Close);
            }
            c if c.is_whitespace() => flush(&mut word, &mut pieces),
            c => word.push(c),
        }
    }
    flush(&mut word, &mut pieces);
    pieces
}

fn is_retrace(code: &str) -> bool {
    matches!(code.trim(), "/" | "//" | "///" | "/-" | "/?")
}

fn is_pause(word: &str) -> bool {
    word.len() >= 3
        && word.starts_with('(')
        && word.ends_with(')')
        && word[1..word.len() - 1].chars().all(|c| c == '.' || c == ':' || c.is_ascii_digit())
}

/// Strips CHAT codes from one utterance, lowercases it and splits it into
/// sentences of word tokens.
///
/// Removed: `[...]` codes, `&`-prefixed fillers and fragments, `(.)`-style
/// pauses, `+`-prefixed linkers and terminators, `xxx`/`yyy`/`www`, omitted
/// `0word`s and `@` form markers. A retrace code (`[/]`, `[//]`, ...) removes
/// the word or `<...>` group it follows; other `<...>` groups keep their
/// words. Sentences end at `.`, `?`, `!` and at `+` terminators such as
/// `+...` or `+/.`.
pub fn clean_and_segment(text: &str) -> Vec<Vec<String>> {
    enum Unit {
        Word(String),
        Break,
    }
    // Each retained unit carries the id of its enclosing `<...>` group.
    let mut units: Vec<(Unit, Option<usize>)> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut next_group = 0usize;
    let mut last_group: Option<usize> = None;

    for piece in scan(text) {
        match piece {
            Piece::Open => {
                open.push(next_group);
                next_group += 1;
                last_group = None;
            }
            Piece::Close => {
                last_group = open.pop();
            }
            Piece::Code(code) => {
                if !is_retrace(&code) {
                    continue;
                }
                match last_group.take() {
                    Some(g) => units.retain(|(_, owner)| *owner != Some(g) && !owner.is_some_and(|o| o > g)),
                    None => {
                        if let Some(pos) = units.iter().rposition(|(u, _)| matches!(u, Unit::Word(_))) {
                            units.remove(pos);
                        }
                    }
                }
            }
            Piece::Word(w) => {
                last_group = None;
                let owner = open.last().copied();
                if let Some(code) = w.strip_prefix('+') {
                    if code.ends_with(['.', '?', '!']) {
                        units.push((Unit::Break, owner));
                    }
                    continue;
                }
                if w.starts_with('&') || w.starts_with('0') || is_pause(&w) {
                    continue;
                }
                let w = w.split('@').next().unwrap_or("");
                if matches!(w.to_lowercase().as_str(), "xxx" | "yyy" | "www") {
                    continue;
                }
                let mut current = String::new();
                for c in w.chars() {
                    match c {
                        '.' | '?' | '!' => {
                            push_token(&mut units, &mut current, owner);
                            units.push((Unit::Break, owner));
                        }
                        '(' | ')' | ':' | '^' | 'ˈ' | 'ˌ' => {}
                        c if c.is_alphanumeric() || c == '\'' => current.extend(c.to_lowercase()),
                        _ => push_token(&mut units, &mut current, owner),
                    }
                }
                push_token(&mut units, &mut current, owner);
            }
        }
    }

    fn push_token(units: &mut Vec<(Unit, Option<usize>)>, current: &mut String, owner: Option<usize>) {
        let token = current.trim_matches('\'');
        if !token.is_empty() {
            units.push((Unit::Word(token.to_string()), owner));
        }
        current.clear();
    }

    let mut sentences = Vec::new();
    let mut sentence = Vec::new();
    for (unit, _) in units {
        match unit {
            Unit::Word(w) => sentence.push(w),
            Unit::Break => {
                if !sentence.is_empty() {
                    sentences.push(core::mem::take(&mut sentence));
                }
            }
        }
    }
    if !sentence.is_empty() {
        sentences.push(sentence);
    }
    sentences
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(s: &[&[&str]]) -> Vec<Vec<String>> {
        s.iter().map(|t| t.iter().map(|w| w.to_string()).collect()).collect()
    }

    #[test]
    fn minimal_file() {
        let t = parse_chat("@ID:\ten|s01|\n*PAR:\tthe boy is on the stool .").unwrap();
        assert_eq!(t.speaker_id, "s01");
        assert_eq!(t.utterances.len(), 1);
        assert_eq!(t.utterances[0].tier, "PAR");
        assert_eq!(t.utterances[0].sentences, toks(&[&["the", "boy", "is", "on", "the", "stool"]]));
    }

    #[test]
    fn headers_only() {
        assert_eq!(parse_chat("@Begin\n@ID:\ten|s01|\n@End\n"), Err(ChatError::EmptyTranscript));
        assert_eq!(parse_chat(""), Err(ChatError::EmptyTranscript));
    }

    #[test]
    fn continuation_line() {
        let t = parse_chat("*PAR:\tfirst part\n\tsecond part .").unwrap();
        assert_eq!(t.utterances.len(), 1);
        assert_eq!(t.utterances[0].raw, "first part second part .");
        assert_eq!(t.speaker_id, UNKNOWN_SPEAKER);
    }

    #[test]
    fn malformed_lines_are_located() {
        let err = parse_chat("@Begin\n*PAR:\tok .\nstray text\n").unwrap_err();
        assert_eq!(err, ChatError::MalformedLine { line: 3, content: "stray text".into() });
        assert!(matches!(parse_chat("%mor:\tn|boy"), Err(ChatError::MalformedLine { line: 1, .. })));
        assert!(matches!(parse_chat("\tcontinued"), Err(ChatError::MalformedLine { line: 1, .. })));
        assert!(matches!(parse_chat("*PAR no colon"), Err(ChatError::MalformedLine { line: 1, .. })));
    }

    #[test]
    fn dementiabank_style_file() {
        let text = "@UTF8\n@Begin\n@Languages:\teng\n@Participants:\tPAR Participant, INV Investigator\n\
@ID:\teng|Pitt|INV|||||Investigator|||\n@ID:\teng|s042|PAR|67;06.|female|ProbableAD||Participant|12||\n\
*INV:\ttell me what you see .\n*PAR:\twell &uh the <little boy> [/] little boy is on the stool (.) .\n\
%mor:\tn|boy\n*PAR:\tand the water's overflowing [+ gram] .\n@End\n";
        let t = parse_chat(text).unwrap();
        assert_eq!(t.speaker_id, "s042");
        assert_eq!(t.metadata["age"], "67.5");
        assert_eq!(t.metadata["gender"], "female");
        assert_eq!(t.metadata["group"], "ProbableAD");
        assert_eq!(t.metadata["education"], "12");
        assert_eq!(t.metadata["languages"], "eng");
        assert_eq!(t.utterances.len(), 3);
        assert_eq!(t.utterances[1].dependents, vec![("mor".to_string(), "n|boy".to_string())]);
        let par: Vec<&[String]> = t.participant_sentences().collect();
        assert_eq!(
            par,
            vec![
                &toks(&[&["well", "the", "little", "boy", "is", "on", "the", "stool"]])[0][..],
                &toks(&[&["and", "the", "water's", "overflowing"]])[0][..],
            ]
        );
    }

    #[test]
    fn cleaning_examples() {
        assert_eq!(clean_and_segment("the boy &uh is [//] is falling ."), toks(&[&["the", "boy", "is", "falling"]]));
        assert_eq!(clean_and_segment("water . cookies !"), toks(&[&["water"], &["cookies"]]));
        assert!(clean_and_segment("").is_empty());
        assert!(clean_and_segment("&uh (.) xxx [*] .").is_empty());
    }

    #[test]
    fn cleaning_codes() {
        assert_eq!(clean_and_segment("<the boy> [>] is up there ."), toks(&[&["the", "boy", "is", "up", "there"]]));
        assert_eq!(clean_and_segment("<the boy> [/] the boy falls"), toks(&[&["the", "boy", "falls"]]));
        assert_eq!(clean_and_segment("the mother +... the sink ."), toks(&[&["the", "mother"], &["the", "sink"]]));
        assert_eq!(clean_and_segment("he's goin(g) to fall@c , yeah"), toks(&[&["he's", "going", "to", "fall", "yeah"]]));
        assert_eq!(clean_and_segment("Cookie-Jar? wa:ter (1.5) 0is there"), toks(&[&["cookie", "jar"], &["water", "there"]]));
        assert_eq!(clean_and_segment("sink \u{15}1200_3400\u{15} ."), toks(&[&["sink"]]));
    }

    #[test]
    fn speaker_info_from_id_line() {
        let t = parse_chat("@ID:\teng|S001|PAR|71;06.|female|ProbableAD||Participant|14|\n*PAR:\tthe boy .\n").unwrap();
        let info = SpeakerInfo::from_transcript(&t).unwrap();
        assert_eq!((info.speaker_id.as_str(), info.gender, info.group), ("S001", 1, Group::Impaired));
        assert_eq!((info.age, info.education), (71.5, 14.0));
        let bare = parse_chat("*PAR:\tthe boy .\n").unwrap();
        assert_eq!(SpeakerInfo::from_transcript(&bare), None);
    }

    #[test]
    fn labeled_sentence_dedup() {
        let s = LabeledSentence::new("s", vec!["boy".into()], vec![CiuId::BOY, CiuId::COOKIE, CiuId::BOY]);
        assert_eq!(s.labels, vec![CiuId::BOY, CiuId::COOKIE]);
        assert!(s.targets()[CiuId::COOKIE.code()]);
    }

    proptest::proptest! {
        #[test]
        fn clean_text_is_fixed_point(
            sentences in proptest::collection::vec(
                proptest::collection::vec("[a-z][a-z']{0,6}[a-z]", 1..6), 0..4)
        ) {
            let text: String = sentences.iter().map(|s| s.join(" ") + " . ").collect();
            let once = clean_and_segment(&text);
            proptest::prop_assert_eq!(&once, &sentences);
            let rejoined: String = once.iter().map(|s| s.join(" ") + " . ").collect();
            proptest::prop_assert_eq!(clean_and_segment(&rejoined), once);
        }

        #[test]
        fn tokens_are_clean(text in "\\PC{0,80}") {
            for sentence in clean_and_segment(&text) {
                proptest::prop_assert!(!sentence.is_empty());
                for tok in sentence {
                    proptest::prop_assert!(!tok.is_empty());
                    // Some uppercase letters (e.g. mathematical script) have no lowercase form.
                    proptest::prop_assert_eq!(tok.to_lowercase(), tok.clone());
                    proptest::prop_assert!(!tok.chars().any(|c| matches!(c, '[' | ']' | '<' | '>' | '(' | ')' | '.' | '?' | '!')));
                }
            }
        }

        #[test]
        fn parse_chat_is_total(text in "([@*%\t ]?[A-Za-z:|\t .]{0,20}\n){0,8}") {
            let _ = parse_chat(&text);
        }
    }
}
