use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CiuError {
    #[error("unknown CIU `{0}`")]
    UnknownCiu(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Ciu { line: usize, source: CiuError },
    #[error("{}coordinate {value} for `{ciu}` is outside [0, 1]", line.map(|l| alloc::format!("line {l}: ")).unwrap_or_default())]
    OutOfRange { line: Option<usize>, ciu: String, value: f64 },
    #[error("line {line}: `{ciu}` listed twice")]
    Duplicate { line: usize, ciu: String },
    #[error("missing CIU(s): {}", .0.join(", "))]
    MissingCiu(Vec<String>),
    #[error("split line {0} must lie strictly inside (0, 1)")]
    BadSplit(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChatError {
    #[error("line {line}: malformed CHAT line `{content}`")]
    MalformedLine { line: usize, content: String },
    #[error("transcript has no speaker tier lines")]
    EmptyTranscript,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DictionaryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Ciu { line: usize, source: CiuError },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeuralError {
    #[error("empty token sequence")]
    EmptyInput,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no pooled embedding for sentence `{0}`")]
    MissingKey(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("tensor `{name}`: {message}")]
    Tensor { name: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{groups} distinct group(s) cannot fill {k} folds")]
    TooFewGroups { groups: usize, k: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("reference sequence is empty")]
    EmptyReference,
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("design matrix is rank deficient at column `{column}`")]
    RankDeficient { column: String },
    #[error("{rows} usable row(s) for {params} parameter(s)")]
    TooFewRows { rows: usize, params: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("invalid template spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("speaker `{0}` has no manifest entry")]
    MissingSpeaker(String),
    #[error("tagger returned {found} prediction(s) for {expected} sentence(s)")]
    PredictionCount { expected: usize, found: usize },
}
