//! Extraction and ordering of Cookie Theft content information units (CIUs)
//! from picture descriptions, spatio-semantic graph features, and the
//! statistics used to evaluate them.
//!
//! The crate is `no_std` and only needs `alloc`. File IO, binary formats and
//! the command-line front end live in the `ciupath` crate.

#![no_std]

extern crate alloc;

pub mod chat;
pub mod ciu;
pub mod dictionary;
pub mod error;
pub mod graph;
pub mod neural;
pub mod stats;
pub mod synth;

pub use chat::{clean_and_segment, parse_chat, Group, LabeledSentence, SpeakerInfo, Transcript, Utterance};
pub use ciu::{parse_ciu_name, quadrant_of, CiuId, CiuSequence, CoordinateMap, Point, Quadrant, NUM_CIUS};
pub use dictionary::{load_dictionary, tag_sentence_dict, tag_transcript_dict, CiuDictionary};
pub use error::{ChatError, CiuError, DictionaryError, EvalError, MapError, NeuralError, StatsError, SynthError};
pub use graph::{build_graph, compute_features, Feature, FeatureVector, SpatioGraph};
