//! Binary checkpoint: magic, version, config text, vocabulary and named
//! float32 tensors, all little-endian.
//!
//! ```text
//! "CIUCKPT\0" | u32 version
//! u32 len | config text (UTF-8, `key=value` lines)
//! u32 count | count × (u32 len | token)
//! u32 count | count × (u32 len | name | u32 ndims | ndims × u32 | f32 payload)
//! ```

use std::path::Path;

use ciupath_core::neural::{HeadTagger, Matrix, Model, Tagger, TrainConfig, Vocab};

use crate::error::{write, AtPath, CheckpointError, Error, Result};

pub const MAGIC: &[u8; 8] = b"CIUCKPT\0";
pub const VERSION: u32 = 1;

const POOLING_KEY: &str = "pooling";

/// A tagger restored from disk. Checkpoints trained on external sentence
/// embeddings carry only the classification head.
#[derive(Clone, Debug, PartialEq)]
pub enum Checkpoint {
    Builtin(Tagger),
    External(HeadTagger),
}

impl Checkpoint {
    pub fn config(&self) -> &TrainConfig {
        match self {
            Checkpoint::Builtin(t) => &t.config,
            Checkpoint::External(h) => &h.config,
        }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("checkpoint field exceeds u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len());
        self.0.extend_from_slice(b);
    }

    fn tensor(&mut self, name: &str, shape: &[usize], data: &[f32]) {
        self.bytes(name.as_bytes());
        self.u32(shape.len());
        shape.iter().for_each(|&d| self.u32(d));
        data.iter().for_each(|v| self.0.extend_from_slice(&v.to_le_bytes()));
    }
}

fn encode(config: &TrainConfig, pooling: &str, vocab: &[String], tensors: &[(String, Vec<usize>, &[f32])]) -> Vec<u8> {
    let mut w = Writer(MAGIC.to_vec());
    w.0.extend_from_slice(&VERSION.to_le_bytes());
    w.bytes(format!("{POOLING_KEY}={pooling}\n{}", config.to_text()).as_bytes());
    w.u32(vocab.len());
    vocab.iter().for_each(|t| w.bytes(t.as_bytes()));
    w.u32(tensors.len());
    for (name, shape, data) in tensors {
        w.tensor(name, shape, data);
    }
    w.0
}

pub fn tagger_to_bytes(tagger: &Tagger) -> Vec<u8> {
    let tensors: Vec<_> = tagger.model.tensors().into_iter().map(|t| (t.name, t.shape, t.data)).collect();
    encode(&tagger.config, "builtin", tagger.vocab.tokens(), &tensors)
}

pub fn head_to_bytes(head: &HeadTagger) -> Vec<u8> {
    let w = &head.head.weight;
    let tensors = [
        ("head.weight".to_string(), vec![w.rows(), w.cols()], w.data()),
        ("head.bias".to_string(), vec![head.head.bias.len()], head.head.bias.as_slice()),
    ];
    encode(&head.config, "external", &[], &tensors)
}

pub fn checkpoint_to_bytes(c: &Checkpoint) -> Vec<u8> {
    match c {
        Checkpoint::Builtin(t) => tagger_to_bytes(t),
        Checkpoint::External(h) => head_to_bytes(h),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.buf.len() < n {
            return None;
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Some(head)
    }

    fn u32(&mut self) -> Option<usize> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn bytes(&mut self) -> Option<&'a [u8]> {
        let n = self.u32()?;
        self.take(n)
    }
}

pub fn checkpoint_from_bytes(buf: &[u8]) -> Result<Checkpoint, CheckpointError> {
    use CheckpointError::*;
    let mut r = Reader { buf };
    if r.take(8) != Some(MAGIC.as_slice()) {
        return Err(BadMagic);
    }
    let version = r.u32().ok_or(Truncated("version"))? as u32;
    if version != VERSION {
        return Err(VersionMismatch { found: version, expected: VERSION });
    }
    let text = std::str::from_utf8(r.bytes().ok_or(Truncated("config"))?).map_err(|_| Utf8("config"))?;
    let mut pooling = "builtin";
    let mut rest = String::new();
    for line in text.lines() {
        match line.split_once('=') {
            Some((k, v)) if k.trim() == POOLING_KEY => pooling = v.trim(),
            _ => {
                rest.push_str(line);
                rest.push('\n');
            }
        }
    }
    let pooling = pooling.to_string();
    let config = TrainConfig::from_text(&rest).map_err(Config)?;

    let vocab_len = r.u32().ok_or(Truncated("vocabulary"))?;
    let mut tokens = Vec::with_capacity(vocab_len.min(1 << 20));
    for _ in 0..vocab_len {
        let t = r.bytes().ok_or(Truncated("vocabulary"))?;
        tokens.push(String::from_utf8(t.to_vec()).map_err(|_| Utf8("vocabulary"))?);
    }

    let count = r.u32().ok_or(Truncated("tensor table"))?;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let corrupt = |name: &str, message: &str| CorruptTensor { name: name.to_string(), message: message.to_string() };
        let placeholder = format!("#{i}");
        let name_bytes = r.bytes().ok_or_else(|| corrupt(&placeholder, "name truncated"))?;
        let name = String::from_utf8(name_bytes.to_vec()).map_err(|_| corrupt(&placeholder, "name is not UTF-8"))?;
        let ndims = r.u32().ok_or_else(|| corrupt(&name, "shape truncated"))?;
        let mut shape = Vec::with_capacity(ndims.min(8));
        for _ in 0..ndims {
            shape.push(r.u32().ok_or_else(|| corrupt(&name, "shape truncated"))?);
        }
        let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| corrupt(&name, "shape overflows"))?;
        let payload =
            len.checked_mul(4).and_then(|n| r.take(n)).ok_or_else(|| corrupt(&name, &format!("payload shorter than shape {shape:?}")))?;
        let data = payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        tensors.push((name, shape, data));
    }
    if !r.buf.is_empty() {
        return Err(CorruptTensor { name: "<end>".into(), message: format!("{} trailing byte(s)", r.buf.len()) });
    }
    let as_corrupt = |e: ciupath_core::NeuralError| match e {
        ciupath_core::NeuralError::Tensor { name, message } => CorruptTensor { name, message },
        other => CorruptTensor { name: "<model>".into(), message: other.to_string() },
    };

    match pooling.as_str() {
        "builtin" => {
            let vocab = Vocab::from_tokens(tokens);
            let model = Model::from_tensors(tensors, config.dropout).map_err(as_corrupt)?;
            if model.vocab_size() != vocab.len() {
                return Err(CorruptTensor {
                    name: "encoder.embedding".into(),
                    message: format!("{} rows for a vocabulary of {}", model.vocab_size(), vocab.len()),
                });
            }
            Ok(Checkpoint::Builtin(Tagger { vocab, model, config }))
        }
        "external" => {
            let mut weight = None;
            let mut bias = None;
            for (name, shape, data) in tensors {
                match (name.as_str(), shape.as_slice()) {
                    ("head.weight", &[r, c]) => weight = Matrix::from_vec(r, c, data),
                    ("head.bias", &[_]) => bias = Some(data),
                    _ => return Err(CorruptTensor { name, message: "unexpected tensor in head-only checkpoint".into() }),
                }
            }
            let weight = weight.ok_or_else(|| CorruptTensor { name: "head.weight".into(), message: "missing".into() })?;
            let bias = bias.ok_or_else(|| CorruptTensor { name: "head.bias".into(), message: "missing".into() })?;
            HeadTagger::from_parts(weight, bias, config).map(Checkpoint::External).map_err(as_corrupt)
        }
        other => Err(Config(ciupath_core::NeuralError::InvalidConfig(format!("unknown pooling `{other}`")))),
    }
}

pub fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    write(path, checkpoint_to_bytes(c))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_bytes(&bytes).at(path)
}
