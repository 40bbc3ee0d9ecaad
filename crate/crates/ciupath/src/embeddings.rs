//! Pooled sentence vectors from an external encoder, keyed by the
//! space-joined token sequence.
//!
//! ```text
//! "CIUEMBD\0" | u32 version | u32 dim | u32 count
//! count × (u32 len | key | dim × f32)
//! ```

use std::collections::HashMap;
use std::path::Path;

use ciupath_core::neural::PooledProvider;
use ciupath_core::NeuralError;

use crate::error::{write, Error, Result};

pub const MAGIC: &[u8; 8] = b"CIUEMBD\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalEmbeddings {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

pub fn embedding_key<S: AsRef<str>>(tokens: &[S]) -> String {
    tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ")
}

impl ExternalEmbeddings {
    pub fn new(dim: usize) -> Self {
        ExternalEmbeddings { dim, vectors: HashMap::new() }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert<S: AsRef<str>>(&mut self, tokens: &[S], vector: Vec<f32>) -> Result<(), NeuralError> {
        if vector.len() != self.dim {
            return Err(NeuralError::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        self.vectors.insert(embedding_key(tokens), vector);
        Ok(())
    }

    /// Serialized form with records sorted by key.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        for v in [VERSION, self.dim as u32, keys.len() as u32] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for k in keys {
            out.extend_from_slice(&(k.len() as u32).to_le_bytes());
            out.extend_from_slice(k.as_bytes());
            self.vectors[k].iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, String> {
        let mut pos = 0usize;
        let mut take = |n: usize, what: &str| -> Result<&[u8], String> {
            let end = pos.checked_add(n).filter(|&e| e <= buf.len()).ok_or_else(|| format!("truncated in {what}"))?;
            let s = &buf[pos..end];
            pos = end;
            Ok(s)
        };
        if take(8, "magic")? != MAGIC {
            return Err("not an embeddings file (bad magic bytes)".into());
        }
        let mut u32_at = |what: &str| take(4, what).map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize);
        let version = u32_at("header")?;
        if version != VERSION as usize {
            return Err(format!("unsupported embeddings version {version} (expected {VERSION})"));
        }
        let dim = u32_at("header")?;
        let count = u32_at("header")?;
        let mut out = ExternalEmbeddings::new(dim);
        for i in 0..count {
            let what = format!("record {i}");
            let len = take(4, &what).map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)?;
            let key = std::str::from_utf8(take(len, &what)?).map_err(|_| format!("{what}: key is not UTF-8"))?.to_string();
            let payload = take(dim.checked_mul(4).ok_or("dimension overflows")?, &what)?;
            let v = payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
            if out.vectors.insert(key.clone(), v).is_some() {
                return Err(format!("{what}: duplicate key `{key}`"));
            }
        }
        if pos != buf.len() {
            return Err(format!("{} trailing byte(s)", buf.len() - pos));
        }
        Ok(out)
    }
}

impl PooledProvider for ExternalEmbeddings {
    fn dim(&self) -> usize {
        self.dim
    }

    fn pooled(&self, tokens: &[String]) -> Result<Vec<f32>, NeuralError> {
        let key = embedding_key(tokens);
        self.vectors.get(&key).cloned().ok_or(NeuralError::MissingKey(key))
    }
}

pub fn load_external_embeddings(path: &Path) -> Result<ExternalEmbeddings> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    ExternalEmbeddings::from_bytes(&bytes).map_err(|m| Error::file(path, m))
}

pub fn save_external_embeddings(path: &Path, e: &ExternalEmbeddings) -> Result<()> {
    write(path, e.to_bytes())
}
