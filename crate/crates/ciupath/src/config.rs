//! Optional `--config` TOML file. Command-line flags override its values.
//!
//! ```toml
//! [paths]
//! map = "coordinates.tsv"
//! dictionary = "dictionary.txt"
//!
//! [train]        # any checkpoint config key
//! epochs = 40
//! lr_encoder = 3e-3
//!
//! [eval]
//! folds = 5
//! seed = 7
//!
//! [synth]
//! speakers = 200
//! sentences = 10
//! seed = 7
//! spec = "templates.toml"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ciupath_core::neural::TrainConfig;
use ciupath_core::synth::TemplateSpec;
use serde::Deserialize;

use crate::error::{read_to_string, Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub train: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub synth: SynthSection,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub map: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub folds: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub speakers: Option<usize>,
    pub sentences: Option<usize>,
    pub seed: Option<u64>,
    pub spec: Option<PathBuf>,
}

impl RunConfig {
    /// Parses the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(&read_to_string(path)?).map_err(|e| Error::file(path, e.message()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.paths.map, &mut cfg.paths.dictionary, &mut cfg.paths.checkpoint, &mut cfg.paths.embeddings, &mut cfg.synth.spec]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Applies the `[train]` table on top of `base`.
    pub fn train_config(&self, base: TrainConfig) -> Result<TrainConfig> {
        let mut cfg = base;
        for (key, value) in &self.train {
            let text = match value {
                toml::Value::String(s) => s.clone(),
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                other => return Err(Error::Config(format!("[train] {key}: unsupported value `{other}`"))),
            };
            cfg.set(key, &text).map_err(|e| Error::Config(format!("[train] {e}")))?;
        }
        Ok(cfg)
    }
}

/// Reads a TOML template spec; missing keys keep their defaults.
pub fn load_template_spec(path: &Path) -> Result<TemplateSpec> {
    let spec: TemplateSpec = toml::from_str(&read_to_string(path)?).map_err(|e| Error::file(path, e.message()))?;
    spec.validate().map_err(|e| Error::file(path, e))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[paths]\nmap = \"m.tsv\"\n[train]\nepochs = 3\nlr_encoder = 0.003\n[eval]\nfolds = 4\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.paths.map, Some(dir.path().join("m.tsv")));
        assert_eq!(cfg.eval.folds, Some(4));
        let t = cfg.train_config(TrainConfig::default()).unwrap();
        assert_eq!((t.epochs, t.lr_encoder), (3, 0.003));
    }

    #[test]
    fn rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[eval]\nfoldz = 4\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
        std::fs::write(&path, "[train]\nnope = 1\n").unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert!(cfg.train_config(TrainConfig::default()).is_err());
    }

    #[test]
    fn template_spec_partial_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.toml");
        std::fs::write(&path, "seed = 11\nmax_cius = 2\n").unwrap();
        let spec = load_template_spec(&path).unwrap();
        assert_eq!((spec.seed, spec.max_cius), (11, 2));
        assert_eq!(spec.templates, TemplateSpec::default().templates);
    }
}
