//! Training configuration, the deterministic mini-batch loop, and inference.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{sigmoid, total_loss_grad};
use super::model::{dropout_mask, ClassifierHead, EncoderConfig, Model};
use super::optim::AdamW;
use super::tensor::{Matrix, Real};
use super::vocab::Vocab;
use crate::chat::{LabeledSentence, Transcript};
use crate::ciu::{CiuId, CiuSequence, NUM_CIUS};
use crate::error::NeuralError;

/// Optimization and inference settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_encoder: f64,
    pub lr_head: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Ranking hinge margin.
    pub margin: f64,
    /// Weight of the ranking loss in the mix.
    pub lambda: f64,
    /// Detection probability threshold.
    pub threshold: f64,
    pub dropout: f64,
    pub seed: u64,
    pub encoder: EncoderConfig,
    /// Tokens seen fewer times than this map to the OOV entry.
    pub min_count: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            lr_encoder: 2e-5,
            lr_head: 1e-3,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            margin: 1.0,
            lambda: 0.1,
            threshold: 0.5,
            dropout: 0.2,
            seed: 0,
            encoder: EncoderConfig::default(),
            min_count: 1,
        }
    }
}

const CONFIG_KEYS: [&str; 17] = [
    "epochs",
    "batch_size",
    "lr_encoder",
    "lr_head",
    "weight_decay",
    "beta1",
    "beta2",
    "eps",
    "margin",
    "lambda",
    "threshold",
    "dropout",
    "seed",
    "dim",
    "blocks",
    "max_positions",
    "min_count",
];

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(self.margin >= 0.0) {
            return bad(format!("margin {} is negative", self.margin));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold {} outside (0, 1)", self.threshold));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if self.encoder.dim == 0 {
            return bad("encoder width must be positive".into());
        }
        for (name, v) in [("lr_encoder", self.lr_encoder), ("lr_head", self.lr_head), ("weight_decay", self.weight_decay)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be a non-negative number"));
            }
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return bad("Adam betas must lie in [0, 1) and eps must be positive".into());
        }
        Ok(())
    }

    /// Canonical `key=value` text, one line per field in a fixed order.
    pub fn to_text(&self) -> String {
        let values: [String; 17] = [
            self.epochs.to_string(),
            self.batch_size.to_string(),
            self.lr_encoder.to_string(),
            self.lr_head.to_string(),
            self.weight_decay.to_string(),
            self.beta1.to_string(),
            self.beta2.to_string(),
            self.eps.to_string(),
            self.margin.to_string(),
            self.lambda.to_string(),
            self.threshold.to_string(),
            self.dropout.to_string(),
            self.seed.to_string(),
            self.encoder.dim.to_string(),
            self.encoder.blocks.to_string(),
            self.encoder.max_positions.to_string(),
            self.min_count.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Parses [`TrainConfig::to_text`] output. Missing keys keep defaults.
    pub fn from_text(text: &str) -> Result<Self, NeuralError> {
        let mut cfg = TrainConfig::default();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) =
                line.split_once('=').ok_or_else(|| NeuralError::InvalidConfig(format!("expected key=value, got `{line}`")))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), NeuralError> {
        fn num<T: core::str::FromStr>(key: &str, v: &str) -> Result<T, NeuralError> {
            v.parse().map_err(|_| NeuralError::InvalidConfig(format!("bad value `{v}` for `{key}`")))
        }
        match key {
            "epochs" => self.epochs = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "lr_encoder" => self.lr_encoder = num(key, value)?,
            "lr_head" => self.lr_head = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "beta1" => self.beta1 = num(key, value)?,
            "beta2" => self.beta2 = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "margin" => self.margin = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "threshold" => self.threshold = num(key, value)?,
            "dropout" => self.dropout = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "dim" => self.encoder.dim = num(key, value)?,
            "blocks" => self.encoder.blocks = num(key, value)?,
            "max_positions" => self.encoder.max_positions = num(key, value)?,
            "min_count" => self.min_count = num(key, value)?,
            _ => return Err(NeuralError::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn optimizer<F: Real>(&self) -> AdamW<F> {
        AdamW::new(self.lr_encoder, self.lr_head, self.beta1, self.beta2, self.eps, self.weight_decay)
    }
}

/// Per-epoch mean training loss.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epoch_loss: Vec<f64>,
    /// Sentences skipped because they had no tokens.
    pub skipped_empty: usize,
}

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_DROPOUT: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Shared epoch/batch driver. `step` trains on one batch of item indices and
/// returns the summed loss of the items it used.
fn fit_loop(
    items: usize,
    cfg: &TrainConfig,
    mut step: impl FnMut(&[usize], &mut ChaCha8Rng) -> Result<f64, NeuralError>,
) -> Result<Vec<f64>, NeuralError> {
    let mut shuffle = stream(cfg.seed, STREAM_SHUFFLE);
    let mut dropout = stream(cfg.seed, STREAM_DROPOUT);
    let mut order: Vec<usize> = (0..items).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            let loss = step(batch, &mut dropout)?;
            if !loss.is_finite() {
                return Err(NeuralError::NonFiniteLoss { epoch, batch: batch_no });
            }
            total += loss;
        }
        log.push(total / items as f64);
    }
    Ok(log)
}

struct Prepared {
    indices: Vec<usize>,
    targets: [bool; NUM_CIUS],
    order: Vec<CiuId>,
}

/// A trained tagger: vocabulary, parameters and the configuration used.
#[derive(Clone, Debug, PartialEq)]
pub struct Tagger {
    pub vocab: Vocab,
    pub model: Model<f32>,
    pub config: TrainConfig,
}

/// Trains the encoder and head on labeled sentences.
pub fn train(dataset: &[LabeledSentence], cfg: &TrainConfig) -> Result<(Tagger, TrainLog), NeuralError> {
    cfg.validate()?;
    let usable: Vec<&LabeledSentence> = dataset.iter().filter(|s| !s.tokens.is_empty()).collect();
    if usable.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let vocab = Vocab::build(usable.iter().map(|s| s.tokens.as_slice()), cfg.min_count);
    let items: Vec<Prepared> =
        usable.iter().map(|s| Prepared { indices: vocab.tokenize(&s.tokens), targets: s.targets(), order: s.labels.clone() }).collect();

    let mut model: Model<f32> = Model::init(vocab.len(), &cfg.encoder, cfg.dropout, &mut stream(cfg.seed, STREAM_INIT));
    let mut grads = model.zeros_like();
    let mut opt = cfg.optimizer::<f32>();

    let epoch_loss = fit_loop(items.len(), cfg, |batch, rng| {
        grads.fill_zero();
        let scale = 1.0 / batch.len() as f32;
        let mut total = 0.0;
        for &i in batch {
            let item = &items[i];
            let mask = (cfg.dropout > 0.0).then(|| dropout_mask::<f32, _>(cfg.encoder.dim, cfg.dropout, rng));
            let (logits, cache) = model.forward_with_mask(&item.indices, mask)?;
            let (loss, mut dlogits) = total_loss_grad(&logits, &item.targets, &item.order, cfg.margin, cfg.lambda);
            dlogits.iter_mut().for_each(|g| *g *= scale);
            model.backward(&dlogits, &cache, &mut grads);
            total += loss;
        }
        if total.is_finite() {
            opt.step(&mut model, &grads);
        }
        Ok(total)
    })?;

    let log = TrainLog { epoch_loss, skipped_empty: dataset.len() - usable.len() };
    Ok((Tagger { vocab, model, config: cfg.clone() }, log))
}

/// Selects CIUs with `σ(s) > threshold`, sorted by descending logit; equal
/// logits fall back to ascending CIU code.
pub fn order_predictions<F: Real>(logits: &[F; NUM_CIUS], threshold: f64) -> Vec<CiuId> {
    let mut picked: Vec<(f64, CiuId)> =
        CiuId::all().map(|c| (logits[c.code()].as_f64(), c)).filter(|(s, _)| sigmoid(*s) > threshold).collect();
    picked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    picked.into_iter().map(|(_, c)| c).collect()
}

impl Tagger {
    pub fn logits<S: AsRef<str>>(&self, tokens: &[S]) -> Result<[f32; NUM_CIUS], NeuralError> {
        self.model.logits(&self.vocab.tokenize(tokens))
    }

    /// Detected CIUs of one sentence in predicted narrative order.
    pub fn predict<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<CiuId> {
        match self.logits(tokens) {
            Ok(s) => order_predictions(&s, self.config.threshold),
            Err(_) => Vec::new(),
        }
    }

    pub fn predict_sentences<'a, I, S>(&self, sentences: I) -> CiuSequence
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut seq = CiuSequence::new();
        for (i, tokens) in sentences.into_iter().enumerate() {
            seq.push_sentence(i, &self.predict(tokens));
        }
        seq
    }

    pub fn predict_transcript(&self, transcript: &Transcript, tier: &str) -> CiuSequence {
        self.predict_sentences(transcript.sentences(tier))
    }
}

/// Supplies pooled sentence vectors from an external encoder in place of the
/// built-in one.
pub trait PooledProvider {
    fn dim(&self) -> usize;
    fn pooled(&self, tokens: &[String]) -> Result<Vec<f32>, NeuralError>;
}

/// Classification head trained on externally pooled vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadTagger {
    pub head: ClassifierHead<f32>,
    pub config: TrainConfig,
}

pub fn train_head<P: PooledProvider>(
    dataset: &[LabeledSentence],
    provider: &P,
    cfg: &TrainConfig,
) -> Result<(HeadTagger, TrainLog), NeuralError> {
    cfg.validate()?;
    let usable: Vec<&LabeledSentence> = dataset.iter().filter(|s| !s.tokens.is_empty()).collect();
    if usable.is_empty() {
        return Err(NeuralError::EmptyDataset);
    }
    let d = provider.dim();
    let mut pooled = Vec::with_capacity(usable.len());
    for s in &usable {
        let v = provider.pooled(&s.tokens)?;
        if v.len() != d {
            return Err(NeuralError::DimensionMismatch { expected: d, found: v.len() });
        }
        pooled.push(v);
    }
    // Only the head is used; the encoder group stays empty.
    let mut init = stream(cfg.seed, STREAM_INIT);
    let template: Model<f32> = Model::init(0, &EncoderConfig { dim: d, blocks: 0, max_positions: 0 }, cfg.dropout, &mut init);
    let mut model = template;
    let mut grads = model.zeros_like();
    let mut opt = cfg.optimizer::<f32>();

    let epoch_loss = fit_loop(usable.len(), cfg, |batch, rng| {
        grads.fill_zero();
        let scale = 1.0 / batch.len() as f32;
        let mut total = 0.0;
        for &i in batch {
            let mask = (cfg.dropout > 0.0).then(|| dropout_mask::<f32, _>(d, cfg.dropout, rng));
            let logits = model.head.logits(&pooled[i], mask.as_deref());
            let s = usable[i];
            let (loss, mut dlogits) = total_loss_grad(&logits, &s.targets(), &s.labels, cfg.margin, cfg.lambda);
            dlogits.iter_mut().for_each(|g| *g *= scale);
            model.head.backward(&dlogits, &pooled[i], mask.as_deref(), &mut grads.head);
            total += loss;
        }
        if total.is_finite() {
            opt.step(&mut model, &grads);
        }
        Ok(total)
    })?;

    let log = TrainLog { epoch_loss, skipped_empty: dataset.len() - usable.len() };
    Ok((HeadTagger { head: model.head, config: cfg.clone() }, log))
}

impl HeadTagger {
    pub fn dim(&self) -> usize {
        self.head.weight.cols()
    }

    pub fn predict<P: PooledProvider>(&self, tokens: &[String], provider: &P) -> Result<Vec<CiuId>, NeuralError> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        if provider.dim() != self.dim() {
            return Err(NeuralError::DimensionMismatch { expected: self.dim(), found: provider.dim() });
        }
        let v = provider.pooled(tokens)?;
        if v.len() != self.dim() {
            return Err(NeuralError::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(order_predictions(&self.head.logits(&v, None), self.config.threshold))
    }

    /// Builds a head directly from its weights (e.g. loaded from disk).
    pub fn from_parts(weight: Matrix<f32>, bias: Vec<f32>, config: TrainConfig) -> Result<Self, NeuralError> {
        if weight.rows() != NUM_CIUS || bias.len() != NUM_CIUS {
            return Err(NeuralError::DimensionMismatch { expected: NUM_CIUS, found: weight.rows().min(bias.len()) });
        }
        let dropout = config.dropout;
        Ok(HeadTagger { head: ClassifierHead { weight, bias, dropout }, config })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn logits(pairs: &[(usize, f64)]) -> [f64; NUM_CIUS] {
        let mut s = [-5.0; NUM_CIUS];
        for &(k, v) in pairs {
            s[k] = v;
        }
        s
    }

    fn logit(p: f64) -> f64 {
        libm::log(p / (1.0 - p))
    }

    #[test]
    fn predict_threshold_and_sort() {
        let s = logits(&[(0, logit(0.9)), (1, logit(0.6)), (2, logit(0.2))]);
        assert_eq!(order_predictions(&s, 0.5), vec![CiuId::BOY, CiuId::GIRL]);
        let s = logits(&[(1, logit(0.6)), (0, logit(0.55))]);
        assert_eq!(order_predictions(&s, 0.5), vec![CiuId::GIRL, CiuId::BOY]);
        assert!(order_predictions(&[0.0f64; NUM_CIUS], 0.5).is_empty());
        let s = logits(&[(4, logit(0.8)), (2, logit(0.8))]);
        assert_eq!(order_predictions(&s, 0.5), vec![CiuId::WOMAN, CiuId::OUTSIDE]);
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = TrainConfig::default();
        cfg.seed = 42;
        cfg.lr_encoder = 2e-5;
        cfg.encoder.blocks = 2;
        assert_eq!(TrainConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        assert!(TrainConfig::from_text("nope=1").is_err());
        assert!(TrainConfig::from_text("epochs=x").is_err());
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = TrainConfig::default();
        assert_eq!((cfg.epochs, cfg.lr_encoder, cfg.lr_head), (50, 2e-5, 1e-3));
        assert_eq!((cfg.margin, cfg.lambda, cfg.threshold, cfg.dropout), (1.0, 0.1, 0.5, 0.2));
        cfg.validate().unwrap();
        for (k, v) in [("lambda", "1.5"), ("margin", "-1"), ("threshold", "1"), ("dropout", "1"), ("batch_size", "0")] {
            let mut c = TrainConfig::default();
            c.set(k, v).unwrap();
            assert!(c.validate().is_err(), "{k}={v}");
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        assert_eq!(train(&[], &TrainConfig::default()).unwrap_err(), NeuralError::EmptyDataset);
        let only_empty = [LabeledSentence::new("s", vec![], vec![CiuId::BOY])];
        assert_eq!(train(&only_empty, &TrainConfig::default()).unwrap_err(), NeuralError::EmptyDataset);
    }

    #[test]
    fn non_finite_loss_aborts() {
        let data = [LabeledSentence::new("s", vec!["boy".into()], vec![CiuId::BOY])];
        let mut cfg = TrainConfig::default();
        cfg.lr_head = 1e30;
        cfg.lr_encoder = 1e30;
        cfg.epochs = 20;
        cfg.batch_size = 1;
        cfg.dropout = 0.0;
        assert!(matches!(train(&data, &cfg), Err(NeuralError::NonFiniteLoss { .. })));
    }
}
