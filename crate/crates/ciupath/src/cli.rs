//! Subcommand definitions and dispatch.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use ciupath_core::chat::{parse_chat_with, ChatOptions, DEFAULT_PARTICIPANT_TIER};
use ciupath_core::graph::sequence_features;
use ciupath_core::neural::{train, train_head, TrainConfig, TrainLog};
use ciupath_core::stats::{run_full_eval, EvalConfig, FoldTagger, GoldTagger, NeuralFoldTagger};
use ciupath_core::synth::{generate_corpus, TemplateSpec};
use ciupath_core::{parse_ciu_name, CiuDictionary, CiuId, CiuSequence, CoordinateMap, LabeledSentence, SpeakerInfo, Transcript};

use crate::builtin;
use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::config::{load_template_spec, RunConfig};
use crate::dataset::{read_dataset, read_manifest, read_sequences, write_dataset, write_manifest, write_sequences};
use crate::embeddings::load_external_embeddings;
use crate::embeddings::ExternalEmbeddings;
use crate::error::{read_to_string, write, AtPath, Error, Result};
use crate::features::write_features;
use crate::report::{write_report, RunInfo};

pub const VERSION: &str =
    concat!(env!("CARGO_PKG_VERSION"), " (checkpoint format 1, embeddings format 1, jsonl records 1, report bundle 1)");

#[derive(Debug, Parser)]
#[command(name = "ciupath", version = VERSION, about = "CIU extraction, ordering and spatio-semantic evaluation")]
pub struct Cli {
    /// TOML file with [paths], [train], [eval] and [synth] defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic corpus with its speaker manifest.
    Synth(SynthArgs),
    /// Convert CHAT transcripts into a labeled dataset.
    Parse(ParseArgs),
    /// Train a tagger and write a checkpoint plus a loss log.
    Train(TrainCmd),
    /// Tag transcripts or dataset sentences with CIU sequences.
    Tag(TagArgs),
    /// Compute the spatio-semantic feature table from CIU sequences.
    Features(FeaturesArgs),
    /// Cross-validated evaluation writing the report bundle.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Overrides the template spec seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of speakers [default: 100].
    #[arg(long)]
    pub speakers: Option<usize>,
    /// Sentences per speaker [default: 10].
    #[arg(long)]
    pub sentences: Option<usize>,
    /// TOML template spec; keys left out keep the built-in defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a speaker manifest from the `@ID` lines.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_PARTICIPANT_TIER)]
    pub tier: String,
    /// Dependent tier holding CIU labels: sentences separated by `|`, names
    /// by `,`. Utterances without it get empty labels.
    #[arg(long, default_value = "ciu")]
    pub annotation: String,
}

/// Flags overriding individual training settings.
#[derive(Debug, Default, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr_encoder: Option<f64>,
    #[arg(long)]
    pub lr_head: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Any config key, e.g. `--set blocks=1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Loss log path [default: checkpoint path with `.log.csv` extension].
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Train only the head on externally pooled sentence vectors.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaggerKind {
    Neural,
    Dict,
}

#[derive(Debug, Args)]
pub struct TagArgs {
    /// CHAT transcripts, or `.jsonl` datasets whose sentences are tagged per
    /// speaker in file order.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub tagger: TaggerKind,
    #[arg(long, required_if_eq("tagger", "dict"))]
    pub dictionary: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Pooled vectors for a head-only checkpoint.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_PARTICIPANT_TIER)]
    pub tier: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// CIU sequences as written by `tag`.
    #[arg(long, conflicts_with = "data")]
    pub sequences: Option<PathBuf>,
    /// Labeled dataset; features of the gold sequences.
    #[arg(long, required_unless_present = "sequences")]
    pub data: Option<PathBuf>,
    /// Coordinate map [default: bundled Cookie Theft map].
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Dictionary for the baseline arm [default: bundled starter dictionary].
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Fold assignment seed; also the training seed unless `--train-seed`
    /// is given [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_seed: Option<u64>,
    /// Fill the neural arm with the gold labels.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => synth(a, &cfg),
        Command::Parse(a) => parse(a),
        Command::Train(a) => train_cmd(a, &cfg),
        Command::Tag(a) => tag(a, &cfg),
        Command::Features(a) => features(a, &cfg),
        Command::Eval(a) => eval(a, &cfg),
    }
}

fn require_files(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            return Err(Error::file(p, "no such file"));
        }
    }
    Ok(())
}

fn train_config(cfg: &RunConfig, args: &TrainArgs, seed: Option<u64>) -> Result<TrainConfig> {
    let mut t = cfg.train_config(TrainConfig::default())?;
    macro_rules! apply {
        ($($field:ident),*) => {$( if let Some(v) = args.$field { t.$field = v; } )*};
    }
    apply!(epochs, batch_size, lr_encoder, lr_head, lambda, dropout, threshold);
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        t.set(k.trim(), v.trim()).map_err(|e| Error::Usage(format!("--set {kv}: {e}")))?;
    }
    if let Some(s) = seed {
        t.seed = s;
    }
    t.validate()?;
    Ok(t)
}

fn load_map(flag: Option<&Path>, cfg: &RunConfig) -> Result<CoordinateMap> {
    match flag.or(cfg.paths.map.as_deref()) {
        Some(p) => CoordinateMap::from_text(&read_to_string(p)?).at(p),
        None => Ok(builtin::coordinate_map()),
    }
}

fn load_dictionary(path: &Path) -> Result<CiuDictionary> {
    CiuDictionary::from_text(&read_to_string(path)?).at(path)
}

fn synth(a: SynthArgs, cfg: &RunConfig) -> Result<()> {
    let mut spec = match a.spec.as_deref().or(cfg.synth.spec.as_deref()) {
        Some(p) => load_template_spec(p)?,
        None => TemplateSpec::default(),
    };
    if let Some(seed) = a.seed.or(cfg.synth.seed) {
        spec.seed = seed;
    }
    let speakers = a.speakers.or(cfg.synth.speakers).unwrap_or(100);
    let sentences = a.sentences.or(cfg.synth.sentences).unwrap_or(10);
    let corpus = generate_corpus(&spec, speakers, sentences)?;
    write_dataset(&a.out.join("dataset.jsonl"), &corpus.sentences)?;
    write_manifest(&a.out.join("manifest.jsonl"), &corpus.speakers)?;
    write(&a.out.join("dictionary.txt"), spec.complete_dictionary()?.to_text())?;
    write(&a.out.join("dictionary_impoverished.txt"), spec.impoverished_dictionary()?.to_text())?;
    let spec_text = toml::to_string(&spec).map_err(|e| Error::Config(format!("template spec: {e}")))?;
    write(&a.out.join("spec.toml"), spec_text)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "unknown".into())
}

fn read_transcript(path: &Path, tier: &str) -> Result<Transcript> {
    let stem = file_stem(path);
    let opts = ChatOptions { participant_tier: tier, default_speaker: &stem };
    parse_chat_with(&read_to_string(path)?, &opts).at(path)
}

/// Parses a `%<annotation>` tier body: one group per sentence separated by
/// `|`, CIU names separated by `,`.
fn parse_annotation(text: &str) -> std::result::Result<Vec<Vec<CiuId>>, String> {
    text.split('|')
        .map(|group| {
            group.split(',').map(str::trim).filter(|n| !n.is_empty()).map(|n| parse_ciu_name(n).map_err(|e| e.to_string())).collect()
        })
        .collect()
}

fn labeled_sentences(path: &Path, t: &Transcript, tier: &str, annotation: &str) -> Result<Vec<LabeledSentence>> {
    let mut out = Vec::new();
    for u in t.tier_utterances(tier) {
        let labels = match u.dependents.iter().find(|(name, _)| name == annotation) {
            Some((_, body)) => {
                let record = |message: String| Error::Record { path: path.to_path_buf(), line: u.line, message };
                let groups = parse_annotation(body).map_err(record)?;
                if groups.len() != u.sentences.len() {
                    return Err(record(format!(
                        "%{annotation} has {} sentence group(s) for {} sentence(s)",
                        groups.len(),
                        u.sentences.len()
                    )));
                }
                groups
            }
            None => vec![Vec::new(); u.sentences.len()],
        };
        for (tokens, labels) in u.sentences.iter().zip(labels) {
            out.push(LabeledSentence::new(t.speaker_id.clone(), tokens.clone(), labels));
        }
    }
    Ok(out)
}

fn parse(a: ParseArgs) -> Result<()> {
    require_files(&a.inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let mut sentences = Vec::new();
    let mut speakers = Vec::new();
    for path in &a.inputs {
        let t = read_transcript(path, &a.tier)?;
        sentences.extend(labeled_sentences(path, &t, &a.tier, &a.annotation)?);
        if a.manifest.is_some() {
            let info = SpeakerInfo::from_transcript(&t)
                .ok_or_else(|| Error::file(path, "@ID line lacks a usable age, gender, education or group"))?;
            speakers.push(info);
        }
    }
    write_dataset(&a.out, &sentences)?;
    if let Some(m) = &a.manifest {
        write_manifest(m, &speakers)?;
    }
    Ok(())
}

fn write_log(path: &Path, log: &TrainLog) -> Result<()> {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in log.epoch_loss.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, l);
    }
    write(path, s)
}

fn train_cmd(a: TrainCmd, cfg: &RunConfig) -> Result<()> {
    let embeddings_path = a.embeddings.as_deref().or(cfg.paths.embeddings.as_deref());
    require_files(&[&a.data])?;
    let config = train_config(cfg, &a.train, a.seed)?;
    let data = read_dataset(&a.data)?;
    let (ckpt, log) = match embeddings_path {
        Some(p) => {
            let provider = load_external_embeddings(p)?;
            let (head, log) = train_head(&data, &provider, &config)?;
            (Checkpoint::External(head), log)
        }
        None => {
            let (tagger, log) = train(&data, &config)?;
            (Checkpoint::Builtin(tagger), log)
        }
    };
    save_checkpoint(&a.out, &ckpt)?;
    let log_path = a.log.unwrap_or_else(|| a.out.with_extension("log.csv"));
    write_log(&log_path, &log)
}

enum Tagging {
    Dict(CiuDictionary),
    Builtin(ciupath_core::neural::Tagger),
    External(ciupath_core::neural::HeadTagger, ExternalEmbeddings),
}

impl Tagging {
    fn tag(&self, tokens: &[String]) -> std::result::Result<Vec<CiuId>, ciupath_core::NeuralError> {
        match self {
            Tagging::Dict(d) => Ok(d.tag_sentence(tokens)),
            Tagging::Builtin(t) => Ok(t.predict(tokens)),
            Tagging::External(h, e) => h.predict(tokens, e),
        }
    }
}

/// Speakers and their sentences from one input file, in file order.
fn input_sentences(path: &Path, tier: &str) -> Result<Vec<(String, Vec<Vec<String>>)>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let mut order: Vec<String> = Vec::new();
        let mut by_speaker: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
        for s in read_dataset(path)? {
            if !by_speaker.contains_key(&s.speaker_id) {
                order.push(s.speaker_id.clone());
            }
            by_speaker.entry(s.speaker_id).or_default().push(s.tokens);
        }
        Ok(order
            .into_iter()
            .map(|id| {
                let s = by_speaker.remove(&id).unwrap_or_default();
                (id, s)
            })
            .collect())
    } else {
        let t = read_transcript(path, tier)?;
        let sentences = t.sentences(tier).map(<[String]>::to_vec).collect();
        Ok(vec![(t.speaker_id, sentences)])
    }
}

fn tag(a: TagArgs, cfg: &RunConfig) -> Result<()> {
    require_files(&a.inputs.iter().map(PathBuf::as_path).collect::<Vec<_>>())?;
    let tagging = match a.tagger {
        TaggerKind::Dict => Tagging::Dict(load_dictionary(a.dictionary.as_deref().expect("enforced by clap"))?),
        TaggerKind::Neural => {
            let path = a
                .checkpoint
                .as_deref()
                .or(cfg.paths.checkpoint.as_deref())
                .ok_or_else(|| Error::Usage("--tagger neural needs --checkpoint".into()))?;
            match load_checkpoint(path)? {
                Checkpoint::Builtin(t) => Tagging::Builtin(t),
                Checkpoint::External(h) => {
                    let e = a
                        .embeddings
                        .as_deref()
                        .or(cfg.paths.embeddings.as_deref())
                        .ok_or_else(|| Error::Usage("head-only checkpoint needs --embeddings".into()))?;
                    Tagging::External(h, load_external_embeddings(e)?)
                }
            }
        }
    };
    let mut rows = Vec::new();
    for path in &a.inputs {
        for (speaker, sentences) in input_sentences(path, &a.tier)? {
            let mut seq = CiuSequence::new();
            for (i, tokens) in sentences.iter().enumerate() {
                let ids = tagging.tag(tokens).map_err(|e| Error::file(path, format!("speaker {speaker}, sentence {}: {e}", i + 1)))?;
                seq.push_sentence(i, &ids);
            }
            rows.push((speaker, seq));
        }
    }
    write_sequences(&a.out, &rows)
}

fn features(a: FeaturesArgs, cfg: &RunConfig) -> Result<()> {
    let map = load_map(a.map.as_deref(), cfg)?;
    let sequences: Vec<(String, Vec<CiuId>)> = match (&a.sequences, &a.data) {
        (Some(p), _) => read_sequences(p)?.into_iter().map(|(id, s)| (id, s.into_ids())).collect(),
        (None, Some(p)) => {
            let mut order: Vec<(String, Vec<CiuId>)> = Vec::new();
            for s in read_dataset(p)? {
                match order.iter_mut().find(|(id, _)| *id == s.speaker_id) {
                    Some((_, seq)) => seq.extend(s.labels),
                    None => order.push((s.speaker_id, s.labels)),
                }
            }
            order
        }
        (None, None) => unreachable!("enforced by clap"),
    };
    let rows: Vec<_> = sequences
        .into_iter()
        .map(|(id, seq)| {
            let f = sequence_features(&seq, &map);
            (id, f)
        })
        .collect();
    write_features(&a.out, &rows)
}

fn eval(a: EvalArgs, cfg: &RunConfig) -> Result<()> {
    require_files(&[&a.data, &a.manifest])?;
    let folds = a.folds.or(cfg.eval.folds).unwrap_or(5);
    let seed = a.seed.or(cfg.eval.seed).unwrap_or(0);
    let train_config = train_config(cfg, &a.train, Some(a.train_seed.unwrap_or(seed)))?;
    let map = load_map(a.map.as_deref(), cfg)?;
    let dictionary = match a.dictionary.as_deref().or(cfg.paths.dictionary.as_deref()) {
        Some(p) => load_dictionary(p)?,
        None => builtin::starter_dictionary(),
    };
    let data = read_dataset(&a.data)?;
    let speakers = read_manifest(&a.manifest)?;
    let eval_cfg = EvalConfig { folds, seed };
    let mut neural = NeuralFoldTagger::new(train_config.clone());
    let tagger: &mut dyn FoldTagger = if a.oracle { &mut GoldTagger } else { &mut neural };
    let report = run_full_eval(&data, &speakers, tagger, &dictionary, &map, &eval_cfg)?;
    let info = RunInfo {
        tagger: if a.oracle { "oracle" } else { "neural" }.into(),
        train_seed: train_config.seed,
        sentences: data.len(),
        train_config: train_config.to_text(),
    };
    write_report(&a.out, &report, &info)
}
