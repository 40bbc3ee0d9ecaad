//! Cross-validated evaluation of the three CIU sources (gold annotation,
//! a trained tagger, the dictionary) on detection, ordering, feature
//! agreement and group separation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::chat::{Group, LabeledSentence, SpeakerInfo};
use crate::ciu::{CiuId, CoordinateMap};
use crate::dictionary::CiuDictionary;
use crate::error::{EvalError, StatsError};
use crate::graph::{sequence_features, Feature, FeatureVector};
use crate::neural::{train, TrainConfig, TrainLog};

use super::align::{levenshtein_align, AlignmentReport};
use super::ancova::{feature_ancova, AncovaResult, Covariate};
use super::cv::{grouped_kfold, FoldSplit};
use super::detection::{detection_report, ClassificationReport, FoldAggregate};
use super::pearson::{pearson_pairwise, Correlation};

/// Produces per-sentence predictions for one fold after fitting on its
/// training sentences.
pub trait FoldTagger {
    fn fit_predict(
        &mut self,
        split: &FoldSplit,
        train: &[&LabeledSentence],
        eval: &[&LabeledSentence],
    ) -> Result<Vec<Vec<CiuId>>, EvalError>;
}

/// Returns the gold labels unchanged.
#[derive(Clone, Copy, Debug, Default)]
pub struct GoldTagger;

impl FoldTagger for GoldTagger {
    fn fit_predict(&mut self, _: &FoldSplit, _: &[&LabeledSentence], eval: &[&LabeledSentence]) -> Result<Vec<Vec<CiuId>>, EvalError> {
        Ok(eval.iter().map(|s| s.labels.clone()).collect())
    }
}

/// Trains a fresh neural tagger per fold.
#[derive(Clone, Debug)]
pub struct NeuralFoldTagger {
    pub config: TrainConfig,
    pub logs: Vec<TrainLog>,
}

impl NeuralFoldTagger {
    pub fn new(config: TrainConfig) -> Self {
        NeuralFoldTagger { config, logs: Vec::new() }
    }
}

impl FoldTagger for NeuralFoldTagger {
    fn fit_predict(
        &mut self,
        _: &FoldSplit,
        train_set: &[&LabeledSentence],
        eval: &[&LabeledSentence],
    ) -> Result<Vec<Vec<CiuId>>, EvalError> {
        let owned: Vec<LabeledSentence> = train_set.iter().map(|s| (*s).clone()).collect();
        let (tagger, log) = train(&owned, &self.config)?;
        self.logs.push(log);
        Ok(eval.iter().map(|s| tagger.predict(&s.tokens)).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arm {
    Gold,
    Neural,
    Dictionary,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::Gold, Arm::Neural, Arm::Dictionary];

    pub fn name(self) -> &'static str {
        match self {
            Arm::Gold => "gold",
            Arm::Neural => "neural",
            Arm::Dictionary => "dictionary",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { folds: 5, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub split: FoldSplit,
    pub neural: ClassificationReport,
    pub dictionary: ClassificationReport,
}

/// One speaker's concatenated CIU sequences per arm.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeakerResult {
    pub speaker_id: String,
    pub fold: usize,
    pub group: Group,
    /// Indexed by [`Arm`].
    pub sequences: [Vec<CiuId>; 3],
    pub features: [FeatureVector; 3],
    pub neural_alignment: AlignmentReport,
    pub dictionary_alignment: AlignmentReport,
}

impl SpeakerResult {
    pub fn sequence(&self, arm: Arm) -> &[CiuId] {
        &self.sequences[arm.index()]
    }

    pub fn features(&self, arm: Arm) -> &FeatureVector {
        &self.features[arm.index()]
    }

    /// Alignment of a predicted arm against gold; `None` for the gold arm.
    pub fn alignment(&self, arm: Arm) -> Option<&AlignmentReport> {
        match arm {
            Arm::Gold => None,
            Arm::Neural => Some(&self.neural_alignment),
            Arm::Dictionary => Some(&self.dictionary_alignment),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PearsonRow {
    pub arm: Arm,
    pub feature: Feature,
    pub result: Result<Correlation, StatsError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AncovaRow {
    pub arm: Arm,
    pub feature: Feature,
    pub result: Result<AncovaResult, StatsError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub folds: Vec<FoldResult>,
    pub neural_detection: FoldAggregate,
    pub dictionary_detection: FoldAggregate,
    /// Sorted by speaker id.
    pub speakers: Vec<SpeakerResult>,
    /// Neural and dictionary features against gold, per feature.
    pub pearson: Vec<PearsonRow>,
    pub ancova: Vec<AncovaRow>,
}

impl EvalReport {
    /// Mean speaker-level sequence error rate over speakers with a non-empty
    /// gold sequence.
    pub fn mean_ser(&self, arm: Arm) -> Option<f64> {
        let rates: Vec<f64> = self.speakers.iter().filter_map(|s| s.alignment(arm)?.error_rate().ok()).collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }

    /// Edit counts summed over speakers.
    pub fn pooled_alignment(&self, arm: Arm) -> AlignmentReport {
        let mut total = AlignmentReport::default();
        for a in self.speakers.iter().filter_map(|s| s.alignment(arm)) {
            total.merge(a);
        }
        total
    }

    /// Mean Pearson r against gold over the features where it is defined.
    pub fn mean_pearson(&self, arm: Arm) -> Option<f64> {
        let rs: Vec<f64> =
            self.pearson.iter().filter(|row| row.arm == arm).filter_map(|row| row.result.as_ref().ok().map(|c| c.r)).collect();
        (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64)
    }

    pub fn detection(&self, arm: Arm) -> Option<&FoldAggregate> {
        match arm {
            Arm::Gold => None,
            Arm::Neural => Some(&self.neural_detection),
            Arm::Dictionary => Some(&self.dictionary_detection),
        }
    }
}

/// Speaker-grouped cross-validation of `tagger` alongside the dictionary
/// baseline, followed by per-speaker alignment, feature extraction,
/// correlation with gold features and ANCOVA per arm. Every speaker in
/// `dataset` needs a `speakers` entry.
pub fn run_full_eval<T: FoldTagger + ?Sized>(
    dataset: &[LabeledSentence],
    speakers: &[SpeakerInfo],
    tagger: &mut T,
    dictionary: &CiuDictionary,
    map: &CoordinateMap,
    cfg: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let info: BTreeMap<&str, &SpeakerInfo> = speakers.iter().map(|s| (s.speaker_id.as_str(), s)).collect();
    if let Some(s) = dataset.iter().find(|s| !info.contains_key(s.speaker_id.as_str())) {
        return Err(EvalError::MissingSpeaker(s.speaker_id.clone()));
    }
    let ids: Vec<&str> = dataset.iter().map(|s| s.speaker_id.as_str()).collect();
    let splits = grouped_kfold(&ids, cfg.folds, cfg.seed)?;

    let dict_pred: Vec<Vec<CiuId>> = dataset.iter().map(|s| dictionary.tag_sentence(&s.tokens)).collect();
    let mut neural_pred: Vec<Vec<CiuId>> = alloc::vec![Vec::new(); dataset.len()];
    let mut fold_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut folds = Vec::with_capacity(splits.len());

    for split in splits {
        let (eval_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| split.is_eval(&dataset[i].speaker_id));
        let train_set: Vec<&LabeledSentence> = train_idx.iter().map(|&i| &dataset[i]).collect();
        let eval_set: Vec<&LabeledSentence> = eval_idx.iter().map(|&i| &dataset[i]).collect();
        let pred = tagger.fit_predict(&split, &train_set, &eval_set)?;
        if pred.len() != eval_set.len() {
            return Err(EvalError::PredictionCount { expected: eval_set.len(), found: pred.len() });
        }
        for (&i, p) in eval_idx.iter().zip(pred) {
            neural_pred[i] = p;
        }
        let gold: Vec<&[CiuId]> = eval_set.iter().map(|s| s.labels.as_slice()).collect();
        let neural = detection_report(&eval_idx.iter().map(|&i| neural_pred[i].as_slice()).collect::<Vec<_>>(), &gold)?;
        let dict = detection_report(&eval_idx.iter().map(|&i| dict_pred[i].as_slice()).collect::<Vec<_>>(), &gold)?;
        fold_of.extend(split.eval.iter().map(|s| (s.clone(), split.fold)));
        folds.push(FoldResult { split, neural, dictionary: dict });
    }

    let mut sequences: BTreeMap<&str, [Vec<CiuId>; 3]> = BTreeMap::new();
    for (i, s) in dataset.iter().enumerate() {
        let entry = sequences.entry(s.speaker_id.as_str()).or_default();
        entry[Arm::Gold.index()].extend_from_slice(&s.labels);
        entry[Arm::Neural.index()].extend_from_slice(&neural_pred[i]);
        entry[Arm::Dictionary.index()].extend_from_slice(&dict_pred[i]);
    }
    let speaker_results: Vec<SpeakerResult> = sequences
        .into_iter()
        .map(|(id, seqs)| {
            let features = core::array::from_fn(|a| sequence_features(&seqs[a], map));
            SpeakerResult {
                speaker_id: String::from(id),
                fold: fold_of[id],
                group: info[id].group,
                neural_alignment: levenshtein_align(&seqs[Arm::Gold.index()], &seqs[Arm::Neural.index()]),
                dictionary_alignment: levenshtein_align(&seqs[Arm::Gold.index()], &seqs[Arm::Dictionary.index()]),
                features,
                sequences: seqs,
            }
        })
        .collect();

    let column = |arm: Arm, f: Feature| -> Vec<Option<f64>> { speaker_results.iter().map(|s| s.features(arm).get(f)).collect() };
    let mut pearson = Vec::new();
    for arm in [Arm::Neural, Arm::Dictionary] {
        for f in Feature::ALL {
            pearson.push(PearsonRow { arm, feature: f, result: pearson_pairwise(&column(arm, f), &column(Arm::Gold, f)) });
        }
    }

    let group: Vec<bool> = speaker_results.iter().map(|s| s.group == Group::Impaired).collect();
    let covariate = |name: &str, get: &dyn Fn(&SpeakerInfo) -> f64| {
        Covariate::new(name, speaker_results.iter().map(|s| get(info[s.speaker_id.as_str()])).collect())
    };
    let base = [covariate("age", &|s| s.age), covariate("gender", &|s| f64::from(s.gender)), covariate("education", &|s| s.education)];
    let mut ancova = Vec::new();
    for arm in Arm::ALL {
        let mut covs = base.to_vec();
        covs.push(Covariate::new(
            Feature::UniqueNodes.name(),
            column(arm, Feature::UniqueNodes).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        ));
        for f in Feature::ALL {
            ancova.push(AncovaRow { arm, feature: f, result: feature_ancova(f, &column(arm, f), &group, &covs) });
        }
    }

    let neural_reports: Vec<ClassificationReport> = folds.iter().map(|f| f.neural.clone()).collect();
    let dict_reports: Vec<ClassificationReport> = folds.iter().map(|f| f.dictionary.clone()).collect();
    Ok(EvalReport {
        config: *cfg,
        neural_detection: FoldAggregate::from_folds(&neural_reports),
        dictionary_detection: FoldAggregate::from_folds(&dict_reports),
        folds,
        speakers: speaker_results,
        pearson,
        ancova,
    })
}
