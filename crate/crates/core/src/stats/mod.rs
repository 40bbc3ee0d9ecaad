//! Speaker-grouped cross-validation, detection metrics, sequence alignment,
//! correlation and covariance-adjusted group tests.

mod align;
mod ancova;
mod cv;
mod detection;
mod eval;
mod pearson;
pub mod special;

pub use align::{levenshtein_align, AlignmentRates, AlignmentReport};
pub use ancova::{
    ancova_design, ancova_f, covariates_for, feature_ancova, feature_design, ols, AncovaDesign, AncovaResult, Covariate, OlsFit,
};
pub use cv::{grouped_kfold, FoldSplit};
pub use detection::{detection_report, CiuCounts, ClassificationReport, FoldAggregate, Summary};
pub use eval::{
    run_full_eval, AncovaRow, Arm, EvalConfig, EvalReport, FoldResult, FoldTagger, GoldTagger, NeuralFoldTagger, PearsonRow, SpeakerResult,
};
pub use pearson::{pearson_pairwise, pearson_r, Correlation};
