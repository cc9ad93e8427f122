//! Classification metrics, HateCheck diagnostics, ASO significance testing
//! and inter-annotator agreement.

mod agreement;
mod aso;
mod hatecheck;
mod metrics;

pub use agreement::{alpha_nominal, krippendorff_alpha_nominal, AnnotationJudgment, Dimension};
pub use aso::{aso_epsilon, aso_matrix, aso_min_epsilon, AsoComparison, AsoConfig, AsoResult, Epsilon};
pub use hatecheck::{
    hatecheck_evaluate, parse_hatecheck, parse_target_ident, read_hatecheck, BucketScore, FunctionalityScore,
    HateCheckCase, HateCheckIdent, HateCheckReport, TARGET_MAP,
};
pub use metrics::{
    dataset_digest, evaluate, f1_scores, per_target_hate_f1, predict_all, ConfusionCounts, EvalReport, F1Scores,
    RunMeta,
};
