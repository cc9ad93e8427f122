//! Stage orchestration: configuration, run manifests and the per-seed
//! sample → augment → filter → mix → train → evaluate flow.

mod config;
mod manifest;
mod stages;

pub use config::{BackendConfig, EdaSettings, MixtureSizes, PathsConfig, RunConfig, Strategy};
pub(crate) use manifest::write_json;
pub use manifest::{manifest_path, RunManifest, StageRecord, MANIFEST_FILE, TIMINGS_FILE};
pub use stages::{
    format_summary, oversample, summarize, AsoReport, HateCheckSummary, MeanStd, Pipeline, RunSummary,
    StrategySummary,
};
