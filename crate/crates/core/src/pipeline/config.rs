use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classifier::{FeatureSpec, TrainConfig};
use crate::error::{Error, Result};
use crate::evaluation::AsoConfig;
use crate::generate::{GenerateOptions, GenerationBackend, GenerationParams, HttpBackend, HttpBackendConfig, MockBackend, PromptMode};
use crate::util::sha256_hex;

/// How the final training set is assembled from the gold sample and the
/// synthetic pools.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Gold sample only.
    None,
    /// Gold sample repeated up to the augmented size.
    Oversample,
    Eda,
    #[serde(rename = "gen")]
    Generated,
    /// Half EDA, half generated.
    Mix,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::None,
        Strategy::Oversample,
        Strategy::Eda,
        Strategy::Generated,
        Strategy::Mix,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Oversample => "oversample",
            Strategy::Eda => "eda",
            Strategy::Generated => "gen",
            Strategy::Mix => "mix",
        }
    }

    pub fn needs_eda(self) -> bool {
        matches!(self, Strategy::Eda | Strategy::Mix)
    }

    pub fn needs_generated(self) -> bool {
        matches!(self, Strategy::Generated | Strategy::Mix)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}` (none, oversample, eda, gen, mix)")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    #[default]
    Mock,
    Http(HttpBackendConfig),
}

impl BackendConfig {
    pub fn build(&self) -> Box<dyn GenerationBackend> {
        match self {
            BackendConfig::Mock => Box::new(MockBackend),
            BackendConfig::Http(cfg) => Box::new(HttpBackend::new(cfg.clone())),
        }
    }

    pub fn id(&self) -> String {
        match self {
            BackendConfig::Mock => MockBackend.id(),
            BackendConfig::Http(cfg) => format!("http:{}", cfg.model),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Raw per-annotator CSV; when set, `ingest` aggregates it into the corpus.
    pub annotations: Option<PathBuf>,
    /// Aggregated corpus (JSON lines); used when `annotations` is unset.
    pub gold: Option<PathBuf>,
    /// Evaluation corpus. Without it each fold is evaluated on the corpus
    /// posts outside its gold sample.
    pub eval: Option<PathBuf>,
    pub hatecheck: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSizes {
    pub eda: usize,
    pub generated: usize,
}

impl Default for MixtureSizes {
    fn default() -> Self {
        MixtureSizes {
            eda: 15_000,
            generated: 15_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdaSettings {
    pub alpha: f64,
    pub deletion_p: Option<f64>,
}

impl Default for EdaSettings {
    fn default() -> Self {
        EdaSettings {
            alpha: 0.1,
            deletion_p: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub gold_sample_n: usize,
    pub generation_total: usize,
    pub cap_per_label: usize,
    pub eda_total: usize,
    pub mixture: MixtureSizes,
    /// One fold per seed.
    pub seeds: Vec<u64>,
    pub prompt_mode: PromptMode,
    pub with_target: bool,
    pub backend: BackendConfig,
    pub generation: GenerationParams,
    pub generate_options: GenerateOptions,
    pub eda: EdaSettings,
    pub features: FeatureSpec,
    pub filter_training: TrainConfig,
    pub downstream_training: TrainConfig,
    pub strategies: Vec<Strategy>,
    pub aso: AsoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: PathsConfig {
                out_dir: PathBuf::from("out"),
                ..Default::default()
            },
            gold_sample_n: 1000,
            generation_total: 100_000,
            cap_per_label: 15_000,
            eda_total: 30_000,
            mixture: MixtureSizes::default(),
            seeds: vec![522, 97, 709, 16, 42],
            prompt_mode: PromptMode::FinetuneExport,
            with_target: true,
            backend: BackendConfig::Mock,
            generation: GenerationParams::default(),
            generate_options: GenerateOptions::default(),
            eda: EdaSettings::default(),
            features: FeatureSpec::default(),
            filter_training: TrainConfig::filter_default(),
            downstream_training: TrainConfig::downstream_default(),
            strategies: Strategy::ALL.to_vec(),
            aso: AsoConfig::default(),
        }
    }
}

impl RunConfig {
    /// Read a TOML or JSON config, picked by extension (TOML otherwise).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        if self.gold_sample_n == 0 {
            return Err(Error::Config("gold_sample_n must be positive".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".into()));
        }
        if !self.eda_total.is_multiple_of(4) {
            return Err(Error::Config(format!("eda_total {} must be divisible by 4", self.eda_total)));
        }
        if self.strategies.contains(&Strategy::Mix)
            && self.mixture.eda + self.mixture.generated != self.eda_total {
                return Err(Error::Config(format!(
                    "mixture sizes {} + {} must sum to eda_total {}",
                    self.mixture.eda, self.mixture.generated, self.eda_total
                )));
            }
        self.generation.validate()?;
        self.features.validate()?;
        self.filter_training.validate()?;
        self.downstream_training.validate()?;
        self.aso.validate()
    }

    /// Digest of everything that influences stage outputs. The output
    /// directory is excluded so relocated runs stay comparable.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.paths.out_dir = PathBuf::new();
        sha256_hex(serde_json::to_string(&c).expect("config serializes").as_bytes())
    }

    /// Apply a `dotted.key=value` override. The value is read as JSON when
    /// it parses, otherwise as a string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut tree = serde_json::to_value(&*self)?;
        let mut node = &mut tree;
        let parts: Vec<&str> = key.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("`{key}`: `{part}` is not inside a table")))?;
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
        }
        *self = serde_json::from_value(tree).map_err(|e| Error::Config(format!("override `{assignment}`: {e}")))?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}
