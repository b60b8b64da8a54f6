use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribute::{AttributionConfig, Selector};
use crate::error::{Result, WrapError};
use crate::explain::Policy;
use crate::models::{LogRegParams, ModelSpec};
use crate::synth::SynthConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowSet {
    Train,
    Valid,
    #[default]
    Test,
    All,
}

impl std::str::FromStr for RowSet {
    type Err = WrapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(RowSet::Train),
            "valid" => Ok(RowSet::Valid),
            "test" => Ok(RowSet::Test),
            "all" => Ok(RowSet::All),
            _ => Err(WrapError::Config(format!("unknown row set {s:?} (train, valid, test, all)"))),
        }
    }
}

/// Everything a command may need. Loaded from JSON, then overridden field
/// by field from the command line.
///
/// `seed` is the single source of randomness: it drives the split, L-means
/// initialization, synthetic data and the PCA start vectors, and overrides
/// any seed inside `model` or `synth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub model_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub baseline: Option<PathBuf>,
    pub attribution_file: Option<PathBuf>,

    pub seed: u64,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub model: ModelSpec,
    pub logit_transform: bool,
    /// Parameters of the logistic regression behind `logit_transform`.
    pub logit: LogRegParams,

    pub rows: RowSet,
    pub limit: Option<usize>,
    pub policy: Policy,
    pub m: usize,

    pub attribution: AttributionConfig,
    pub selector: Option<Selector>,
    pub verify: bool,
    pub workers: Option<usize>,
    pub timings: bool,

    pub n_classes: Option<u32>,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            queries: None,
            model_file: None,
            out: None,
            summary: None,
            predictions: None,
            baseline: None,
            attribution_file: None,
            seed: 42,
            split: [0.7, 0.2, 0.1],
            model: ModelSpec::knn(),
            logit_transform: false,
            logit: LogRegParams::default(),
            rows: RowSet::Test,
            limit: None,
            policy: Policy::CaseI,
            m: 3,
            attribution: AttributionConfig::default(),
            selector: None,
            verify: true,
            workers: None,
            timings: false,
            n_classes: None,
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| WrapError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| WrapError::Config(format!("{}: {e}", path.display())))
    }

    /// The model spec with the run seed applied.
    pub fn model_spec(&self) -> ModelSpec {
        let mut spec = self.model.clone();
        if let ModelSpec::Lmeans(p) = &mut spec {
            p.seed = self.seed;
        }
        spec
    }
}
