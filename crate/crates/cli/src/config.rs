//! Experiment configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use perpred_core::data::CsvSchema;
use perpred_core::listlearn::ListLearnConfig;
use perpred_core::synth::{LabelRule, Marginal, NoisePlacement, NoiseRegion, SyntheticSpec};
use perpred_core::{normalize, SparseLinearClassifier, Vector, WellBehavedParams};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Gen,
    Listlearn,
    Refclass,
    Predict,
    Evaluate,
}

/// The experiment configuration. The `task` field is optional in the file;
/// when present it must match the subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub data: DataSource,
    #[serde(default)]
    pub list: ListSettings,
    #[serde(default)]
    pub refclass: RefClassSettings,
    #[serde(default)]
    pub predict: PredictSettings,
    #[serde(default)]
    pub evaluate: EvaluateSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<QuerySpec>,
    /// Sample count for `gen` and synthetic sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        schema: CsvSchema,
        /// Center and scale features (on by default; the train/test split
        /// always computes the transform on the training part only).
        #[serde(default = "default_true")]
        standardize: bool,
    },
    Synthetic {
        spec: SyntheticSettings,
        n: usize,
    },
}

/// Synthetic instance description; the master seed drives the draw.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSettings {
    pub dim: usize,
    pub marginal: Marginal,
    pub planted_normal: Vec<f64>,
    /// `(index, weight)` terms of the planted sparse classifier.
    pub planted_terms: Vec<(usize, f64)>,
    #[serde(default = "default_sparsity")]
    pub sparsity: usize,
    #[serde(default)]
    pub noise_rate: f64,
    #[serde(default)]
    pub noise_region: NoiseRegion,
    #[serde(default)]
    pub noise_placement: NoisePlacement,
    #[serde(default)]
    pub label_rule: LabelRule,
}

fn default_sparsity() -> usize {
    2
}

fn default_true() -> bool {
    true
}

impl SyntheticSettings {
    pub fn to_spec(&self, seed: u64) -> Result<SyntheticSpec, CliError> {
        let normal = Vector::new(self.planted_normal.clone())
            .and_then(|v| normalize(&v))
            .map_err(|e| CliError::Config(format!("planted_normal: {e}")))?;
        let classifier = SparseLinearClassifier::new(self.planted_terms.clone(), self.sparsity)
            .map_err(|e| CliError::Config(format!("planted_terms: {e}")))?;
        let mut spec = SyntheticSpec::new(
            self.dim,
            self.marginal,
            normal,
            classifier,
            self.noise_rate,
            seed,
        )
        .map_err(|e| CliError::Config(format!("synthetic spec: {e}")))?;
        spec.noise_region = self.noise_region;
        spec.noise_placement = self.noise_placement;
        spec.label_rule = self.label_rule;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ListSettings {
    pub sparsity: usize,
    pub bit_budget: u32,
    pub subsample_size: usize,
    pub dedup_tolerance: f64,
}

impl Default for ListSettings {
    fn default() -> Self {
        Self {
            sparsity: 2,
            bit_budget: 8,
            subsample_size: 64,
            dedup_tolerance: 1e-9,
        }
    }
}

impl ListSettings {
    pub fn to_config(&self, seed: u64) -> Result<ListLearnConfig, CliError> {
        let mut cfg = ListLearnConfig::new(self.sparsity, self.bit_budget, self.subsample_size, seed)
            .map_err(|e| CliError::Config(format!("list settings: {e}")))?;
        cfg.dedup_tolerance = self.dedup_tolerance;
        cfg.validate()
            .map_err(|e| CliError::Config(format!("list settings: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RefClassSettings {
    pub epsilon: f64,
    pub delta: f64,
    pub sample_multiplier: f64,
    /// Fraction of the data held out to score the visited normals.
    pub validation_fraction: f64,
    /// Distribution constants; when absent they come from the synthetic
    /// marginal, or default to the unit Gaussian's on standardized data.
    pub params: Option<WellBehavedParams>,
}

impl Default for RefClassSettings {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            delta: 0.1,
            sample_multiplier: 1.0,
            validation_fraction: 0.25,
            params: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictSettings {
    /// Assumed optimal conditional error fed to the reference-class budget.
    pub opt: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// 0 means a 20% held-out selection split.
    pub selection_size: usize,
    /// 0 means no cap on the candidate loop.
    pub max_candidates: usize,
}

impl Default for PredictSettings {
    fn default() -> Self {
        Self {
            opt: 0.05,
            epsilon: 0.3,
            delta: 0.1,
            selection_size: 0,
            max_candidates: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateSettings {
    pub train_fraction: f64,
    /// One trial per seed; empty means a single trial on the master seed.
    pub seeds: Vec<u64>,
    /// Sample count for synthetic sources outside `evaluate` (which carries
    /// its own `n` in the data source).
    pub n: Option<usize>,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        Self {
            train_fraction: 2.0 / 3.0,
            seeds: Vec::new(),
            n: None,
        }
    }
}

/// Query point: raw coordinates (post-encoding space for CSV sources) or a
/// row index into the loaded dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let DataSource::Csv { path, .. } = &self.data {
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "data file {} does not exist",
                    path.display()
                )));
            }
        }
        if let Some(q) = &self.query {
            match (&q.coords, &q.index) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(CliError::Config(
                        "query must set exactly one of coords or index".into(),
                    ))
                }
                _ => {}
            }
        }
        if !(self.evaluate.train_fraction > 0.0 && self.evaluate.train_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "train_fraction must be in (0,1), got {}",
                self.evaluate.train_fraction
            )));
        }
        Ok(())
    }

    /// Seeds to run one trial each; defaults to the master seed.
    pub fn trial_seeds(&self) -> Vec<u64> {
        if self.evaluate.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.evaluate.seeds.clone()
        }
    }
}
