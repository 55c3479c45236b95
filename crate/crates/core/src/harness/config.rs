//! Experiment configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluate::DEFAULT_QUANTILES;
use super::extraction::AnnotationPaths;
use crate::calibration::{DEFAULT_BEAM_WIDTH, DEFAULT_BINS};
use crate::corpus::{DatasetSchema, SplitPlan, Task, FEWSHOT_FRACTIONS};
use crate::extract::Method;
use crate::metrics::BinningScheme;
use crate::{Error, Result};

/// How predictions are produced for an experiment cell.
///
/// `{"builtin": "regex"}` runs a rule-based extractor in-process.
/// `{"command": "..."}` runs a shell command after substituting `{train}`,
/// `{test}`, `{out}`, `{manifest}` and `{type}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunnerConfig {
    Builtin(Method),
    Command(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    /// Column mapping; defaults to `id`, `text` and one column per victim
    /// type used by the experiment's tasks.
    #[serde(default)]
    pub schema: Option<DatasetSchema>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        let plan = SplitPlan::default();
        SplitFractions {
            train: plan.train,
            dev: plan.dev,
            test: plan.test,
        }
    }
}

fn default_fractions() -> Vec<f64> {
    FEWSHOT_FRACTIONS.to_vec()
}

fn default_scheme() -> String {
    "four-bin".into()
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_beam_width() -> usize {
    DEFAULT_BEAM_WIDTH
}

fn default_quantiles() -> Vec<f64> {
    DEFAULT_QUANTILES.to_vec()
}

/// A few-shot or out-of-distribution experiment.
///
/// Relative paths are resolved against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_beam_width")]
    pub beam_width: usize,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    /// Treat generated answers as correct when they fall in the gold count's
    /// class rather than only on exact match.
    #[serde(default)]
    pub class_correctness: bool,
    #[serde(default)]
    pub drop_zero: bool,
    pub datasets: BTreeMap<String, DatasetConfig>,
    pub tasks: Vec<Task>,
    pub runner: RunnerConfig,
    #[serde(default)]
    pub annotations: AnnotationPaths,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Results cache; the `VCOUNT_CACHE_DIR` environment variable is used
    /// when unset.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

fn resolve(base: &Path, path: &mut PathBuf) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

impl ExperimentConfig {
    pub fn from_json(raw: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(raw).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&raw)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for dataset in self.datasets.values_mut() {
            resolve(base, &mut dataset.path);
        }
        for path in [
            &mut self.annotations.parses,
            &mut self.annotations.frames,
            &mut self.lexicon,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, path);
        }
        if let Some(dir) = &mut self.cache_dir {
            resolve(base, dir);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("experiment names no task".into()));
        }
        for task in &self.tasks {
            if !self.datasets.contains_key(&task.dataset) {
                return Err(Error::Config(format!("task `{task}` names an unknown dataset")));
            }
        }
        if self.fractions.is_empty() {
            return Err(Error::Config("experiment names no few-shot fraction".into()));
        }
        self.split_plan().validate()?;
        for &f in &self.fractions {
            self.split_plan().with_fewshot(f).validate()?;
        }
        self.binning_scheme()?;
        if self.bins == 0 || self.beam_width == 0 {
            return Err(Error::Config("bins and beam_width must be at least 1".into()));
        }
        if self.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::Config("quantiles must lie in [0, 1]".into()));
        }
        if let RunnerConfig::Command(template) = &self.runner {
            if !template.contains("{out}") {
                return Err(Error::Config("runner command must contain `{out}`".into()));
            }
        }
        Ok(())
    }

    pub fn split_plan(&self) -> SplitPlan {
        SplitPlan {
            seed: self.seed,
            train: self.split.train,
            dev: self.split.dev,
            test: self.split.test,
            fewshot_fraction: 1.0,
        }
    }

    pub fn binning_scheme(&self) -> Result<BinningScheme> {
        BinningScheme::by_name(&self.scheme)
    }

    /// Column mapping for `dataset`.
    pub fn schema_for(&self, dataset: &str) -> Result<DatasetSchema> {
        let config = self
            .datasets
            .get(dataset)
            .ok_or_else(|| Error::Config(format!("unknown dataset `{dataset}`")))?;
        Ok(match &config.schema {
            Some(schema) => schema.clone(),
            None => {
                let types: Vec<_> = self
                    .tasks
                    .iter()
                    .filter(|t| t.dataset == dataset)
                    .map(|t| t.victim_type.clone())
                    .collect();
                DatasetSchema::simple(&types)
            }
        })
    }
}
