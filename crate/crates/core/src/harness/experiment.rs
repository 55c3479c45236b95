//! Few-shot curves and out-of-distribution matrices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, RunnerConfig};
use super::evaluate::{evaluate_outputs, gold_counts, parse_model_outputs, CalibrationScore, EvalSettings};
use super::extraction::Annotations;
use super::runner::{run_cached, CellInputs, ResultCache, Runner};
use crate::calibration::{ConfidenceOptions, Correctness};
use crate::corpus::{load_dataset, make_splits, ood_pairs, EventRecord, SplitPlan, Splits, Task};
use crate::extract::LexiconSet;
use crate::metrics::ScoreReport;
use crate::{Error, Result};

/// Loaded inputs shared by every cell of an experiment.
#[derive(Debug)]
pub struct ExperimentContext {
    pub plan: SplitPlan,
    pub fractions: Vec<f64>,
    pub settings: EvalSettings,
    pub runner: Runner,
    pub cache: Option<ResultCache>,
    /// Scratch directory for command runners.
    pub workdir: PathBuf,
    datasets: BTreeMap<String, Vec<EventRecord>>,
}

impl ExperimentContext {
    pub fn new(config: &ExperimentConfig, workdir: &Path) -> Result<Self> {
        config.validate()?;
        let mut datasets = BTreeMap::new();
        for (name, dataset) in &config.datasets {
            let schema = config.schema_for(name)?;
            datasets.insert(name.clone(), load_dataset(&dataset.path, &schema, config.drop_zero)?);
        }
        let runner = match &config.runner {
            RunnerConfig::Builtin(method) => Runner::Builtin {
                method: *method,
                lexicons: match &config.lexicon {
                    Some(path) => LexiconSet::from_file(path)?,
                    None => LexiconSet::defaults(),
                },
                annotations: Annotations::load(
                    config.annotations.parses.as_deref(),
                    config.annotations.frames.as_deref(),
                )?,
            },
            RunnerConfig::Command(template) => Runner::Command {
                template: template.clone(),
            },
        };
        let cache = match &config.cache_dir {
            Some(dir) => Some(ResultCache::new(dir)),
            None => ResultCache::from_env(),
        };
        let correctness = if config.class_correctness {
            Correctness::Class(config.binning_scheme()?)
        } else {
            Correctness::Exact
        };
        Ok(ExperimentContext {
            plan: config.split_plan(),
            fractions: config.fractions.clone(),
            settings: EvalSettings {
                scheme: config.binning_scheme()?,
                quantiles: config.quantiles.clone(),
                bins: config.bins,
                confidence: ConfidenceOptions {
                    beam_width: config.beam_width,
                    correctness,
                },
            },
            runner,
            cache,
            workdir: workdir.to_path_buf(),
            datasets,
        })
    }

    pub fn records(&self, dataset: &str) -> Result<&[EventRecord]> {
        self.datasets
            .get(dataset)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("unknown dataset `{dataset}`")))
    }

    fn splits(&self, dataset: &str, fraction: f64) -> Result<Splits> {
        make_splits(self.records(dataset)?, &self.plan.with_fewshot(fraction))
    }

    fn cell_dir(&self, parts: &[&str]) -> PathBuf {
        let name: String = parts
            .join("__")
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                    c
                } else {
                    '_'
                }
            })
            .collect();
        self.workdir.join(name)
    }

    /// Runs and scores one cell. Runner failures become a failed outcome.
    fn run_cell(&self, inputs: &CellInputs<'_>, workdir: &Path) -> Result<CellOutcome> {
        let raw = match run_cached(&self.runner, self.cache.as_ref(), inputs, workdir)? {
            Ok(raw) => raw,
            Err(failure) => return Ok(CellOutcome::Failed { error: failure.0 }),
        };
        let gold = gold_counts(inputs.test, &inputs.test_task.victim_type);
        let scored = parse_model_outputs(&raw, "runner output")
            .and_then(|outputs| evaluate_outputs(&outputs, &gold, &self.settings));
        Ok(match scored {
            Ok(eval) => CellOutcome::Ok {
                report: Box::new(eval.report),
                calibration: eval.calibration,
            },
            Err(e) if e.is_io() => return Err(e),
            Err(e) => CellOutcome::Failed { error: e.to_string() },
        })
    }
}

/// Result of one experiment cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok {
        report: Box<ScoreReport>,
        calibration: Option<CalibrationScore>,
    },
    Failed {
        error: String,
    },
}

impl CellOutcome {
    pub fn report(&self) -> Option<&ScoreReport> {
        match self {
            CellOutcome::Ok { report, .. } => Some(report),
            CellOutcome::Failed { .. } => None,
        }
    }

    pub fn calibration(&self) -> Option<&CalibrationScore> {
        match self {
            CellOutcome::Ok { calibration, .. } => calibration.as_ref(),
            CellOutcome::Failed { .. } => None,
        }
    }

    /// Scalar metrics keyed by name. Metrics the predictions do not support
    /// are left out.
    pub fn metrics(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        if let Some(r) = self.report() {
            if let Some(v) = r.exact_match {
                out.insert("exact_match".to_string(), v);
            }
            if let Some(v) = r.digit_f1 {
                out.insert("digit_f1".to_string(), v);
            }
            out.insert("class_accuracy".to_string(), r.class_accuracy);
            out.insert("macro_f1".to_string(), r.macro_scores.f1);
            if let Some(v) = r.mse_log {
                out.insert("mse_log".to_string(), v);
            }
            for (q, v) in &r.pinball {
                out.insert(format!("pinball_{q}"), *v);
            }
        }
        if let Some(c) = self.calibration() {
            out.insert(c.metric.clone(), c.value);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewshotRow {
    pub fraction: f64,
    pub train_size: usize,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewshotCurve {
    pub task: Task,
    pub test_size: usize,
    pub rows: Vec<FewshotRow>,
}

fn test_records(splits: &Splits, task: &Task) -> Vec<EventRecord> {
    splits
        .test
        .iter()
        .filter(|r| r.gold(&task.victim_type).is_some())
        .cloned()
        .collect()
}

/// Trains on each few-shot subset of the task's training split and scores
/// on its test split, one row per fraction in the configured order.
pub fn run_fewshot(ctx: &ExperimentContext, task: &Task) -> Result<FewshotCurve> {
    let rows: Vec<Result<(FewshotRow, usize)>> = ctx
        .fractions
        .par_iter()
        .map(|&fraction| {
            let splits = ctx.splits(&task.dataset, fraction)?;
            let test = test_records(&splits, task);
            let manifest = splits.manifest(&ctx.plan.with_fewshot(fraction));
            let inputs = CellInputs {
                train_task: task,
                test_task: task,
                fraction,
                seed: ctx.plan.seed,
                train: &splits.fewshot,
                test: &test,
                manifest: &manifest,
            };
            let dir = ctx.cell_dir(&["fewshot", &task.to_string(), &fraction.to_string()]);
            let outcome = ctx.run_cell(&inputs, &dir)?;
            if let CellOutcome::Failed { error } = &outcome {
                log::warn!("{task} at fraction {fraction}: {error}");
            }
            Ok((
                FewshotRow {
                    fraction,
                    train_size: splits.fewshot.len(),
                    outcome,
                },
                test.len(),
            ))
        })
        .collect();
    let mut out = Vec::with_capacity(rows.len());
    let mut test_size = 0;
    for row in rows {
        let (row, n) = row?;
        test_size = n;
        out.push(row);
    }
    Ok(FewshotCurve {
        task: task.clone(),
        test_size,
        rows: out,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodCell {
    pub train: Task,
    pub test: Task,
    #[serde(flatten)]
    pub outcome: CellOutcome,
    pub metrics: BTreeMap<String, f64>,
    /// `metric − metric(test, test)`; empty when either cell failed.
    pub deltas: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodMatrix {
    pub tasks: Vec<Task>,
    /// Row-major: train task, then test task.
    pub cells: Vec<OodCell>,
}

impl OodMatrix {
    pub fn cell(&self, train: &Task, test: &Task) -> Option<&OodCell> {
        self.cells.iter().find(|c| &c.train == train && &c.test == test)
    }
}

/// Trains on every task's full training split and scores on every task's
/// test split. Deltas are absolute differences against the in-distribution
/// cell of the test task.
pub fn run_ood(ctx: &ExperimentContext, tasks: &[Task]) -> Result<OodMatrix> {
    ood_pairs(tasks)?;
    let mut unique: Vec<Task> = Vec::new();
    for t in tasks {
        if !unique.contains(t) {
            unique.push(t.clone());
        }
    }
    let mut splits = BTreeMap::new();
    for t in &unique {
        if !splits.contains_key(&t.dataset) {
            splits.insert(t.dataset.clone(), ctx.splits(&t.dataset, 1.0)?);
        }
    }
    let grid: Vec<(&Task, &Task)> = unique
        .iter()
        .flat_map(|train| unique.iter().map(move |test| (train, test)))
        .collect();
    let outcomes: Vec<Result<CellOutcome>> = grid
        .par_iter()
        .map(|&(train, test)| {
            let train_splits = &splits[&train.dataset];
            let test_split = test_records(&splits[&test.dataset], test);
            let manifest = train_splits.manifest(&ctx.plan);
            let inputs = CellInputs {
                train_task: train,
                test_task: test,
                fraction: 1.0,
                seed: ctx.plan.seed,
                train: &train_splits.train,
                test: &test_split,
                manifest: &manifest,
            };
            let dir = ctx.cell_dir(&["ood", &train.to_string(), &test.to_string()]);
            ctx.run_cell(&inputs, &dir)
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let metrics: Vec<BTreeMap<String, f64>> = outcomes.iter().map(CellOutcome::metrics).collect();
    let diagonal = |test: &Task| {
        grid.iter()
            .position(|(a, b)| *a == test && *b == test)
            .expect("diagonal cell")
    };
    let mut cells = Vec::with_capacity(grid.len());
    for (i, ((train, test), outcome)) in grid.iter().zip(outcomes).enumerate() {
        let reference = &metrics[diagonal(test)];
        let deltas = match (&outcome, reference.is_empty()) {
            (CellOutcome::Ok { .. }, false) => metrics[i]
                .iter()
                .filter_map(|(k, v)| reference.get(k).map(|r| (k.clone(), v - r)))
                .collect(),
            _ => BTreeMap::new(),
        };
        cells.push(OodCell {
            train: (*train).clone(),
            test: (*test).clone(),
            outcome,
            metrics: metrics[i].clone(),
            deltas,
        });
    }
    Ok(OodMatrix { tasks: unique, cells })
}
