//! Experiment orchestration and report artifacts.
//!
//! - [`run_extraction`] runs a rule-based baseline over a corpus.
//! - [`evaluate_outputs`] scores any prediction file against gold counts.
//! - [`run_calibration_experiment`] fits a calibrator on dev predictions
//!   and reports the test error before and after.
//! - [`run_fewshot`] and [`run_ood`] drive a [`Runner`] over split cells,
//!   caching predictions by content hash.
//! - [`emit_timeline`] aggregates extracted counts per day.
//!
//! Run directories hold `report.json`, `tables/*.csv`, `figures/*.svg` and a
//! `manifest.json` of input hashes.

mod artifacts;
mod calibrate;
mod config;
mod evaluate;
mod experiment;
mod extraction;
mod runner;
pub mod svg;
mod timeline;

pub use artifacts::{
    fewshot_csv, hash_file, ood_csv, slug, timestamp, write_calibration_run, write_fewshot_run, write_ood_run,
    write_timeline_run, InputManifest, Report, RunDir,
};
pub use calibrate::{run_calibration_experiment, CalibrationOutcome, CalibrationSettings};
pub use config::{DatasetConfig, ExperimentConfig, RunnerConfig, SplitFractions};
pub use evaluate::{
    align_ids, calibration_metric, evaluate_outputs, gold_counts, parse_model_outputs, read_model_outputs,
    CalibrationScore, CountLine, EvalSettings, Evaluation, ModelOutputs, DEFAULT_QUANTILES,
};
pub use experiment::{
    run_fewshot, run_ood, CellOutcome, ExperimentContext, FewshotCurve, FewshotRow, OodCell, OodMatrix,
};
pub use extraction::{
    run_extraction, write_extractions, AnnotationPaths, Annotations, ExtractionRun, RecordExtraction,
};
pub use runner::{run_cached, CellInputs, ResultCache, RunFailure, Runner, CACHE_DIR_ENV};
pub use timeline::{emit_timeline, event_counts, parse_date, EventCount, Timeline, TimelineEvent, TimelinePoint};
