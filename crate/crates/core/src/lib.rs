//! Victim-count extraction and evaluation.
//!
//! The crate bundles three rule-based baselines (regular expressions,
//! dependency rules and semantic-role rules) that read a count of killed or
//! injured people out of an event description, together with the machinery
//! needed to score any count-producing model: string and ordinal accuracy
//! metrics, calibration errors for classification, generation and regression
//! outputs, post-hoc calibrators, and an experiment harness for few-shot and
//! out-of-distribution runs.
//!
//! Module map:
//!
//! - [`corpus`]: dataset ingestion, deterministic splits, few-shot subsets
//! - [`numerals`]: spelled-out numeral normalization and count-token parsing
//! - [`extract`]: the regex, dependency and SRL extractors
//! - [`metrics`]: Exact-Match, digit F1, binned confusion, macro P/R/F1, losses
//! - [`calibration`]: ECE, RegCE, beam confidence, temperature and isotonic calibrators
//! - [`harness`]: experiment orchestration and report artifacts

pub mod calibration;
pub mod corpus;
mod error;
pub mod extract;
pub mod harness;
pub mod metrics;
pub mod numerals;
pub mod span;

pub use error::{Error, Result};
