//! Scoring prediction files against gold counts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{
    self, gen_confidence, parse_prediction_lines, pit_values, reg_ce, softmax, ConfidenceOptions, Labels,
    PredictionKind, PredictionSet,
};
use crate::corpus::{EventRecord, VictimType};
use crate::metrics::{score_classes, score_counts, BinningScheme, CountPrediction, ScoreReport};
use crate::{Error, Result};

/// Pinball-loss levels reported for regression outputs.
pub const DEFAULT_QUANTILES: [f64; 2] = [0.1, 0.9];

/// One line of a count prediction file, as written by `extract`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountLine {
    pub id: String,
    pub count: Option<u64>,
    /// Predicted answer string when it differs from the decimal count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub quantiles: BTreeMap<String, f64>,
}

/// Contents of a prediction file: plain counts, or raw model outputs.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelOutputs {
    Counts(Vec<CountLine>),
    Model(PredictionSet),
}

impl ModelOutputs {
    pub fn ids(&self) -> Vec<&str> {
        match self {
            ModelOutputs::Counts(lines) => lines.iter().map(|l| l.id.as_str()).collect(),
            ModelOutputs::Model(set) => set.ids(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ModelOutputs::Counts(lines) => lines.len(),
            ModelOutputs::Model(set) => set.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keeps the entries at `order`, in that order.
    fn select(&self, order: &[usize]) -> ModelOutputs {
        fn pick<T: Clone>(v: &[T], order: &[usize]) -> Vec<T> {
            order.iter().map(|&i| v[i].clone()).collect()
        }
        match self {
            ModelOutputs::Counts(v) => ModelOutputs::Counts(pick(v, order)),
            ModelOutputs::Model(PredictionSet::Classification(v)) => {
                ModelOutputs::Model(PredictionSet::Classification(pick(v, order)))
            }
            ModelOutputs::Model(PredictionSet::Generation(v)) => {
                ModelOutputs::Model(PredictionSet::Generation(pick(v, order)))
            }
            ModelOutputs::Model(PredictionSet::Regression(v)) => {
                ModelOutputs::Model(PredictionSet::Regression(pick(v, order)))
            }
        }
    }
}

/// Parses prediction lines. Files whose first line has a `count` field are
/// count files; anything else must be a model prediction file.
pub fn parse_model_outputs(raw: &str, origin: &str) -> Result<ModelOutputs> {
    let first = raw.lines().find(|l| !l.trim().is_empty());
    let Some(first) = first else {
        return Ok(ModelOutputs::Counts(Vec::new()));
    };
    let probe: serde_json::Value =
        serde_json::from_str(first).map_err(|e| Error::Domain(format!("{origin}:1: not a JSON object ({e})")))?;
    if probe.get("count").is_none() {
        return parse_prediction_lines(raw, origin).map(ModelOutputs::Model);
    }
    let mut lines = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CountLine = serde_json::from_str(line)
            .map_err(|e| Error::Domain(format!("{origin}:{}: not a count line ({e})", i + 1)))?;
        if parsed.confidence.is_some_and(|c| !(0.0..=1.0).contains(&c)) {
            return Err(Error::Domain(format!("{origin}:{}: confidence outside [0, 1]", i + 1)));
        }
        lines.push(parsed);
    }
    Ok(ModelOutputs::Counts(lines))
}

pub fn read_model_outputs(path: &Path) -> Result<ModelOutputs> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model_outputs(&raw, &path.display().to_string())
}

/// Gold counts for `victim_type`, keyed by record id. Records without a
/// gold value for the type are left out.
pub fn gold_counts(records: &[EventRecord], victim_type: &VictimType) -> BTreeMap<String, u64> {
    records
        .iter()
        .filter_map(|r| r.gold(victim_type).map(|g| (r.id.clone(), g)))
        .collect()
}

/// Settings for scoring a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub scheme: BinningScheme,
    pub quantiles: Vec<f64>,
    pub bins: usize,
    pub confidence: ConfidenceOptions,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            scheme: BinningScheme::four_bin(),
            quantiles: DEFAULT_QUANTILES.to_vec(),
            bins: calibration::DEFAULT_BINS,
            confidence: ConfidenceOptions::default(),
        }
    }
}

/// Uncalibrated calibration error of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationScore {
    /// `ece`, `gen_ece` or `reg_ce`.
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: ScoreReport,
    pub calibration: Option<CalibrationScore>,
}

/// Matches prediction ids to gold ids, returning for each gold id (in gold
/// order) the index of its prediction.
pub fn align_ids(pred_ids: &[&str], gold: &BTreeMap<String, u64>) -> Result<Vec<usize>> {
    let mut index = BTreeMap::new();
    for (i, id) in pred_ids.iter().enumerate() {
        if index.insert(*id, i).is_some() {
            return Err(Error::Domain(format!("duplicate prediction id `{id}`")));
        }
    }
    let without_prediction: Vec<String> = gold
        .keys()
        .filter(|id| !index.contains_key(id.as_str()))
        .cloned()
        .collect();
    let gold_ids: BTreeSet<&str> = gold.keys().map(String::as_str).collect();
    let without_gold: Vec<String> = pred_ids
        .iter()
        .filter(|id| !gold_ids.contains(**id))
        .map(|id| id.to_string())
        .collect();
    if !without_prediction.is_empty() || !without_gold.is_empty() {
        return Err(Error::IdMismatch {
            without_prediction,
            without_gold,
        });
    }
    Ok(gold.keys().map(|id| index[id.as_str()]).collect())
}

fn quantile_key(q: f64) -> String {
    format!("{q}")
}

fn leading_count(text: &str) -> u64 {
    text.trim().parse().unwrap_or(0)
}

/// Scores predictions against gold counts. Every gold id needs exactly one
/// prediction and every prediction a gold count.
pub fn evaluate_outputs(
    outputs: &ModelOutputs,
    gold: &BTreeMap<String, u64>,
    settings: &EvalSettings,
) -> Result<Evaluation> {
    let order = align_ids(&outputs.ids(), gold)?;
    let outputs = outputs.select(&order);
    let golds: Vec<u64> = gold.values().copied().collect();
    let gold_text: Vec<String> = golds.iter().map(u64::to_string).collect();
    let scheme = &settings.scheme;

    match &outputs {
        ModelOutputs::Counts(lines) => {
            let preds: Vec<CountPrediction> = lines
                .iter()
                .map(|l| {
                    let value = l.count.unwrap_or(0);
                    CountPrediction {
                        text: l.text.clone().unwrap_or_else(|| value.to_string()),
                        value,
                        quantiles: l.quantiles.clone(),
                    }
                })
                .collect();
            let report = score_counts(&preds, &golds, scheme, &settings.quantiles)?;
            let calibration = if !lines.is_empty() && lines.iter().all(|l| l.confidence.is_some()) {
                let conf: Vec<f64> = lines.iter().map(|l| l.confidence.unwrap_or(0.0)).collect();
                let correct: Vec<bool> = preds
                    .iter()
                    .zip(&gold_text)
                    .map(|(p, g)| settings.confidence.correctness.judge(&p.text, g))
                    .collect();
                Some(CalibrationScore {
                    metric: "ece".into(),
                    value: calibration::ece(&conf, &correct, settings.bins)?,
                })
            } else {
                None
            };
            Ok(Evaluation { report, calibration })
        }
        ModelOutputs::Model(PredictionSet::Generation(items)) => {
            let mut preds = Vec::with_capacity(items.len());
            for p in items {
                let (top, _) = gen_confidence(&p.beams, 1.0, settings.confidence.beam_width)?;
                preds.push(CountPrediction {
                    value: leading_count(&top),
                    text: top,
                    quantiles: BTreeMap::new(),
                });
            }
            let report = score_counts(&preds, &golds, scheme, &settings.quantiles)?;
            let set = PredictionSet::Generation(items.clone());
            let (conf, correct) = calibration::confidences(&set, &Labels::Texts(gold_text), 1.0, &settings.confidence)?;
            let calibration = (!conf.is_empty())
                .then(|| calibration::ece(&conf, &correct, settings.bins))
                .transpose()?
                .map(|value| CalibrationScore {
                    metric: "gen_ece".into(),
                    value,
                });
            Ok(Evaluation { report, calibration })
        }
        ModelOutputs::Model(PredictionSet::Classification(items)) => {
            if let Some(p) = items.iter().find(|p| p.scores.len() != scheme.num_classes()) {
                return Err(Error::Domain(format!(
                    "prediction `{}` has {} scores but scheme `{}` has {} classes",
                    p.id,
                    p.scores.len(),
                    scheme.name,
                    scheme.num_classes()
                )));
            }
            let classes: Vec<usize> = items.iter().map(|p| p.argmax()).collect();
            let report = score_classes(&classes, &golds, scheme)?;
            let conf: Vec<f64> = items.iter().map(|p| softmax(&p.scores, 1.0)[p.argmax()]).collect();
            let correct: Vec<bool> = classes.iter().zip(&golds).map(|(&c, &g)| c == scheme.bin(g)).collect();
            let calibration = (!conf.is_empty())
                .then(|| calibration::ece(&conf, &correct, settings.bins))
                .transpose()?
                .map(|value| CalibrationScore {
                    metric: "ece".into(),
                    value,
                });
            Ok(Evaluation { report, calibration })
        }
        ModelOutputs::Model(set @ PredictionSet::Regression(items)) => {
            let preds: Vec<CountPrediction> = items
                .iter()
                .map(|p| {
                    let value = p.distribution.median().round().max(0.0) as u64;
                    CountPrediction {
                        text: value.to_string(),
                        value,
                        quantiles: settings
                            .quantiles
                            .iter()
                            .map(|&q| (quantile_key(q), p.distribution.quantile(q)))
                            .collect(),
                    }
                })
                .collect();
            let report = score_counts(&preds, &golds, scheme, &settings.quantiles)?;
            let counts: Vec<f64> = golds.iter().map(|&g| g as f64).collect();
            let pit = pit_values(set, &counts)?;
            let calibration = (!pit.is_empty())
                .then(|| reg_ce(&pit, settings.bins))
                .transpose()?
                .map(|value| CalibrationScore {
                    metric: "reg_ce".into(),
                    value,
                });
            Ok(Evaluation { report, calibration })
        }
    }
}

/// Name of the calibration error matched to a prediction kind.
pub fn calibration_metric(kind: PredictionKind) -> &'static str {
    match kind {
        PredictionKind::Classification => "ece",
        PredictionKind::Generation => "gen_ece",
        PredictionKind::Regression => "reg_ce",
    }
}
