//! Accuracy metrics for predicted counts.
//!
//! String metrics ([`exact_match`], [`digit_f1`]) compare count strings;
//! ordinal metrics bin counts with a [`BinningScheme`] first; numeric losses
//! ([`mse_log`], [`pinball_loss`]) work on the values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered inclusive upper bounds that split `[0, ∞)` into classes.
///
/// With cuts `[c0, c1, ...]`, class 0 is `y ≤ c0`, class `i` is
/// `c(i-1) < y ≤ c(i)`, and the last class is everything above the last cut.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub name: String,
    pub cuts: Vec<u64>,
}

impl BinningScheme {
    pub fn new(name: impl Into<String>, cuts: Vec<u64>) -> Result<Self> {
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("binning cuts must be strictly increasing".into()));
        }
        Ok(BinningScheme {
            name: name.into(),
            cuts,
        })
    }

    /// `{0}`, `(0,3]`, `(3,10]`, `(10,∞)`.
    pub fn four_bin() -> Self {
        BinningScheme {
            name: "four-bin".into(),
            cuts: vec![0, 3, 10],
        }
    }

    /// `[0,3]`, `(3,10]`, `(10,∞)`.
    pub fn three_class() -> Self {
        BinningScheme {
            name: "three-class".into(),
            cuts: vec![3, 10],
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "four-bin" => Ok(Self::four_bin()),
            "three-class" => Ok(Self::three_class()),
            other => Err(Error::Config(format!("unknown binning scheme `{other}`"))),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn bin(&self, y: u64) -> usize {
        self.cuts.partition_point(|&c| c < y)
    }

    /// Human-readable class labels, e.g. `0`, `(0,3]`, `>10`.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.num_classes());
        let mut lower: Option<u64> = None;
        for &cut in &self.cuts {
            labels.push(match lower {
                None if cut == 0 => "0".to_string(),
                None => format!("[0,{cut}]"),
                Some(lo) => format!("({lo},{cut}]"),
            });
            lower = Some(cut);
        }
        labels.push(match lower {
            Some(lo) => format!(">{lo}"),
            None => "all".into(),
        });
        labels
    }
}

/// Class index of count `y`. Negative counts are a domain error.
pub fn bin_count(y: i64, scheme: &BinningScheme) -> Result<usize> {
    u64::try_from(y)
        .map(|y| scheme.bin(y))
        .map_err(|_| Error::Domain(format!("count {y} is negative")))
}

fn canonical(s: &str) -> &str {
    let t = s.trim();
    if !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
        let stripped = t.trim_start_matches('0');
        if stripped.is_empty() {
            "0"
        } else {
            stripped
        }
    } else {
        t
    }
}

/// 1 if the trimmed strings are equal once leading zeros are stripped from
/// digit strings, else 0.
pub fn exact_match(pred: &str, gold: &str) -> u8 {
    u8::from(canonical(pred) == canonical(gold))
}

/// F1 between the multisets of digit characters in `pred` and `gold`
/// (`"34"` counts as the tokens `3` and `4`).
pub fn digit_f1(pred: &str, gold: &str) -> f64 {
    let histogram = |s: &str| {
        let mut h = [0usize; 10];
        for b in s.bytes().filter(u8::is_ascii_digit) {
            h[(b - b'0') as usize] += 1;
        }
        h
    };
    let p = histogram(pred);
    let g = histogram(gold);
    let n_pred: usize = p.iter().sum();
    let n_gold: usize = g.iter().sum();
    if n_pred == 0 && n_gold == 0 {
        return 1.0;
    }
    let common: usize = p.iter().zip(&g).map(|(a, b)| a.min(b)).sum();
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / n_pred as f64;
    let recall = common as f64 / n_gold as f64;
    2.0 * precision * recall / (precision + recall)
}

fn check_lengths<A, B>(preds: &[A], golds: &[B]) -> Result<()> {
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty("no predictions to score".into()));
    }
    Ok(())
}

/// Class-by-class confusion counts with rows normalized over gold support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// `counts[gold][pred]`.
    pub counts: Vec<Vec<u64>>,
    /// `counts` divided by row sums; rows without gold support are all zero.
    pub normalized: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    fn from_classes(pred: &[usize], gold: &[usize], scheme: &BinningScheme) -> Self {
        let k = scheme.num_classes();
        let mut counts = vec![vec![0u64; k]; k];
        for (&p, &g) in pred.iter().zip(gold) {
            counts[g][p] += 1;
        }
        let normalized = counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect();
        ConfusionMatrix {
            labels: scheme.labels(),
            counts,
            normalized,
        }
    }

    pub fn empty(scheme: &BinningScheme) -> Self {
        Self::from_classes(&[], &[], scheme)
    }

    /// CSV with a `gold\pred` header row and one normalized row per class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for label in &self.labels {
            write!(out, ",{label}").unwrap();
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.normalized) {
            out.push_str(label);
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(preds: &[u64], golds: &[u64], scheme: &BinningScheme) -> Result<ConfusionMatrix> {
    check_lengths(preds, golds)?;
    let p: Vec<usize> = preds.iter().map(|&y| scheme.bin(y)).collect();
    let g: Vec<usize> = golds.iter().map(|&y| scheme.bin(y)).collect();
    Ok(ConfusionMatrix::from_classes(&p, &g, scheme))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn macro_from_classes(pred: &[usize], gold: &[usize]) -> MacroScores {
    let classes: BTreeSet<usize> = pred.iter().chain(gold).copied().collect();
    let mut sums = (0.0, 0.0, 0.0);
    for &c in &classes {
        let tp = pred.iter().zip(gold).filter(|(&p, &g)| p == c && g == c).count() as f64;
        let predicted = pred.iter().filter(|&&p| p == c).count() as f64;
        let actual = gold.iter().filter(|&&g| g == c).count() as f64;
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = if actual > 0.0 { tp / actual } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        sums.0 += precision;
        sums.1 += recall;
        sums.2 += f1;
    }
    let k = classes.len() as f64;
    MacroScores {
        precision: sums.0 / k,
        recall: sums.1 / k,
        f1: sums.2 / k,
    }
}

/// Macro-averaged precision, recall and F1 over classes that occur in either
/// the gold or the predicted labels. Macro F1 is the mean of per-class F1.
pub fn macro_prf(preds: &[u64], golds: &[u64], scheme: &BinningScheme) -> Result<MacroScores> {
    check_lengths(preds, golds)?;
    let p: Vec<usize> = preds.iter().map(|&y| scheme.bin(y)).collect();
    let g: Vec<usize> = golds.iter().map(|&y| scheme.bin(y)).collect();
    Ok(macro_from_classes(&p, &g))
}

/// Mean squared error between `log(1 + pred)` and `log(1 + gold)`.
pub fn mse_log(preds: &[f64], golds: &[f64]) -> Result<f64> {
    check_lengths(preds, golds)?;
    if let Some(bad) = preds.iter().chain(golds).find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::Domain(format!("count {bad} is negative")));
    }
    let total: f64 = preds
        .iter()
        .zip(golds)
        .map(|(p, g)| (p.ln_1p() - g.ln_1p()).powi(2))
        .sum();
    Ok(total / preds.len() as f64)
}

/// Mean quantile loss `max(q·e, (q−1)·e)` with `e = gold − pred`.
pub fn pinball_loss(preds: &[f64], golds: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile {q} outside (0, 1)")));
    }
    check_lengths(preds, golds)?;
    let total: f64 = preds
        .iter()
        .zip(golds)
        .map(|(p, g)| {
            let e = g - p;
            (q * e).max((q - 1.0) * e)
        })
        .sum();
    Ok(total / preds.len() as f64)
}

/// Aggregate accuracy report for one prediction set.
///
/// String and numeric fields are `None` when the predictions carry only class
/// labels (classification heads).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub n: usize,
    pub scheme: String,
    pub exact_match: Option<f64>,
    pub digit_f1: Option<f64>,
    /// Fraction of samples whose predicted class equals the gold class.
    pub class_accuracy: f64,
    pub macro_scores: MacroScores,
    pub confusion: ConfusionMatrix,
    pub mse_log: Option<f64>,
    /// Pinball loss keyed by quantile (formatted as in the request, e.g. `"0.1"`).
    pub pinball: BTreeMap<String, f64>,
}

impl ScoreReport {
    pub fn empty(scheme: &BinningScheme) -> Self {
        ScoreReport {
            n: 0,
            scheme: scheme.name.clone(),
            exact_match: None,
            digit_f1: None,
            class_accuracy: 0.0,
            macro_scores: MacroScores {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0,
            },
            confusion: ConfusionMatrix::empty(scheme),
            mse_log: None,
            pinball: BTreeMap::new(),
        }
    }
}

/// Point predictions for one sample, with optional quantile predictions used
/// for the pinball loss (falls back to the point value when absent).
#[derive(Debug, Clone, PartialEq)]
pub struct CountPrediction {
    pub text: String,
    pub value: u64,
    pub quantiles: BTreeMap<String, f64>,
}

impl CountPrediction {
    pub fn point(value: u64) -> Self {
        CountPrediction {
            text: value.to_string(),
            value,
            quantiles: BTreeMap::new(),
        }
    }
}

fn quantile_key(q: f64) -> String {
    format!("{q}")
}

/// Scores count predictions against gold counts.
pub fn score_counts(
    preds: &[CountPrediction],
    golds: &[u64],
    scheme: &BinningScheme,
    quantiles: &[f64],
) -> Result<ScoreReport> {
    if preds.is_empty() && golds.is_empty() {
        return Ok(ScoreReport::empty(scheme));
    }
    check_lengths(preds, golds)?;
    let n = preds.len() as f64;
    let gold_text: Vec<String> = golds.iter().map(u64::to_string).collect();
    let em = preds
        .iter()
        .zip(&gold_text)
        .map(|(p, g)| f64::from(exact_match(&p.text, g)))
        .sum::<f64>()
        / n;
    let f1 = preds
        .iter()
        .zip(&gold_text)
        .map(|(p, g)| digit_f1(&p.text, g))
        .sum::<f64>()
        / n;
    let values: Vec<u64> = preds.iter().map(|p| p.value).collect();
    let pred_classes: Vec<usize> = values.iter().map(|&v| scheme.bin(v)).collect();
    let gold_classes: Vec<usize> = golds.iter().map(|&v| scheme.bin(v)).collect();
    let gold_f: Vec<f64> = golds.iter().map(|&g| g as f64).collect();
    let value_f: Vec<f64> = values.iter().map(|&v| v as f64).collect();

    let mut pinball = BTreeMap::new();
    for &q in quantiles {
        let key = quantile_key(q);
        let qpred: Vec<f64> = preds
            .iter()
            .map(|p| p.quantiles.get(&key).copied().unwrap_or(p.value as f64))
            .collect();
        pinball.insert(key, pinball_loss(&qpred, &gold_f, q)?);
    }

    Ok(ScoreReport {
        n: preds.len(),
        scheme: scheme.name.clone(),
        exact_match: Some(em),
        digit_f1: Some(f1),
        class_accuracy: class_accuracy(&pred_classes, &gold_classes),
        macro_scores: macro_from_classes(&pred_classes, &gold_classes),
        confusion: ConfusionMatrix::from_classes(&pred_classes, &gold_classes, scheme),
        mse_log: Some(mse_log(&value_f, &gold_f)?),
        pinball,
    })
}

/// Scores predicted class indices against gold counts binned by `scheme`.
pub fn score_classes(pred_classes: &[usize], golds: &[u64], scheme: &BinningScheme) -> Result<ScoreReport> {
    if pred_classes.is_empty() && golds.is_empty() {
        return Ok(ScoreReport::empty(scheme));
    }
    check_lengths(pred_classes, golds)?;
    if let Some(&bad) = pred_classes.iter().find(|&&c| c >= scheme.num_classes()) {
        return Err(Error::Domain(format!(
            "class {bad} out of range for scheme `{}`",
            scheme.name
        )));
    }
    let gold_classes: Vec<usize> = golds.iter().map(|&v| scheme.bin(v)).collect();
    Ok(ScoreReport {
        n: golds.len(),
        scheme: scheme.name.clone(),
        exact_match: None,
        digit_f1: None,
        class_accuracy: class_accuracy(pred_classes, &gold_classes),
        macro_scores: macro_from_classes(pred_classes, &gold_classes),
        confusion: ConfusionMatrix::from_classes(pred_classes, &gold_classes, scheme),
        mse_log: None,
        pinball: BTreeMap::new(),
    })
}

fn class_accuracy(pred: &[usize], gold: &[usize]) -> f64 {
    pred.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / pred.len() as f64
}
