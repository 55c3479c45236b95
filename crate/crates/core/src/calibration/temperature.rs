use serde::{Deserialize, Serialize};

use super::predictions::{Beam, Labels, PredictionSet};
use crate::metrics::{bin_count, exact_match, BinningScheme};
use crate::{Error, Result};

/// Search interval for the temperature.
pub const T_MIN: f64 = 0.01;
pub const T_MAX: f64 = 100.0;
/// Golden-section tolerance on `log T`.
pub const LOG_T_TOLERANCE: f64 = 1e-4;

const GRID_POINTS: usize = 41;
const PROB_FLOOR: f64 = 1e-12;

/// Divides pre-softmax scores by a fitted scalar `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureCalibrator {
    #[serde(rename = "T")]
    pub t: f64,
}

impl TemperatureCalibrator {
    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::Domain(format!("temperature must be positive, got {t}")));
        }
        Ok(TemperatureCalibrator { t })
    }

    pub fn identity() -> Self {
        TemperatureCalibrator { t: 1.0 }
    }
}

/// Softmax of `scores / t`.
pub fn softmax(scores: &[f64], t: f64) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| ((s - max) / t).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_softmax_at(scores: &[f64], t: f64, index: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_total = scores.iter().map(|s| ((s - max) / t).exp()).sum::<f64>().ln();
    (scores[index] - max) / t - log_total
}

/// Top candidate and its softmax confidence over the best `beam_width`
/// beams, with scores divided by `t`.
pub fn gen_confidence(beams: &[Beam], t: f64, beam_width: usize) -> Result<(String, f64)> {
    if beams.is_empty() {
        return Err(Error::Domain("empty beam list".into()));
    }
    if beam_width == 0 {
        return Err(Error::Config("beam width must be at least 1".into()));
    }
    let mut ranked: Vec<&Beam> = beams.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    ranked.truncate(beam_width);
    let scores: Vec<f64> = ranked.iter().map(|b| b.score).collect();
    let confidence = softmax(&scores, t)[0];
    Ok((ranked[0].text.clone(), confidence))
}

/// How a generated answer is judged against the gold string.
#[derive(Debug, Clone, PartialEq)]
pub enum Correctness {
    /// Exact match after leading-zero canonicalization.
    Exact,
    /// Same count class under the scheme.
    Class(BinningScheme),
}

impl Correctness {
    pub fn judge(&self, predicted: &str, gold: &str) -> bool {
        match self {
            Correctness::Exact => exact_match(predicted, gold) == 1,
            Correctness::Class(scheme) => {
                let class = |s: &str| s.trim().parse::<i64>().ok().and_then(|n| bin_count(n, scheme).ok());
                matches!((class(predicted), class(gold)), (Some(a), Some(b)) if a == b)
            }
        }
    }
}

/// Settings shared by generation confidence, fitting and scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceOptions {
    pub beam_width: usize,
    pub correctness: Correctness,
}

impl Default for ConfidenceOptions {
    fn default() -> Self {
        ConfidenceOptions {
            beam_width: super::DEFAULT_BEAM_WIDTH,
            correctness: Correctness::Exact,
        }
    }
}

fn check_lengths(set: &PredictionSet, labels: &Labels) -> Result<()> {
    if set.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: set.len(),
            right: labels.len(),
        });
    }
    if set.kind() != labels.kind() {
        return Err(Error::KindMismatch {
            expected: set.kind().to_string(),
            found: labels.kind().to_string(),
        });
    }
    Ok(())
}

/// Top-prediction confidence and correctness per sample at temperature `t`.
pub fn confidences(
    set: &PredictionSet,
    labels: &Labels,
    t: f64,
    options: &ConfidenceOptions,
) -> Result<(Vec<f64>, Vec<bool>)> {
    check_lengths(set, labels)?;
    match (set, labels) {
        (PredictionSet::Classification(items), Labels::Classes(gold)) => {
            let mut conf = Vec::with_capacity(items.len());
            let mut correct = Vec::with_capacity(items.len());
            for (p, &g) in items.iter().zip(gold) {
                if g >= p.scores.len() {
                    return Err(Error::Domain(format!(
                        "label {g} of `{}` out of range for {} classes",
                        p.id,
                        p.scores.len()
                    )));
                }
                let top = p.argmax();
                conf.push(softmax(&p.scores, t)[top]);
                correct.push(top == g);
            }
            Ok((conf, correct))
        }
        (PredictionSet::Generation(items), Labels::Texts(gold)) => {
            let mut conf = Vec::with_capacity(items.len());
            let mut correct = Vec::with_capacity(items.len());
            for (p, g) in items.iter().zip(gold) {
                let (top, c) = gen_confidence(&p.beams, t, options.beam_width)?;
                conf.push(c);
                correct.push(options.correctness.judge(&top, g));
            }
            Ok((conf, correct))
        }
        _ => Err(Error::KindMismatch {
            expected: "classification or generation".into(),
            found: set.kind().to_string(),
        }),
    }
}

/// Mean negative log-likelihood at temperature `t`.
///
/// Classification uses the softmax probability of the gold class.
/// Generation uses the Bernoulli likelihood of the top answer being correct
/// under its confidence.
pub fn nll(set: &PredictionSet, labels: &Labels, t: f64, options: &ConfidenceOptions) -> Result<f64> {
    check_lengths(set, labels)?;
    if set.is_empty() {
        return Err(Error::Empty("no predictions".into()));
    }
    let total: f64 = match (set, labels) {
        (PredictionSet::Classification(items), Labels::Classes(gold)) => {
            let mut total = 0.0;
            for (p, &g) in items.iter().zip(gold) {
                if g >= p.scores.len() {
                    return Err(Error::Domain(format!("label {g} of `{}` out of range", p.id)));
                }
                total -= log_softmax_at(&p.scores, t, g);
            }
            total
        }
        (PredictionSet::Generation(_), Labels::Texts(_)) => {
            let (conf, correct) = confidences(set, labels, t, options)?;
            conf.iter()
                .zip(&correct)
                .map(|(&c, &ok)| {
                    let p = if ok { c } else { 1.0 - c };
                    -p.clamp(PROB_FLOOR, 1.0).ln()
                })
                .sum()
        }
        _ => {
            return Err(Error::KindMismatch {
                expected: "classification or generation".into(),
                found: set.kind().to_string(),
            })
        }
    };
    Ok(total / set.len() as f64)
}

fn check_not_degenerate(set: &PredictionSet, labels: &Labels, options: &ConfidenceOptions) -> Result<()> {
    match labels {
        Labels::Classes(gold) => {
            if gold.iter().all(|g| *g == gold[0]) {
                return Err(Error::Fitting("labels contain a single class".into()));
            }
        }
        Labels::Texts(_) => {
            let (_, correct) = confidences(set, labels, 1.0, options)?;
            if correct.iter().all(|c| *c == correct[0]) {
                return Err(Error::Fitting("top answers are all correct or all wrong".into()));
            }
        }
        Labels::Counts(_) => {
            return Err(Error::KindMismatch {
                expected: "classification or generation".into(),
                found: "regression".into(),
            })
        }
    }
    Ok(())
}

/// Fits `T` on development predictions by minimizing the NLL over
/// `T ∈ [0.01, 100]`.
///
/// A coarse grid on `log T` brackets the minimum, golden-section search
/// refines it to [`LOG_T_TOLERANCE`], and `T = 1` is returned instead when
/// it scores at least as well.
pub fn fit_temperature(
    set: &PredictionSet,
    labels: &Labels,
    options: &ConfidenceOptions,
) -> Result<TemperatureCalibrator> {
    check_lengths(set, labels)?;
    if set.is_empty() {
        return Err(Error::Fitting("empty development set".into()));
    }
    check_not_degenerate(set, labels, options)?;

    let objective = |log_t: f64| nll(set, labels, log_t.exp(), options);
    let (lo, hi) = (T_MIN.ln(), T_MAX.ln());
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| lo + step * i as f64).collect();
    let values = grid.iter().map(|&x| objective(x)).collect::<Result<Vec<_>>>()?;
    let best = (0..GRID_POINTS)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty grid");

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID_POINTS - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    while (b - a).abs() > LOG_T_TOLERANCE {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = objective(d)?;
        }
    }
    let mut log_t = (a + b) / 2.0;
    let mut f = objective(log_t)?;
    if values[best] < f {
        log_t = grid[best];
        f = values[best];
    }
    if objective(0.0)? <= f {
        log_t = 0.0;
    }
    TemperatureCalibrator::new(log_t.exp())
}
