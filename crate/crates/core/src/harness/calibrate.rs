//! Fit-on-dev, score-on-test calibration experiments.

use serde::{Deserialize, Serialize};

use super::evaluate::calibration_metric;
use crate::calibration::{
    apply_calibrator, confidences, ece_from_bins, fit_isotonic, fit_temperature, pit_values, reg_ce_from_bins,
    regression_reliability, reliability_diagram, CalibrationBin, Calibrator, ConfidenceOptions, Labels, PredictionKind,
    PredictionSet, DEFAULT_BINS,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSettings {
    pub bins: usize,
    pub confidence: ConfidenceOptions,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            bins: DEFAULT_BINS,
            confidence: ConfidenceOptions::default(),
        }
    }
}

/// Test-set calibration error before and after a calibrator fitted on dev.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    pub kind: PredictionKind,
    /// `ece`, `gen_ece` or `reg_ce`.
    pub metric: String,
    pub n_dev: usize,
    pub n_test: usize,
    pub error_before: f64,
    pub error_after: f64,
    /// Top-prediction accuracy on test; `None` for regression.
    pub accuracy_before: Option<f64>,
    pub accuracy_after: Option<f64>,
    pub calibrator: Calibrator,
    pub bins_before: Vec<CalibrationBin>,
    pub bins_after: Vec<CalibrationBin>,
}

fn counts(labels: &Labels) -> Result<&[f64]> {
    match labels {
        Labels::Counts(c) => Ok(c),
        other => Err(Error::KindMismatch {
            expected: "regression".into(),
            found: other.kind().to_string(),
        }),
    }
}

fn accuracy(correct: &[bool]) -> f64 {
    correct.iter().filter(|c| **c).count() as f64 / correct.len() as f64
}

/// Fits the kind's calibrator on the dev predictions and reports the matched
/// calibration error on test before and after applying it.
pub fn run_calibration_experiment(
    dev: &PredictionSet,
    dev_labels: &Labels,
    test: &PredictionSet,
    test_labels: &Labels,
    settings: &CalibrationSettings,
) -> Result<CalibrationOutcome> {
    if dev.kind() != test.kind() {
        return Err(Error::KindMismatch {
            expected: dev.kind().to_string(),
            found: test.kind().to_string(),
        });
    }
    if test.is_empty() {
        return Err(Error::Empty("test predictions".into()));
    }
    let kind = dev.kind();
    let bins = settings.bins;
    let options = &settings.confidence;

    let (calibrator, bins_before, bins_after, acc) = match kind {
        PredictionKind::Classification | PredictionKind::Generation => {
            let fitted = fit_temperature(dev, dev_labels, options)?;
            let (c0, ok0) = confidences(test, test_labels, 1.0, options)?;
            let (c1, ok1) = confidences(test, test_labels, fitted.t, options)?;
            (
                Calibrator::Temperature(fitted),
                reliability_diagram(&c0, &ok0, bins)?,
                reliability_diagram(&c1, &ok1, bins)?,
                Some((accuracy(&ok0), accuracy(&ok1))),
            )
        }
        PredictionKind::Regression => {
            let dev_pit = pit_values(dev, counts(dev_labels)?)?;
            let calibrator = Calibrator::Isotonic(fit_isotonic(&dev_pit)?);
            let test_counts = counts(test_labels)?;
            let before = pit_values(test, test_counts)?;
            let after = pit_values(&apply_calibrator(&calibrator, test)?, test_counts)?;
            (
                calibrator,
                regression_reliability(&before, bins)?,
                regression_reliability(&after, bins)?,
                None,
            )
        }
    };
    let error = |b: &[CalibrationBin]| match kind {
        PredictionKind::Regression => reg_ce_from_bins(b),
        _ => ece_from_bins(b),
    };
    Ok(CalibrationOutcome {
        kind,
        metric: calibration_metric(kind).to_string(),
        n_dev: dev.len(),
        n_test: test.len(),
        error_before: error(&bins_before),
        error_after: error(&bins_after),
        accuracy_before: acc.map(|a| a.0),
        accuracy_after: acc.map(|a| a.1),
        calibrator,
        bins_before,
        bins_after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::synthetic::{calibrated_beams, halves, lognormal_regression, overconfident_classifier};

    #[test]
    fn temperature_reduces_classifier_error() {
        let (set, labels) = overconfident_classifier(4000, 5);
        let ((dev, dl), (test, tl)) = halves(set, labels);
        let out = run_calibration_experiment(&dev, &dl, &test, &tl, &CalibrationSettings::default()).unwrap();
        assert!(out.error_after < out.error_before);
        assert_eq!(out.accuracy_before, out.accuracy_after);
        assert_eq!(out.metric, "ece");
    }

    #[test]
    fn calibrated_beams_stay_calibrated() {
        let (set, labels) = calibrated_beams(20000, 5, 3);
        let ((dev, dl), (test, tl)) = halves(set, labels);
        let out = run_calibration_experiment(&dev, &dl, &test, &tl, &CalibrationSettings::default()).unwrap();
        assert!((out.error_before - out.error_after).abs() <= 0.02, "{out:?}");
    }

    #[test]
    fn isotonic_reduces_regression_error() {
        let (set, labels) = lognormal_regression(4000, 1.0, 0.4, 9);
        let ((dev, dl), (test, tl)) = halves(set, labels);
        let out = run_calibration_experiment(&dev, &dl, &test, &tl, &CalibrationSettings::default()).unwrap();
        assert_eq!(out.metric, "reg_ce");
        assert!(
            out.error_after < out.error_before,
            "{} {}",
            out.error_before,
            out.error_after
        );
        assert!(out.error_after < 0.05);
    }

    #[test]
    fn kinds_must_match() {
        let (clf, cl) = overconfident_classifier(10, 1);
        let (reg, rl) = lognormal_regression(10, 1.0, 1.0, 1);
        assert!(matches!(
            run_calibration_experiment(&clf, &cl, &reg, &rl, &CalibrationSettings::default()),
            Err(Error::KindMismatch { .. })
        ));
    }
}
