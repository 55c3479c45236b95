use std::path::Path;

use serde::{Deserialize, Serialize};

use super::isotonic::IsotonicCalibrator;
use super::predictions::{PredictionSet, QuantilePoint, RegDistribution, RegressionOutput};
use super::temperature::TemperatureCalibrator;
use crate::{Error, Result};

/// Quantile levels used when a log-normal prediction is recalibrated.
pub const RECALIBRATION_LEVELS: [f64; 103] = recalibration_levels();

const fn recalibration_levels() -> [f64; 103] {
    let mut out = [0.0; 103];
    out[0] = 0.001;
    out[1] = 0.005;
    let mut i = 1;
    while i <= 99 {
        out[i + 1] = i as f64 / 100.0;
        i += 1;
    }
    out[101] = 0.995;
    out[102] = 0.999;
    out
}

/// A fitted post-hoc calibrator, stored as `{"kind": ..., ...}` JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Calibrator {
    Temperature(TemperatureCalibrator),
    Isotonic(IsotonicCalibrator),
}

impl Calibrator {
    pub fn name(&self) -> &'static str {
        match self {
            Calibrator::Temperature(_) => "temperature",
            Calibrator::Isotonic(_) => "isotonic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Calibrator::Temperature(t) => TemperatureCalibrator::new(t.t).map(|_| ()),
            Calibrator::Isotonic(iso) => iso.validate(),
        }
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let cal: Calibrator = serde_json::from_str(raw)?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let raw = serde_json::to_string_pretty(self)?;
        std::fs::write(path, raw + "\n").map_err(|e| Error::io(path, e))
    }
}

fn mismatch(cal: &Calibrator, set: &PredictionSet) -> Error {
    let expected = match cal {
        Calibrator::Temperature(_) => "classification or generation",
        Calibrator::Isotonic(_) => "regression",
    };
    Error::KindMismatch {
        expected: expected.into(),
        found: set.kind().to_string(),
    }
}

fn recalibrate_distribution(dist: &RegDistribution, iso: &IsotonicCalibrator) -> RegDistribution {
    let points: Vec<QuantilePoint> = match dist {
        RegDistribution::Quantiles { quantiles } => quantiles.clone(),
        RegDistribution::LogNormal { .. } => RECALIBRATION_LEVELS
            .iter()
            .map(|&p| QuantilePoint {
                p,
                value: dist.quantile(p),
            })
            .collect(),
    };
    RegDistribution::Quantiles {
        quantiles: points
            .into_iter()
            .map(|q| QuantilePoint {
                p: iso.apply(q.p),
                value: q.value,
            })
            .collect(),
    }
}

/// Applies a fitted calibrator.
///
/// Temperature scaling divides every class or beam score by `T`. Isotonic
/// recalibration maps each quantile level through the fitted function, so
/// the recalibrated CDF at a count is the map applied to the original CDF.
/// Log-normal outputs are first expanded to [`RECALIBRATION_LEVELS`].
pub fn apply_calibrator(cal: &Calibrator, set: &PredictionSet) -> Result<PredictionSet> {
    match (cal, set) {
        (Calibrator::Temperature(t), PredictionSet::Classification(items)) => {
            let mut out = items.clone();
            for p in &mut out {
                p.scores.iter_mut().for_each(|s| *s /= t.t);
            }
            Ok(PredictionSet::Classification(out))
        }
        (Calibrator::Temperature(t), PredictionSet::Generation(items)) => {
            let mut out = items.clone();
            for p in &mut out {
                p.beams.iter_mut().for_each(|b| b.score /= t.t);
            }
            Ok(PredictionSet::Generation(out))
        }
        (Calibrator::Isotonic(iso), PredictionSet::Regression(items)) => Ok(PredictionSet::Regression(
            items
                .iter()
                .map(|p| RegressionOutput {
                    id: p.id.clone(),
                    label: p.label,
                    distribution: recalibrate_distribution(&p.distribution, iso),
                })
                .collect(),
        )),
        _ => Err(mismatch(cal, set)),
    }
}

/// Predictive CDF of each regression output at its gold count.
pub fn pit_values(set: &PredictionSet, counts: &[f64]) -> Result<Vec<f64>> {
    let PredictionSet::Regression(items) = set else {
        return Err(Error::KindMismatch {
            expected: "regression".into(),
            found: set.kind().to_string(),
        });
    };
    if items.len() != counts.len() {
        return Err(Error::LengthMismatch {
            left: items.len(),
            right: counts.len(),
        });
    }
    Ok(items
        .iter()
        .zip(counts)
        .map(|(p, &y)| p.distribution.cdf(y).clamp(0.0, 1.0))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{fit_isotonic, ClassScores};

    #[test]
    fn file_format() {
        let t = Calibrator::from_json(r#"{"kind": "temperature", "T": 2.5}"#).unwrap();
        assert_eq!(t, Calibrator::Temperature(TemperatureCalibrator { t: 2.5 }));
        let iso = Calibrator::from_json(r#"{"kind": "isotonic", "breakpoints": [[0.1, 0.2], [0.9, 0.8]]}"#).unwrap();
        assert_eq!(
            serde_json::to_string(&iso).unwrap(),
            r#"{"kind":"isotonic","breakpoints":[[0.1,0.2],[0.9,0.8]]}"#
        );
        assert!(Calibrator::from_json(r#"{"kind": "temperature", "T": -1}"#).is_err());
        assert!(Calibrator::from_json(r#"{"kind": "platt", "a": 1}"#).is_err());
    }

    #[test]
    fn kind_mismatch() {
        let clf = PredictionSet::Classification(vec![ClassScores {
            id: "a".into(),
            scores: vec![1.0, 2.0],
            label: None,
        }]);
        let iso = Calibrator::Isotonic(IsotonicCalibrator::identity());
        assert!(matches!(apply_calibrator(&iso, &clf), Err(Error::KindMismatch { .. })));
        assert!(pit_values(&clf, &[1.0]).is_err());
    }

    #[test]
    fn unit_temperature_is_identity() {
        let clf = PredictionSet::Classification(vec![ClassScores {
            id: "a".into(),
            scores: vec![1.0, -2.0, 0.5],
            label: Some(1),
        }]);
        let t = Calibrator::Temperature(TemperatureCalibrator::identity());
        assert_eq!(apply_calibrator(&t, &clf).unwrap(), clf);
    }

    #[test]
    fn isotonic_maps_cdf() {
        let reg = PredictionSet::Regression(vec![RegressionOutput {
            id: "a".into(),
            label: Some(4.0),
            distribution: RegDistribution::LogNormal { loc: 1.0, scale: 0.8 },
        }]);
        let before = pit_values(&reg, &[4.0]).unwrap()[0];
        let same = apply_calibrator(&Calibrator::Isotonic(IsotonicCalibrator::identity()), &reg).unwrap();
        assert!((pit_values(&same, &[4.0]).unwrap()[0] - before).abs() < 0.01);

        let iso = fit_isotonic(&[0.9, 0.95, 0.99]).unwrap();
        let shifted = apply_calibrator(&Calibrator::Isotonic(iso.clone()), &reg).unwrap();
        let after = pit_values(&shifted, &[4.0]).unwrap()[0];
        assert!((after - iso.apply(before)).abs() < 0.01);
    }
}
