//! Calibration errors and post-hoc calibrators.
//!
//! Confidence-based errors use `M` equal-width bins over `[0, 1]`. Bin `m`
//! (1-based) covers `((m−1)/M, m/M]`, and a confidence of exactly 0 goes into
//! the first bin.
//!
//! - [`ece`]: bin-weighted `|accuracy − confidence|` for classification and
//!   for the top beam of generation outputs.
//! - [`reg_ce`]: quantile calibration error for regression outputs, computed
//!   from the predictive CDF evaluated at the true counts.
//! - [`TemperatureCalibrator`] and [`IsotonicCalibrator`] recalibrate
//!   classification/generation scores and regression quantiles.

mod calibrator;
mod isotonic;
mod predictions;
pub mod synthetic;
mod temperature;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use calibrator::{apply_calibrator, pit_values, Calibrator, RECALIBRATION_LEVELS};
pub use isotonic::{fit_isotonic, pava, IsotonicCalibrator};
pub(crate) use predictions::parse_prediction_lines;
pub use predictions::{
    read_prediction_file, write_prediction_file, Beam, ClassScores, GenerationBeams, Labels, PredictionKind,
    PredictionSet, QuantilePoint, RegDistribution, RegressionOutput,
};
pub use temperature::{
    confidences, fit_temperature, gen_confidence, nll, softmax, ConfidenceOptions, Correctness, TemperatureCalibrator,
    LOG_T_TOLERANCE, T_MAX, T_MIN,
};

use crate::{Error, Result};

/// Default number of confidence bins.
pub const DEFAULT_BINS: usize = 10;
/// Default number of beam candidates fed to the generation softmax.
pub const DEFAULT_BEAM_WIDTH: usize = 5;

/// One equal-width confidence bin.
///
/// For classification and generation `value` is the accuracy in the bin and
/// `mean_confidence` the average confidence. For regression, `value` is the
/// empirical frequency `freq(B_m)` and `mean_confidence` is the bin's upper
/// bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub value: f64,
    /// `count / n`.
    pub weight: f64,
}

fn check_unit(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(bad) => Err(Error::Domain(format!("{what} {bad} outside [0, 1]"))),
        None => Ok(()),
    }
}

fn upper_bound(m: usize, bins: usize) -> f64 {
    m as f64 / bins as f64
}

/// 0-based bin index for `c` under the `((m−1)/M, m/M]` convention.
pub fn bin_index(c: f64, bins: usize) -> usize {
    let mut k = ((c * bins as f64).ceil() as usize).clamp(1, bins);
    while k > 1 && c <= upper_bound(k - 1, bins) {
        k -= 1;
    }
    while k < bins && c > upper_bound(k, bins) {
        k += 1;
    }
    k - 1
}

/// Per-bin confidence, accuracy and weight. All `bins` bins are returned;
/// empty ones have zero count, weight, confidence and accuracy.
pub fn reliability_diagram(confidences: &[f64], correct: &[bool], bins: usize) -> Result<Vec<CalibrationBin>> {
    if confidences.len() != correct.len() {
        return Err(Error::LengthMismatch {
            left: confidences.len(),
            right: correct.len(),
        });
    }
    if confidences.is_empty() {
        return Err(Error::Empty("no confidences".into()));
    }
    if bins == 0 {
        return Err(Error::Config("bin count must be at least 1".into()));
    }
    check_unit(confidences, "confidence")?;

    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0f64; bins];
    let mut hits = vec![0usize; bins];
    for (&c, &ok) in confidences.iter().zip(correct) {
        let b = bin_index(c, bins);
        count[b] += 1;
        conf_sum[b] += c;
        hits[b] += usize::from(ok);
    }
    let n = confidences.len() as f64;
    Ok((0..bins)
        .map(|b| {
            let k = count[b];
            let (mean_confidence, value) = if k == 0 {
                (0.0, 0.0)
            } else {
                (conf_sum[b] / k as f64, hits[b] as f64 / k as f64)
            };
            CalibrationBin {
                lower: upper_bound(b, bins),
                upper: upper_bound(b + 1, bins),
                count: k,
                mean_confidence,
                value,
                weight: k as f64 / n,
            }
        })
        .collect())
}

/// Expected calibration error from precomputed bins.
pub fn ece_from_bins(bins: &[CalibrationBin]) -> f64 {
    bins.iter()
        .filter(|b| b.count > 0)
        .map(|b| b.weight * (b.value - b.mean_confidence).abs())
        .sum()
}

/// Expected calibration error: `Σ_m |B_m|/n · |acc(B_m) − conf(B_m)|`.
pub fn ece(confidences: &[f64], correct: &[bool], bins: usize) -> Result<f64> {
    Ok(ece_from_bins(&reliability_diagram(confidences, correct, bins)?))
}

/// Empirical frequency at each bin upper bound for regression quantiles.
pub fn regression_reliability(quantiles: &[f64], bins: usize) -> Result<Vec<CalibrationBin>> {
    if quantiles.is_empty() {
        return Err(Error::Empty("no quantiles".into()));
    }
    if bins == 0 {
        return Err(Error::Config("bin count must be at least 1".into()));
    }
    check_unit(quantiles, "quantile")?;
    let mut sorted = quantiles.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok((1..=bins)
        .map(|m| {
            let sup = upper_bound(m, bins);
            let below = sorted.partition_point(|&q| q <= sup);
            let below_lower = if m == 1 {
                0
            } else {
                sorted.partition_point(|&q| q <= upper_bound(m - 1, bins))
            };
            let in_bin = below - below_lower;
            CalibrationBin {
                lower: upper_bound(m - 1, bins),
                upper: sup,
                count: in_bin,
                mean_confidence: sup,
                value: below as f64 / n,
                weight: in_bin as f64 / n,
            }
        })
        .collect())
}

/// Quantile calibration error: `(1/M) Σ_m |freq(B_m) − sup(B_m)|`, where
/// `freq(B_m)` is the fraction of quantiles at or below `sup(B_m) = m/M`.
pub fn reg_ce(quantiles: &[f64], bins: usize) -> Result<f64> {
    Ok(reg_ce_from_bins(&regression_reliability(quantiles, bins)?))
}

/// Quantile calibration error from precomputed regression bins.
pub fn reg_ce_from_bins(bins: &[CalibrationBin]) -> f64 {
    bins.iter().map(|b| (b.value - b.upper).abs()).sum::<f64>() / bins.len() as f64
}

/// CSV with columns `bin_lower,bin_upper,mean_conf,accuracy,weight`.
pub fn bins_to_csv(bins: &[CalibrationBin]) -> String {
    let mut out = String::from("bin_lower,bin_upper,mean_conf,accuracy,weight\n");
    for b in bins {
        writeln!(
            out,
            "{},{},{},{},{}",
            b.lower, b.upper, b.mean_confidence, b.value, b.weight
        )
        .unwrap();
    }
    out
}

/// Reliability diagram as a standalone SVG: one bar per non-empty bin at its
/// accuracy, a gap bar up to the mean confidence, and the diagonal.
pub fn bins_to_svg(bins: &[CalibrationBin], title: &str) -> String {
    let (w, h, pad) = (320.0, 320.0, 40.0);
    let plot = w - 2.0 * pad;
    let x = |v: f64| pad + v * plot;
    let y = |v: f64| h - pad - v * plot;
    let mut svg =
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        w / 2.0,
        xml_escape(title)
    )
    .unwrap();
    writeln!(
        svg,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{plot}\" height=\"{plot}\" fill=\"none\" stroke=\"#444\"/>"
    )
    .unwrap();
    for b in bins.iter().filter(|b| b.count > 0) {
        let left = x(b.lower);
        let width = x(b.upper) - left;
        let top = y(b.value);
        writeln!(
            svg,
            "<rect x=\"{left:.2}\" y=\"{top:.2}\" width=\"{width:.2}\" height=\"{:.2}\" fill=\"#3b6fb6\" stroke=\"#fff\"/>",
            y(0.0) - top
        )
        .unwrap();
        let (lo, hi) = if b.mean_confidence > b.value {
            (b.value, b.mean_confidence)
        } else {
            (b.mean_confidence, b.value)
        };
        writeln!(
            svg,
            "<rect x=\"{left:.2}\" y=\"{:.2}\" width=\"{width:.2}\" height=\"{:.2}\" fill=\"#d9534f\" fill-opacity=\"0.4\"/>",
            y(hi),
            y(lo) - y(hi)
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>",
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bin_convention() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(0.30000001, 10), 3);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.5, 2), 0);
        assert_eq!(bin_index(0.7, 1), 0);
        for m in 1..=20 {
            let b = m as f64 / 20.0;
            assert_eq!(bin_index(b, 20), m - 1, "{b}");
        }
    }

    #[test]
    fn ece_all_confident_all_correct() {
        assert_eq!(ece(&[1.0; 4], &[true; 4], 10).unwrap(), 0.0);
    }

    #[test]
    fn ece_all_confident_half_correct() {
        assert_eq!(ece(&[1.0; 4], &[true, false, true, false], 10).unwrap(), 0.5);
    }

    #[test]
    fn ece_two_bins() {
        assert_abs_diff_eq!(ece(&[0.2, 0.8], &[false, true], 2).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn ece_domain_errors() {
        assert!(matches!(ece(&[1.2], &[true], 10), Err(Error::Domain(_))));
        assert!(matches!(ece(&[-0.1], &[true], 10), Err(Error::Domain(_))));
        assert!(ece(&[], &[], 10).is_err());
        assert!(ece(&[0.5], &[true, false], 10).is_err());
        assert!(ece(&[0.5], &[true], 0).is_err());
    }

    #[test]
    fn single_sample_diagram() {
        let bins = reliability_diagram(&[0.42], &[true], 10).unwrap();
        let used: Vec<_> = bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(used.len(), 1);
        assert_eq!(used[0].weight, 1.0);
        assert_eq!(used[0].lower, 0.4);
    }

    #[test]
    fn reg_ce_uniform_two_bins() {
        assert_eq!(reg_ce(&[0.25, 0.75], 2).unwrap(), 0.0);
    }

    #[test]
    fn reg_ce_extremes() {
        assert_abs_diff_eq!(reg_ce(&[0.0; 7], 10).unwrap(), 0.45, epsilon = 1e-12);
        assert_abs_diff_eq!(reg_ce(&[1.0; 7], 10).unwrap(), 0.45, epsilon = 1e-12);
        assert!(matches!(reg_ce(&[1.5], 10), Err(Error::Domain(_))));
    }

    #[test]
    fn regression_bins_weights_sum_to_one() {
        let q = [0.0, 0.05, 0.31, 0.5, 0.99, 1.0];
        let bins = regression_reliability(&q, 10).unwrap();
        assert_abs_diff_eq!(bins.iter().map(|b| b.weight).sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(bins.last().unwrap().value, 1.0);
    }

    #[test]
    fn csv_and_svg() {
        let bins = reliability_diagram(&[0.2, 0.8], &[false, true], 2).unwrap();
        let csv = bins_to_csv(&bins);
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().nth(2).unwrap(), "0.5,1,0.8,1,0.5");
        let svg = bins_to_svg(&bins, "a < b");
        assert!(svg.starts_with("<svg") && svg.contains("a &lt; b"));
    }
}
