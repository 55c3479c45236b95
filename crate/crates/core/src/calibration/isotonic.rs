use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Weighted pool-adjacent-violators: the non-decreasing sequence minimizing
/// `Σ wᵢ (fᵢ − yᵢ)²`.
pub fn pava(values: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::Domain("weights must be positive".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("values must be finite".into()));
    }
    // Each block: (weighted mean, total weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&y, &w) in values.iter().zip(weights) {
        blocks.push((y, w, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (m2, w2, n2) = blocks.pop().expect("two blocks");
            let (m1, w1, n1) = blocks.pop().expect("two blocks");
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, n1 + n2));
        }
    }
    Ok(blocks
        .into_iter()
        .flat_map(|(m, _, n)| std::iter::repeat_n(m, n))
        .collect())
}

/// Monotone map on `[0, 1]` given by `(input, output)` breakpoints, linear
/// between breakpoints and constant beyond the first and last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicCalibrator {
    pub breakpoints: Vec<(f64, f64)>,
}

impl IsotonicCalibrator {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let cal = IsotonicCalibrator { breakpoints };
        cal.validate()?;
        Ok(cal)
    }

    pub fn identity() -> Self {
        IsotonicCalibrator {
            breakpoints: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() {
            return Err(Error::Domain("isotonic map needs at least one breakpoint".into()));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.breakpoints.iter().any(|&(x, y)| !unit(x) || !unit(y)) {
            return Err(Error::Domain("isotonic breakpoints must lie in [0, 1]".into()));
        }
        if self.breakpoints.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 < w[0].1) {
            return Err(Error::Domain(
                "isotonic breakpoints must be strictly increasing in input and non-decreasing in output".into(),
            ));
        }
        Ok(())
    }

    pub fn apply(&self, x: f64) -> f64 {
        let points = &self.breakpoints;
        let first = points[0];
        let last = points[points.len() - 1];
        let y = if x <= first.0 {
            first.1
        } else if x >= last.0 {
            last.1
        } else {
            let hi = points.partition_point(|p| p.0 <= x);
            let (x0, y0) = points[hi - 1];
            let (x1, y1) = points[hi];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        };
        y.clamp(0.0, 1.0)
    }
}

/// Fits the map from predicted quantile to the fraction of development
/// samples whose quantile is at or below it.
pub fn fit_isotonic(dev_quantiles: &[f64]) -> Result<IsotonicCalibrator> {
    if dev_quantiles.is_empty() {
        return Err(Error::Fitting("no development quantiles".into()));
    }
    if let Some(bad) = dev_quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
        return Err(Error::Domain(format!("quantile {bad} outside [0, 1]")));
    }
    let mut sorted = dev_quantiles.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        xs.push(sorted[i]);
        ys.push(j as f64 / n);
        ws.push((j - i) as f64);
        i = j;
    }
    let fitted = pava(&ys, &ws)?;
    IsotonicCalibrator::new(
        xs.into_iter()
            .zip(fitted.into_iter().map(|y| y.clamp(0.0, 1.0)))
            .collect(),
    )
}
