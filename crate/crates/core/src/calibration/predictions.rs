use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionKind {
    Classification,
    Generation,
    Regression,
}

impl fmt::Display for PredictionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictionKind::Classification => "classification",
            PredictionKind::Generation => "generation",
            PredictionKind::Regression => "regression",
        })
    }
}

impl std::str::FromStr for PredictionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clf" | "classification" => Ok(PredictionKind::Classification),
            "gen" | "generation" => Ok(PredictionKind::Generation),
            "reg" | "regression" => Ok(PredictionKind::Regression),
            other => Err(Error::Config(format!("unknown prediction kind `{other}`"))),
        }
    }
}

/// Pre-softmax class scores for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub id: String,
    pub scores: Vec<f64>,
    /// Gold class index, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

impl ClassScores {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, s) in self.scores.iter().enumerate() {
            if *s > self.scores[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub text: String,
    pub score: f64,
}

/// Beam-search candidates for one sample, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationBeams {
    pub id: String,
    pub beams: Vec<Beam>,
    /// Gold answer string, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub p: f64,
    pub value: f64,
}

/// Predictive distribution over a count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegDistribution {
    /// `log(1 + count)` is normal with mean `loc` and standard deviation
    /// `scale`.
    LogNormal { loc: f64, scale: f64 },
    /// Points of the quantile function, sorted by `p`.
    Quantiles { quantiles: Vec<QuantilePoint> },
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

impl RegDistribution {
    fn validate(&self) -> std::result::Result<(), String> {
        match self {
            RegDistribution::LogNormal { loc, scale } => {
                if !loc.is_finite() || !scale.is_finite() || *scale <= 0.0 {
                    return Err(format!("need finite loc and positive scale, got ({loc}, {scale})"));
                }
            }
            RegDistribution::Quantiles { quantiles } => {
                if quantiles.is_empty() {
                    return Err("empty quantile list".into());
                }
                if quantiles
                    .iter()
                    .any(|q| !(0.0..=1.0).contains(&q.p) || !q.value.is_finite())
                {
                    return Err("quantile levels must lie in [0, 1] with finite values".into());
                }
                if quantiles.windows(2).any(|w| w[1].p < w[0].p || w[1].value < w[0].value) {
                    return Err("quantile points must be non-decreasing in p and value".into());
                }
            }
        }
        Ok(())
    }

    /// Predictive CDF at count `y`.
    ///
    /// Quantile lists are interpolated linearly; below the smallest value the
    /// CDF is 0 and above the largest it is 1.
    pub fn cdf(&self, y: f64) -> f64 {
        match self {
            RegDistribution::LogNormal { loc, scale } => standard_normal().cdf((y.max(0.0).ln_1p() - loc) / scale),
            RegDistribution::Quantiles { quantiles } => {
                let first = quantiles[0];
                let last = quantiles[quantiles.len() - 1];
                if y < first.value {
                    return 0.0;
                }
                if y >= last.value {
                    return if y > last.value { 1.0 } else { last.p };
                }
                // Highest p whose value is still <= y.
                let hi = quantiles.partition_point(|q| q.value <= y);
                let a = quantiles[hi - 1];
                let b = quantiles[hi];
                a.p + (b.p - a.p) * (y - a.value) / (b.value - a.value)
            }
        }
    }

    /// Predictive quantile at level `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            RegDistribution::LogNormal { loc, scale } => {
                let z = standard_normal().inverse_cdf(p.clamp(1e-12, 1.0 - 1e-12));
                (loc + scale * z).exp_m1().max(0.0)
            }
            RegDistribution::Quantiles { quantiles } => {
                let first = quantiles[0];
                let last = quantiles[quantiles.len() - 1];
                if p <= first.p {
                    return first.value;
                }
                if p >= last.p {
                    return last.value;
                }
                let hi = quantiles.partition_point(|q| q.p < p);
                let a = quantiles[hi - 1];
                let b = quantiles[hi];
                if b.p == a.p {
                    return b.value;
                }
                a.value + (b.value - a.value) * (p - a.p) / (b.p - a.p)
            }
        }
    }

    /// Point estimate: the predictive median.
    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionOutput {
    pub id: String,
    /// Gold count, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<f64>,
    #[serde(flatten)]
    pub distribution: RegDistribution,
}

/// Model outputs for a set of samples.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictionSet {
    Classification(Vec<ClassScores>),
    Generation(Vec<GenerationBeams>),
    Regression(Vec<RegressionOutput>),
}

impl PredictionSet {
    pub fn kind(&self) -> PredictionKind {
        match self {
            PredictionSet::Classification(_) => PredictionKind::Classification,
            PredictionSet::Generation(_) => PredictionKind::Generation,
            PredictionSet::Regression(_) => PredictionKind::Regression,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PredictionSet::Classification(v) => v.len(),
            PredictionSet::Generation(v) => v.len(),
            PredictionSet::Regression(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<&str> {
        match self {
            PredictionSet::Classification(v) => v.iter().map(|p| p.id.as_str()).collect(),
            PredictionSet::Generation(v) => v.iter().map(|p| p.id.as_str()).collect(),
            PredictionSet::Regression(v) => v.iter().map(|p| p.id.as_str()).collect(),
        }
    }

    /// Gold labels carried inline by every line of the set.
    pub fn inline_labels(&self) -> Result<Labels> {
        fn collect<T, L: Clone>(
            items: &[T],
            id: impl Fn(&T) -> &str,
            label: impl Fn(&T) -> Option<&L>,
        ) -> Result<Vec<L>> {
            items
                .iter()
                .map(|p| {
                    label(p)
                        .cloned()
                        .ok_or_else(|| Error::Domain(format!("prediction `{}` carries no label", id(p))))
                })
                .collect()
        }
        Ok(match self {
            PredictionSet::Classification(v) => Labels::Classes(collect(v, |p| &p.id, |p| p.label.as_ref())?),
            PredictionSet::Generation(v) => Labels::Texts(collect(v, |p| &p.id, |p| p.label.as_ref())?),
            PredictionSet::Regression(v) => Labels::Counts(collect(v, |p| &p.id, |p| p.label.as_ref())?),
        })
    }

    /// Checks the per-kind invariants and sorts beams best-first.
    pub fn validated(mut self) -> Result<Self> {
        let bad = |id: &str, msg: String| Error::Domain(format!("prediction `{id}`: {msg}"));
        match &mut self {
            PredictionSet::Classification(items) => {
                let width = items.first().map_or(0, |p| p.scores.len());
                for p in items.iter() {
                    if p.scores.is_empty() || p.scores.iter().any(|s| !s.is_finite()) {
                        return Err(bad(&p.id, "scores must be non-empty and finite".into()));
                    }
                    if p.scores.len() != width {
                        return Err(bad(&p.id, format!("expected {width} scores, got {}", p.scores.len())));
                    }
                }
            }
            PredictionSet::Generation(items) => {
                for p in items.iter_mut() {
                    if p.beams.is_empty() {
                        return Err(bad(&p.id, "empty beam list".into()));
                    }
                    if p.beams.iter().any(|b| !b.score.is_finite()) {
                        return Err(bad(&p.id, "beam scores must be finite".into()));
                    }
                    p.beams.sort_by(|a, b| b.score.total_cmp(&a.score));
                }
            }
            PredictionSet::Regression(items) => {
                for p in items.iter() {
                    p.distribution.validate().map_err(|m| bad(&p.id, m))?;
                }
            }
        }
        Ok(self)
    }
}

/// Gold labels aligned with a [`PredictionSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum Labels {
    Classes(Vec<usize>),
    Texts(Vec<String>),
    Counts(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes(v) => v.len(),
            Labels::Texts(v) => v.len(),
            Labels::Counts(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> PredictionKind {
        match self {
            Labels::Classes(_) => PredictionKind::Classification,
            Labels::Texts(_) => PredictionKind::Generation,
            Labels::Counts(_) => PredictionKind::Regression,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Line {
    Classification(ClassScores),
    Generation(GenerationBeams),
    Regression(RegressionOutput),
}

/// Reads a JSON-lines prediction file. All lines must share one kind.
pub fn read_prediction_file(path: &Path) -> Result<PredictionSet> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_prediction_lines(&raw, &path.display().to_string())
}

pub(crate) fn parse_prediction_lines(raw: &str, origin: &str) -> Result<PredictionSet> {
    let mut clf = Vec::new();
    let mut gen = Vec::new();
    let mut reg = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(line)
            .map_err(|e| Error::Domain(format!("{origin}:{}: not a prediction line ({e})", i + 1)))?;
        match parsed {
            Line::Classification(p) => clf.push(p),
            Line::Generation(p) => gen.push(p),
            Line::Regression(p) => reg.push(p),
        }
    }
    let kinds = [!clf.is_empty(), !gen.is_empty(), !reg.is_empty()]
        .iter()
        .filter(|k| **k)
        .count();
    if kinds > 1 {
        return Err(Error::Domain(format!("{origin}: mixed prediction kinds")));
    }
    let set = if !gen.is_empty() {
        PredictionSet::Generation(gen)
    } else if !reg.is_empty() {
        PredictionSet::Regression(reg)
    } else {
        PredictionSet::Classification(clf)
    };
    set.validated()
}

pub fn write_prediction_file(path: &Path, set: &PredictionSet) -> Result<()> {
    let mut out = String::new();
    let mut push = |line: String| {
        out.push_str(&line);
        out.push('\n');
    };
    match set {
        PredictionSet::Classification(v) => v.iter().try_for_each(|p| serde_json::to_string(p).map(&mut push))?,
        PredictionSet::Generation(v) => v.iter().try_for_each(|p| serde_json::to_string(p).map(&mut push))?,
        PredictionSet::Regression(v) => v.iter().try_for_each(|p| serde_json::to_string(p).map(&mut push))?,
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
