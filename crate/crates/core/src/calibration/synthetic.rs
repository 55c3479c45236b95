//! Seeded synthetic predictors with known calibration behaviour.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::predictions::{
    Beam, ClassScores, GenerationBeams, Labels, PredictionSet, RegDistribution, RegressionOutput,
};
use super::temperature::softmax;

/// Spread of the true logits of [`overconfident_classifier`].
pub const OVERCONFIDENT_LOGIT_SD: f64 = 1.0;
/// Factor by which [`overconfident_classifier`] sharpens its true logits.
pub const OVERCONFIDENT_SHARPNESS: f64 = 8.0;

/// A `classes`-way classifier whose labels are drawn from `softmax(z)` while
/// it reports `sharpness · z`. With `sharpness = 1` it is calibrated; above 1
/// it is over-confident.
pub fn sharpened_classifier(
    n: usize,
    classes: usize,
    logit_sd: f64,
    sharpness: f64,
    seed: u64,
) -> (PredictionSet, Labels) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, logit_sd).expect("positive spread");
    let mut items = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let z: Vec<f64> = (0..classes).map(|_| normal.sample(&mut rng)).collect();
        let truth = WeightedIndex::new(softmax(&z, 1.0)).expect("valid probabilities");
        let label = truth.sample(&mut rng);
        items.push(ClassScores {
            id: format!("s{i}"),
            scores: z.iter().map(|v| v * sharpness).collect(),
            label: Some(label),
        });
        labels.push(label);
    }
    (PredictionSet::Classification(items), Labels::Classes(labels))
}

/// The 3-class over-confident predictor used to exercise temperature
/// scaling. Its expected calibration error is about 0.33.
pub fn overconfident_classifier(n: usize, seed: u64) -> (PredictionSet, Labels) {
    sharpened_classifier(n, 3, OVERCONFIDENT_LOGIT_SD, OVERCONFIDENT_SHARPNESS, seed)
}

/// Generation outputs whose top-beam confidence equals the probability that
/// the top answer is right.
pub fn calibrated_beams(n: usize, beam_width: usize, seed: u64) -> (PredictionSet, Labels) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.5).expect("positive spread");
    let mut items = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut scores: Vec<f64> = (0..beam_width).map(|_| normal.sample(&mut rng)).collect();
        scores.sort_by(|a, b| b.total_cmp(a));
        let beams: Vec<Beam> = scores
            .iter()
            .enumerate()
            .map(|(k, &score)| Beam {
                text: (k + 1).to_string(),
                score,
            })
            .collect();
        let confidence = softmax(&scores, 1.0)[0];
        let gold = if rng.gen_bool(confidence) {
            beams[0].text.clone()
        } else {
            "0".to_string()
        };
        items.push(GenerationBeams {
            id: format!("g{i}"),
            beams,
            label: Some(gold.clone()),
        });
        labels.push(gold);
    }
    (PredictionSet::Generation(items), Labels::Texts(labels))
}

/// Log-normal regression outputs. Gold counts are drawn with spread
/// `true_scale` while the predictions report `reported_scale`, so equal
/// scales give calibrated quantiles and a smaller reported scale gives
/// over-confident ones.
pub fn lognormal_regression(n: usize, true_scale: f64, reported_scale: f64, seed: u64) -> (PredictionSet, Labels) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, true_scale).expect("positive spread");
    let mut items = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let loc: f64 = rng.gen_range(2.0..6.0);
        let y = (loc + noise.sample(&mut rng)).exp_m1().max(0.0);
        items.push(RegressionOutput {
            id: format!("r{i}"),
            label: Some(y),
            distribution: RegDistribution::LogNormal {
                loc,
                scale: reported_scale,
            },
        });
        labels.push(y);
    }
    (PredictionSet::Regression(items), Labels::Counts(labels))
}

/// Splits a labelled set into two halves, first half then second.
pub fn halves(set: PredictionSet, labels: Labels) -> ((PredictionSet, Labels), (PredictionSet, Labels)) {
    fn cut<T: Clone>(v: &[T]) -> (Vec<T>, Vec<T>) {
        let mid = v.len() / 2;
        (v[..mid].to_vec(), v[mid..].to_vec())
    }
    let (s1, s2) = match set {
        PredictionSet::Classification(v) => {
            let (a, b) = cut(&v);
            (PredictionSet::Classification(a), PredictionSet::Classification(b))
        }
        PredictionSet::Generation(v) => {
            let (a, b) = cut(&v);
            (PredictionSet::Generation(a), PredictionSet::Generation(b))
        }
        PredictionSet::Regression(v) => {
            let (a, b) = cut(&v);
            (PredictionSet::Regression(a), PredictionSet::Regression(b))
        }
    };
    let (l1, l2) = match labels {
        Labels::Classes(v) => {
            let (a, b) = cut(&v);
            (Labels::Classes(a), Labels::Classes(b))
        }
        Labels::Texts(v) => {
            let (a, b) = cut(&v);
            (Labels::Texts(a), Labels::Texts(b))
        }
        Labels::Counts(v) => {
            let (a, b) = cut(&v);
            (Labels::Counts(a), Labels::Counts(b))
        }
    };
    ((s1, l1), (s2, l2))
}
