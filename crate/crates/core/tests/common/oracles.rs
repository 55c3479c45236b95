//! Independent reference implementations used as test oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PAIRS: usize = 200;

pub fn random_count_string(rng: &mut ChaCha8Rng) -> String {
    let value: u64 = match rng.gen_range(0..4) {
        0 => 0,
        1 => rng.gen_range(1..=3),
        2 => rng.gen_range(4..=10),
        _ => rng.gen_range(11..100_000),
    };
    let mut s = value.to_string();
    if rng.gen_bool(0.1) {
        s.insert(0, '0');
    }
    if rng.gen_bool(0.1) {
        s = format!(" {s} ");
    }
    if rng.gen_bool(0.05) {
        s = ["", "n/a", "many", "3a"][rng.gen_range(0..4)].to_string();
    }
    s
}

pub fn pairs(seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..PAIRS)
        .map(|_| {
            let gold = random_count_string(&mut rng);
            let pred = if rng.gen_bool(0.3) {
                gold.clone()
            } else {
                random_count_string(&mut rng)
            };
            (pred, gold)
        })
        .collect()
}

pub fn oracle_exact_match(pred: &str, gold: &str) -> u8 {
    let numeric = |s: &str| {
        let t = s.trim();
        (!t.is_empty() && t.chars().all(|c| c.is_ascii_digit())).then(|| t.parse::<u128>().unwrap())
    };
    match (numeric(pred), numeric(gold)) {
        (Some(a), Some(b)) => u8::from(a == b),
        _ => u8::from(pred.trim() == gold.trim()),
    }
}

/// Multiset intersection by removing matched digits one at a time.
pub fn oracle_digit_f1(pred: &str, gold: &str) -> f64 {
    let p: Vec<char> = pred.chars().filter(char::is_ascii_digit).collect();
    let mut g: Vec<char> = gold.chars().filter(char::is_ascii_digit).collect();
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    let gold_len = g.len();
    let mut common = 0;
    for c in &p {
        if let Some(i) = g.iter().position(|x| x == c) {
            g.remove(i);
            common += 1;
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / gold_len as f64;
    2.0 * precision * recall / (precision + recall)
}

pub fn oracle_bin(scheme: &str, y: u64) -> usize {
    match scheme {
        "four-bin" => match y {
            0 => 0,
            1..=3 => 1,
            4..=10 => 2,
            _ => 3,
        },
        "three-class" => match y {
            0..=3 => 0,
            4..=10 => 1,
            _ => 2,
        },
        _ => unreachable!(),
    }
}

pub fn random_counts(seed: u64) -> (Vec<u64>, Vec<u64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| match rng.gen_range(0..5) {
        0 => 0,
        1 => rng.gen_range(1..=3),
        2 => rng.gen_range(4..=10),
        3 => rng.gen_range(11..=12),
        _ => rng.gen_range(0..1000),
    };
    (0..PAIRS).map(|_| (draw(&mut rng), draw(&mut rng))).unzip()
}

/// Macro precision, recall and F1 over the classes present in either list,
/// from per-class contingency counts.
pub fn oracle_macro_prf(scheme: &str, preds: &[u64], golds: &[u64]) -> (f64, f64, f64) {
    let p: Vec<usize> = preds.iter().map(|&y| oracle_bin(scheme, y)).collect();
    let g: Vec<usize> = golds.iter().map(|&y| oracle_bin(scheme, y)).collect();
    let mut present: Vec<usize> = p.iter().chain(&g).copied().collect();
    present.sort_unstable();
    present.dedup();
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    for &c in &present {
        let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
        for i in 0..p.len() {
            match (p[i] == c, g[i] == c) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fneg += 1.0,
                (false, false) => {}
            }
        }
        sp += if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        sr += if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
        sf += if tp > 0.0 {
            2.0 * tp / (2.0 * tp + fp + fneg)
        } else {
            0.0
        };
    }
    let n = present.len() as f64;
    (sp / n, sr / n, sf / n)
}

/// Monotone least squares by exhaustive search: the optimum is constant on
/// contiguous blocks at the block's weighted mean, so every partition of
/// `0..n` into blocks is tried and the best non-decreasing one kept.
pub fn brute_force_isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = vec![0.0; n];
        let mut start = 0;
        let mut previous = f64::NEG_INFINITY;
        let mut monotone = true;
        for end in 1..=n {
            let cut = end == n || mask & (1 << (end - 1)) != 0;
            if !cut {
                continue;
            }
            let w: f64 = weights[start..end].iter().sum();
            let mean = (start..end).map(|i| weights[i] * values[i]).sum::<f64>() / w;
            if mean < previous - 1e-12 {
                monotone = false;
                break;
            }
            previous = mean;
            fit[start..end].iter_mut().for_each(|f| *f = mean);
            start = end;
        }
        if !monotone {
            continue;
        }
        let sse: f64 = (0..n).map(|i| weights[i] * (fit[i] - values[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b - 1e-15) {
            best = Some((sse, fit));
        }
    }
    best.expect("a single block is always monotone").1
}

/// Every sequence of length `n` over `grid`, in lexicographic order.
pub fn grid_sequences(grid: &[f64], n: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
    let total = grid.len().pow(n as u32);
    (0..total).map(move |mut code| {
        let mut seq = vec![0.0; n];
        for slot in seq.iter_mut().rev() {
            *slot = grid[code % grid.len()];
            code /= grid.len();
        }
        seq
    })
}

/// ECE by assigning each sample to the bin `((m-1)/M, m/M]` that contains
/// it (zero goes to the first bin) and summing `|acc - conf| * n_m / n`.
pub fn direct_ece(confidences: &[f64], correct: &[bool], bins: usize) -> f64 {
    let n = confidences.len() as f64;
    let mut total = 0.0;
    for m in 1..=bins {
        let lo = (m - 1) as f64 / bins as f64;
        let hi = m as f64 / bins as f64;
        let members: Vec<usize> = (0..confidences.len())
            .filter(|&i| {
                let c = confidences[i];
                (c > lo && c <= hi) || (m == 1 && c == 0.0)
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let k = members.len() as f64;
        let acc = members.iter().filter(|&&i| correct[i]).count() as f64 / k;
        let conf = members.iter().map(|&i| confidences[i]).sum::<f64>() / k;
        total += k / n * (acc - conf).abs();
    }
    total
}
