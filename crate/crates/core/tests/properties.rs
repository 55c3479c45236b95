mod common;

use std::collections::BTreeMap;

use common::oracles::direct_ece;
use proptest::prelude::*;
use victim_count::calibration::{
    apply_calibrator, ece, ece_from_bins, fit_isotonic, read_prediction_file, reliability_diagram, softmax,
    write_prediction_file, Calibrator, ClassScores, PredictionSet, TemperatureCalibrator,
};
use victim_count::corpus::{make_splits, EventRecord, Source, SplitPlan, VictimType, FEWSHOT_FRACTIONS};
use victim_count::metrics::{bin_count, digit_f1, exact_match, BinningScheme};
use victim_count::numerals::normalize_numerals;

const WORDS: [&str; 24] = [
    "one",
    "two",
    "three",
    "eleven",
    "twenty",
    "forty-two",
    "hundred",
    "thousand",
    "million",
    "a",
    "an",
    "and",
    "people",
    "were",
    "killed",
    "Five",
    "HUNDRED",
    "no",
    "dozens",
    "of",
    "-",
    ",",
    "12",
    "year-old",
];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..14).prop_map(|w| w.join(" "))
}

fn record(i: usize) -> EventRecord {
    EventRecord {
        id: format!("r{i}"),
        text: "x".into(),
        gold_counts: BTreeMap::from([(VictimType::death(), Some(i as u64))]),
        source: Source::Custom,
        date: None,
    }
}

proptest! {
    #[test]
    fn normalization_is_idempotent(s in sentence()) {
        let once = normalize_numerals(&s);
        prop_assert_eq!(normalize_numerals(&once), once);
    }

    #[test]
    fn binning_is_monotone(a in 0i64..100_000, b in 0i64..100_000) {
        for scheme in [BinningScheme::four_bin(), BinningScheme::three_class()] {
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(bin_count(lo, &scheme).unwrap() <= bin_count(hi, &scheme).unwrap());
        }
    }

    #[test]
    fn string_metrics_are_bounded_and_symmetric(a in "[0-9]{0,6}", b in "[0-9]{0,6}") {
        let f = digit_f1(&a, &b);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - digit_f1(&b, &a)).abs() < 1e-15);
        prop_assert_eq!(exact_match(&a, &a), 1);
        prop_assert_eq!(exact_match(&a, &b), exact_match(&b, &a));
    }

    #[test]
    fn softmax_is_a_distribution_with_stable_argmax(
        scores in prop::collection::vec(-30.0f64..30.0, 1..8),
        t in 0.05f64..20.0,
        shift in -100.0f64..100.0,
    ) {
        let p = softmax(&scores, t);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let argmax = |v: &[f64]| v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best });
        prop_assert_eq!(argmax(&p), argmax(&scores));
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let q = softmax(&shifted, t);
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ece_is_bounded_and_matches_its_bins(
        samples in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..300),
        bins in 1usize..25,
    ) {
        let (conf, correct): (Vec<f64>, Vec<bool>) = samples.into_iter().unzip();
        let e = ece(&conf, &correct, bins).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert_eq!(e, ece_from_bins(&reliability_diagram(&conf, &correct, bins).unwrap()));
        prop_assert_eq!(e, direct_ece(&conf, &correct, bins));
    }

    #[test]
    fn fitted_isotonic_map_is_monotone_in_unit_interval(
        dev in prop::collection::vec(0.0f64..=1.0, 1..200),
        probes in prop::collection::vec(-0.5f64..1.5, 2..40),
    ) {
        let cal = fit_isotonic(&dev).unwrap();
        let mut probes = probes;
        probes.sort_by(f64::total_cmp);
        let mapped: Vec<f64> = probes.iter().map(|&p| cal.apply(p)).collect();
        prop_assert!(mapped.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(mapped.iter().all(|m| (0.0..=1.0).contains(m)));
    }

    #[test]
    fn temperature_preserves_class_predictions(
        rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..30),
        t in 0.05f64..20.0,
    ) {
        let items: Vec<ClassScores> = rows
            .into_iter()
            .enumerate()
            .map(|(i, scores)| ClassScores { id: format!("s{i}"), scores, label: None })
            .collect();
        let set = PredictionSet::Classification(items.clone());
        let cal = Calibrator::Temperature(TemperatureCalibrator::new(t).unwrap());
        let PredictionSet::Classification(scaled) = apply_calibrator(&cal, &set).unwrap() else {
            panic!("kind changed");
        };
        for (a, b) in items.iter().zip(&scaled) {
            prop_assert_eq!(a.argmax(), b.argmax());
        }
    }

    #[test]
    fn splits_partition_and_nest(n in 3usize..120, seed in any::<u64>()) {
        let records: Vec<EventRecord> = (0..n).map(record).collect();
        let plan = SplitPlan { seed, ..SplitPlan::default() };
        let full = make_splits(&records, &plan).unwrap();
        prop_assert_eq!(full.train.len() + full.dev.len() + full.test.len(), n);
        let mut ids: Vec<&str> = full.train.iter().chain(&full.dev).chain(&full.test).map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), n);
        prop_assert_eq!(&make_splits(&records, &plan).unwrap(), &full);

        let mut previous: Option<Vec<String>> = None;
        for fraction in FEWSHOT_FRACTIONS {
            let s = make_splits(&records, &plan.with_fewshot(fraction)).unwrap();
            prop_assert_eq!(&s.test, &full.test);
            let subset: Vec<String> = s.fewshot.iter().map(|r| r.id.clone()).collect();
            if let Some(bigger) = &previous {
                prop_assert!(subset.iter().all(|id| bigger.contains(id)));
            }
            previous = Some(subset);
        }
    }

    #[test]
    fn prediction_files_round_trip(
        rows in prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 4), 0usize..4), 1..20),
    ) {
        let items: Vec<ClassScores> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (scores, label))| ClassScores { id: format!("e{i}"), scores, label: Some(label) })
            .collect();
        let set = PredictionSet::Classification(items);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.jsonl");
        write_prediction_file(&path, &set).unwrap();
        prop_assert_eq!(read_prediction_file(&path).unwrap(), set);
    }
}
