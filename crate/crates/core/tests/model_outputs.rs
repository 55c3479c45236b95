//! Prediction files as an external model adapter writes them: parsed,
//! scored, calibrated and written back.

mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::runs::command_config;
use victim_count::calibration::{
    apply_calibrator, read_prediction_file, write_prediction_file, Calibrator, PredictionKind, PredictionSet,
};
use victim_count::corpus::{Task, VictimType};
use victim_count::harness::{
    evaluate_outputs, read_model_outputs, run_calibration_experiment, run_fewshot, CalibrationSettings, EvalSettings,
    ExperimentContext, ModelOutputs,
};

const CLF: &str = r#"{"id": "a", "scores": [2.0, 0.1, -1.0, -3.0], "label": 0}
{"id": "b", "scores": [-1.0, 0.5, 1.5, -2.0], "label": 2}
{"id": "c", "scores": [0.0, 0.2, 0.1, 3.0], "label": 3}
{"id": "d", "scores": [0.3, 1.2, 0.0, -1.0], "label": 0}
"#;

const GEN: &str = r#"{"id": "a", "beams": [{"text": "0", "score": -0.1}, {"text": "1", "score": -2.5}], "label": "0"}
{"id": "b", "beams": [{"text": "4", "score": -1.2}, {"text": "5", "score": -0.9}], "label": "5"}
{"id": "c", "beams": [{"text": "12", "score": -0.3}], "label": "12"}
{"id": "d", "beams": [{"text": "3", "score": -0.7}, {"text": "1", "score": -0.8}, {"text": "2", "score": -4.0}], "label": "1"}
"#;

const REG: &str = r#"{"id": "a", "loc": 0.1, "scale": 0.5, "label": 0}
{"id": "b", "loc": 1.8, "scale": 0.4, "label": 5}
{"id": "c", "quantiles": [{"p": 0.1, "value": 6}, {"p": 0.5, "value": 11}, {"p": 0.9, "value": 20}], "label": 12}
{"id": "d", "loc": 0.6, "scale": 0.3, "label": 1}
"#;

fn gold() -> BTreeMap<String, u64> {
    [("a", 0), ("b", 5), ("c", 12), ("d", 1)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn each_kind_parses_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    for (body, kind, metric) in [
        (CLF, PredictionKind::Classification, "ece"),
        (GEN, PredictionKind::Generation, "gen_ece"),
        (REG, PredictionKind::Regression, "reg_ce"),
    ] {
        let path = write(dir.path(), "p.jsonl", body);
        assert_eq!(read_prediction_file(&path).unwrap().kind(), kind);
        let ModelOutputs::Model(set) = read_model_outputs(&path).unwrap() else {
            panic!("{kind} read as counts");
        };
        assert_eq!(set.len(), 4);
        let eval = evaluate_outputs(&ModelOutputs::Model(set), &gold(), &EvalSettings::default()).unwrap();
        let calibration = eval.calibration.unwrap();
        assert_eq!(calibration.metric, metric);
        assert!((0.0..=1.0).contains(&calibration.value));
        assert!((0.0..=1.0).contains(&eval.report.class_accuracy));
    }
}

#[test]
fn generation_beams_are_ranked_by_score() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "gen.jsonl", GEN);
    let PredictionSet::Generation(items) = read_prediction_file(&path).unwrap() else {
        panic!("not generation");
    };
    assert_eq!(items[1].beams[0].text, "5");
    let eval = evaluate_outputs(&read_model_outputs(&path).unwrap(), &gold(), &EvalSettings::default()).unwrap();
    assert_eq!(eval.report.exact_match, Some(0.75));
}

#[test]
fn regression_reports_pinball_losses() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "reg.jsonl", REG);
    let eval = evaluate_outputs(&read_model_outputs(&path).unwrap(), &gold(), &EvalSettings::default()).unwrap();
    assert_eq!(eval.report.pinball.len(), 2);
    assert!(eval.report.mse_log.unwrap() >= 0.0);
}

#[test]
fn invalid_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        "{\"id\": \"a\", \"scores\": [1.0, 2.0]}\n{\"id\": \"b\", \"beams\": [{\"text\": \"1\", \"score\": 0.0}]}\n",
        "{\"id\": \"a\", \"beams\": []}\n",
        "{\"id\": \"a\", \"loc\": 1.0, \"scale\": -1.0}\n",
        "{\"id\": \"a\", \"quantiles\": [{\"p\": 0.1, \"value\": 9}, {\"p\": 0.9, \"value\": 2}]}\n",
        "{\"id\": \"a\", \"scores\": [1.0, 2.0]}\n{\"id\": \"b\", \"scores\": [1.0]}\n",
        "{\"id\": \"a\", \"wat\": 1}\n",
    ] {
        let path = write(dir.path(), "bad.jsonl", body);
        assert!(read_prediction_file(&path).is_err(), "{body}");
    }
}

#[test]
fn classification_width_must_match_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "clf.jsonl", CLF);
    let settings = EvalSettings {
        scheme: victim_count::metrics::BinningScheme::three_class(),
        ..EvalSettings::default()
    };
    assert!(evaluate_outputs(&read_model_outputs(&path).unwrap(), &gold(), &settings).is_err());
}

#[test]
fn calibrators_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for (body, name) in [(CLF, "temperature"), (GEN, "temperature"), (REG, "isotonic")] {
        let set = read_prediction_file(&write(dir.path(), "p.jsonl", body)).unwrap();
        let labels = set.inline_labels().unwrap();
        let outcome =
            run_calibration_experiment(&set, &labels, &set, &labels, &CalibrationSettings::default()).unwrap();
        assert_eq!(outcome.calibrator.name(), name);
        assert_eq!((outcome.n_dev, outcome.n_test), (4, 4));

        let saved = dir.path().join("calibrator.json");
        outcome.calibrator.write(&saved).unwrap();
        let loaded = Calibrator::read(&saved).unwrap();
        assert_eq!(loaded, outcome.calibrator);

        let calibrated = apply_calibrator(&loaded, &set).unwrap();
        assert_eq!(calibrated.kind(), set.kind());
        assert_eq!(calibrated.ids(), set.ids());
        let out = dir.path().join("calibrated.jsonl");
        write_prediction_file(&out, &calibrated).unwrap();
        let reread = read_prediction_file(&out).unwrap();
        assert_eq!(reread, calibrated);
        evaluate_outputs(&ModelOutputs::Model(reread), &gold(), &EvalSettings::default()).unwrap();
    }
}

#[test]
fn command_runner_may_emit_generation_beams() {
    let stub = r#"sed -E 's/^\{"id":("[^"]*").*"{type}":([0-9]+).*$/{"id":\1,"beams":[{"text":"\2","score":-0.2},{"text":"0","score":-1.9}]}/' {test} > {out}"#;
    let work = tempfile::tempdir().unwrap();
    let ctx = ExperimentContext::new(&command_config(stub, &["injury"]), work.path()).unwrap();
    let curve = run_fewshot(&ctx, &Task::new("events", VictimType::injury())).unwrap();
    for row in &curve.rows {
        assert_eq!(row.outcome.report().unwrap().exact_match, Some(1.0));
        assert_eq!(row.outcome.calibration().unwrap().metric, "gen_ece");
    }
}

#[test]
fn split_manifest_layout() {
    let work = tempfile::tempdir().unwrap();
    let ctx = ExperimentContext::new(&command_config(common::runs::ORACLE_STUB, &["death"]), work.path()).unwrap();
    run_fewshot(&ctx, &Task::new("events", VictimType::death())).unwrap();
    let raw = std::fs::read_to_string(work.path().join("fewshot__events_death__1/manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&raw).unwrap();
    let keys: Vec<&str> = manifest.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        [
            "dev",
            "fewshot",
            "fewshot_fraction",
            "fractions",
            "seed",
            "test",
            "train"
        ]
    );
    assert_eq!(manifest["fewshot"], manifest["train"]);
    assert_eq!(manifest["seed"], 7);
}
