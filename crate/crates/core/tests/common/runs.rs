//! Experiment configs over the fixture corpus and shell stub runners.

use std::path::Path;

use serde_json::{json, Value};
use victim_count::harness::ExperimentConfig;

use super::fixture;

/// Copies each test record's gold count for `{type}` into the prediction
/// file, so every cell scores perfectly.
pub const ORACLE_STUB: &str =
    r#"sed -E 's/^\{"id":("[^"]*").*"{type}":([0-9]+).*$/{"id":\1,"count":\2}/' {test} > {out}"#;

/// Predicts 1 for every test record.
pub const CONSTANT_STUB: &str = r#"sed -E 's/^\{"id":("[^"]*").*$/{"id":\1,"count":1}/' {test} > {out}"#;

/// Like [`ORACLE_STUB`] but appends a line to `counter` on every call.
pub fn counting_stub(counter: &Path) -> String {
    format!("echo run >> '{}' && {ORACLE_STUB}", counter.display())
}

fn base(runner: Value, tasks: &[&str]) -> Value {
    json!({
        "seed": 7,
        "datasets": {
            "events": {
                "path": fixture("events.csv"),
                "schema": {
                    "id": "id",
                    "text": "text",
                    "counts": {"death": "death", "injury": "injury"},
                    "date": "date"
                }
            }
        },
        "tasks": tasks.iter().map(|t| json!({"dataset": "events", "victim_type": t})).collect::<Vec<_>>(),
        "runner": runner,
        "annotations": {"parses": fixture("parses.conllu"), "frames": fixture("frames.jsonl")},
    })
}

pub fn command_config(template: &str, tasks: &[&str]) -> ExperimentConfig {
    ExperimentConfig::from_json(&base(json!({"command": template}), tasks).to_string()).unwrap()
}

pub fn builtin_config(method: &str, tasks: &[&str]) -> ExperimentConfig {
    ExperimentConfig::from_json(&base(json!({"builtin": method}), tasks).to_string()).unwrap()
}

/// `report.json` with the timestamp removed.
pub fn report_without_timestamp(path: &Path) -> Value {
    let mut report: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    report
        .as_object_mut()
        .unwrap()
        .remove("timestamp")
        .expect("timestamp field");
    report
}
