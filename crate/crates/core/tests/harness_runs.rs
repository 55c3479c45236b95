//! Few-shot and OOD runs over the fixture corpus with builtin and shell
//! runners.

mod common;

use std::collections::BTreeSet;

use common::fixture;
use common::runs::{
    builtin_config, command_config, counting_stub, report_without_timestamp, CONSTANT_STUB, ORACLE_STUB,
};
use victim_count::corpus::{read_records, SplitManifest, Task, VictimType, FEWSHOT_FRACTIONS};
use victim_count::harness::{
    hash_file, run_fewshot, run_ood, write_fewshot_run, write_ood_run, CellOutcome, ExperimentConfig,
    ExperimentContext, InputManifest, RunDir,
};

fn death() -> Task {
    Task::new("events", VictimType::death())
}

fn injury() -> Task {
    Task::new("events", VictimType::injury())
}

fn context(config: &ExperimentConfig, workdir: &std::path::Path) -> ExperimentContext {
    ExperimentContext::new(config, workdir).unwrap()
}

#[test]
fn oracle_stub_scores_every_fraction_perfectly() {
    let work = tempfile::tempdir().unwrap();
    let curve = run_fewshot(
        &context(&command_config(ORACLE_STUB, &["death"]), work.path()),
        &death(),
    )
    .unwrap();
    let fractions: Vec<f64> = curve.rows.iter().map(|r| r.fraction).collect();
    assert_eq!(fractions, FEWSHOT_FRACTIONS);
    assert!(curve.test_size > 0);
    for row in &curve.rows {
        assert_eq!(
            row.outcome.report().unwrap().exact_match,
            Some(1.0),
            "fraction {}",
            row.fraction
        );
    }
    let sizes: Vec<usize> = curve.rows.iter().map(|r| r.train_size).collect();
    assert!(sizes.windows(2).all(|w| w[0] >= w[1]), "{sizes:?}");
    assert_eq!(*sizes.last().unwrap(), 0);
}

#[test]
fn runner_receives_split_files() {
    let work = tempfile::tempdir().unwrap();
    let curve = run_fewshot(
        &context(&command_config(ORACLE_STUB, &["injury"]), work.path()),
        &injury(),
    )
    .unwrap();
    let row = curve.rows.iter().find(|r| r.fraction == 0.5).unwrap();
    let cell = work.path().join("fewshot__events_injury__0.5");
    let train = read_records(&cell.join("train.jsonl")).unwrap();
    let test = read_records(&cell.join("test.jsonl")).unwrap();
    let manifest: SplitManifest =
        serde_json::from_str(&std::fs::read_to_string(cell.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(train.len(), row.train_size);
    assert_eq!(test.len(), curve.test_size);
    assert_eq!(manifest.fewshot, train.iter().map(|r| r.id.clone()).collect::<Vec<_>>());
    assert_eq!(manifest.fewshot_fraction, 0.5);
    let train_ids: BTreeSet<&str> = train.iter().map(|r| r.id.as_str()).collect();
    assert!(test.iter().all(|r| !train_ids.contains(r.id.as_str())));
    assert!(test.iter().all(|r| manifest.test.contains(&r.id)));
}

#[test]
fn runner_failures_are_recorded_per_cell() {
    for (template, message) in [
        ("echo boom >&2; exit 3 # {out}", "boom"),
        ("true {out}", "no prediction file"),
        ("echo garbage > {out}", "not a JSON object"),
    ] {
        let work = tempfile::tempdir().unwrap();
        let curve = run_fewshot(&context(&command_config(template, &["death"]), work.path()), &death()).unwrap();
        for row in &curve.rows {
            match &row.outcome {
                CellOutcome::Failed { error } => assert!(error.contains(message), "{template}: {error}"),
                CellOutcome::Ok { .. } => panic!("{template} should fail"),
            }
        }
    }
}

#[test]
fn command_without_out_placeholder_is_rejected() {
    let raw = serde_json::json!({
        "datasets": {"events": {"path": fixture("events.csv")}},
        "tasks": [{"dataset": "events", "victim_type": "death"}],
        "runner": {"command": "true {test}"}
    });
    assert!(ExperimentConfig::from_json(&raw.to_string()).is_err());
}

#[test]
fn cache_skips_repeated_cells() {
    let work = tempfile::tempdir().unwrap();
    let counter = work.path().join("calls.txt");
    let calls = || {
        std::fs::read_to_string(&counter)
            .map(|s| s.lines().count())
            .unwrap_or(0)
    };
    let mut config = command_config(&counting_stub(&counter), &["death"]);
    config.cache_dir = Some(work.path().join("cache"));

    let first = run_fewshot(&context(&config, &work.path().join("a")), &death()).unwrap();
    assert_eq!(calls(), FEWSHOT_FRACTIONS.len());
    let second = run_fewshot(&context(&config, &work.path().join("b")), &death()).unwrap();
    assert_eq!(calls(), FEWSHOT_FRACTIONS.len());
    assert_eq!(first, second);

    config.seed += 1;
    run_fewshot(&context(&config, &work.path().join("c")), &death()).unwrap();
    assert_eq!(calls(), 2 * FEWSHOT_FRACTIONS.len());
}

#[test]
fn failures_are_not_cached() {
    let work = tempfile::tempdir().unwrap();
    let mut config = command_config("exit 1 # {out}", &["death"]);
    config.cache_dir = Some(work.path().join("cache"));
    run_fewshot(&context(&config, work.path()), &death()).unwrap();
    let cached = std::fs::read_dir(work.path().join("cache"))
        .map(|d| d.count())
        .unwrap_or(0);
    assert_eq!(cached, 0);
}

#[test]
fn builtin_curve_ignores_training_size() {
    let work = tempfile::tempdir().unwrap();
    let curve = run_fewshot(&context(&builtin_config("regex", &["death"]), work.path()), &death()).unwrap();
    let first = curve.rows[0].outcome.metrics();
    assert!(!first.is_empty());
    for row in &curve.rows {
        assert_eq!(row.outcome.metrics(), first, "fraction {}", row.fraction);
    }
}

#[test]
fn ood_diagonal_deltas_are_zero() {
    for config in [
        builtin_config("dependency", &["death", "injury"]),
        command_config(CONSTANT_STUB, &["death", "injury"]),
    ] {
        let work = tempfile::tempdir().unwrap();
        let matrix = run_ood(&context(&config, work.path()), &[death(), injury()]).unwrap();
        assert_eq!(matrix.cells.len(), 4);
        for t in [death(), injury()] {
            let cell = matrix.cell(&t, &t).unwrap();
            assert!(!cell.deltas.is_empty());
            assert!(cell.deltas.values().all(|d| *d == 0.0), "{t}: {:?}", cell.deltas);
        }
        let off = matrix.cell(&death(), &injury()).unwrap();
        let reference = &matrix.cell(&injury(), &injury()).unwrap().metrics;
        for (name, delta) in &off.deltas {
            assert_eq!(*delta, off.metrics[name] - reference[name]);
        }
    }
}

#[test]
fn ood_needs_two_tasks() {
    let work = tempfile::tempdir().unwrap();
    let ctx = context(&builtin_config("regex", &["death"]), work.path());
    assert!(run_ood(&ctx, &[death(), death()]).is_err());
}

#[test]
fn run_directories_hold_reports_tables_and_figures() {
    let work = tempfile::tempdir().unwrap();
    let config = builtin_config("srl", &["death", "injury"]);
    let ctx = context(&config, &work.path().join("scratch"));
    let manifest = InputManifest::for_config(&config, None).unwrap();
    assert_eq!(
        manifest.files[&fixture("events.csv").display().to_string()],
        hash_file(&fixture("events.csv")).unwrap()
    );
    assert_eq!(manifest.files.len(), 3);

    let fewshot = RunDir::create(&work.path().join("fewshot")).unwrap();
    let curves = vec![
        run_fewshot(&ctx, &death()).unwrap(),
        run_fewshot(&ctx, &injury()).unwrap(),
    ];
    write_fewshot_run(&fewshot, config.seed, &curves, &manifest).unwrap();
    let ood = RunDir::create(&work.path().join("ood")).unwrap();
    write_ood_run(
        &ood,
        config.seed,
        &run_ood(&ctx, &[death(), injury()]).unwrap(),
        &manifest,
    )
    .unwrap();

    for (dir, files) in [
        (
            fewshot.root(),
            vec![
                "tables/fewshot_events_death.csv",
                "tables/fewshot_events_injury.csv",
                "figures/fewshot_events_death.svg",
                "figures/fewshot_events_injury.svg",
            ],
        ),
        (ood.root(), vec!["tables/ood.csv", "figures/ood.svg"]),
    ] {
        let report = std::fs::read_to_string(dir.join("report.json")).unwrap();
        assert!(report.starts_with("{\n  \"timestamp\""), "{report}");
        let saved: InputManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(saved, manifest);
        for file in files {
            let body = std::fs::read_to_string(dir.join(file)).unwrap();
            if file.ends_with(".svg") {
                assert!(body.starts_with("<svg"), "{file}");
            } else {
                assert!(body.lines().count() > 1, "{file}");
            }
        }
    }
    let table = std::fs::read_to_string(fewshot.root().join("tables/fewshot_events_death.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + FEWSHOT_FRACTIONS.len());
}

#[test]
fn repeated_runs_are_identical_apart_from_timestamp() {
    let work = tempfile::tempdir().unwrap();
    let config = command_config(ORACLE_STUB, &["death", "injury"]);
    let manifest = InputManifest::for_config(&config, None).unwrap();
    let mut reports = Vec::new();
    for name in ["one", "two"] {
        let ctx = context(&config, &work.path().join(format!("{name}-scratch")));
        let dir = RunDir::create(&work.path().join(name)).unwrap();
        let curves = vec![run_fewshot(&ctx, &death()).unwrap()];
        write_fewshot_run(&dir, config.seed, &curves, &manifest).unwrap();
        reports.push((
            report_without_timestamp(&dir.root().join("report.json")),
            std::fs::read(dir.root().join("tables/fewshot_events_death.csv")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
}
