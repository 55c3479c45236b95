//! Run directories: `report.json`, `tables/*.csv`, `figures/*.svg` and
//! `manifest.json` with the hashes of every input file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::calibrate::CalibrationOutcome;
use super::config::ExperimentConfig;
use super::experiment::{FewshotCurve, OodMatrix};
use super::svg::{csv_field, heatmap, line_chart};
use super::timeline::Timeline;
use crate::calibration::{bins_to_csv, bins_to_svg};
use crate::{Error, Result};

/// Current UTC time in RFC 3339 form.
pub fn timestamp() -> String {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    chrono::DateTime::from_timestamp(now.as_secs() as i64, 0)
        .map(|t| t.to_rfc3339())
        .unwrap_or_default()
}

/// Hex SHA-256 of a file's contents.
pub fn hash_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Input files of an experiment with their content hashes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputManifest {
    pub files: BTreeMap<String, String>,
}

impl InputManifest {
    pub fn add(&mut self, path: &Path) -> Result<()> {
        let hash = hash_file(path)?;
        self.files.insert(path.display().to_string(), hash);
        Ok(())
    }

    /// Every file an experiment config reads.
    pub fn for_config(config: &ExperimentConfig, config_path: Option<&Path>) -> Result<Self> {
        let mut manifest = InputManifest::default();
        if let Some(path) = config_path {
            manifest.add(path)?;
        }
        for dataset in config.datasets.values() {
            manifest.add(&dataset.path)?;
        }
        for path in [&config.annotations.parses, &config.annotations.frames, &config.lexicon]
            .into_iter()
            .flatten()
        {
            manifest.add(path)?;
        }
        Ok(manifest)
    }
}

/// Top level of `report.json`. Apart from `timestamp` the contents depend
/// only on the inputs and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub timestamp: String,
    pub experiment: String,
    pub seed: u64,
    pub results: T,
}

/// An output directory with `tables/` and `figures/` subdirectories.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        for dir in [root.to_path_buf(), root.join("tables"), root.join("figures")] {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(RunDir {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write(&self, rel: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn write_report<T: Serialize>(&self, report: &Report<T>) -> Result<PathBuf> {
        self.write("report.json", &(serde_json::to_string_pretty(report)? + "\n"))
    }

    pub fn write_manifest(&self, manifest: &InputManifest) -> Result<PathBuf> {
        self.write("manifest.json", &(serde_json::to_string_pretty(manifest)? + "\n"))
    }

    pub fn write_table(&self, name: &str, csv: &str) -> Result<PathBuf> {
        self.write(&format!("tables/{name}.csv"), csv)
    }

    pub fn write_figure(&self, name: &str, svg: &str) -> Result<PathBuf> {
        self.write(&format!("figures/{name}.svg"), svg)
    }
}

/// File-name-safe form of a label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per fraction: scores, calibration error and failure message.
pub fn fewshot_csv(curve: &FewshotCurve) -> String {
    let mut out = String::from(
        "fraction,train_size,status,exact_match,digit_f1,class_accuracy,macro_f1,mse_log,calibration_metric,calibration_error,error\n",
    );
    for row in &curve.rows {
        let r = row.outcome.report();
        let c = row.outcome.calibration();
        let error = match &row.outcome {
            super::experiment::CellOutcome::Failed { error } => csv_field(error),
            _ => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.fraction,
            row.train_size,
            if r.is_some() { "ok" } else { "failed" },
            opt(r.and_then(|r| r.exact_match)),
            opt(r.and_then(|r| r.digit_f1)),
            opt(r.map(|r| r.class_accuracy)),
            opt(r.map(|r| r.macro_scores.f1)),
            opt(r.and_then(|r| r.mse_log)),
            c.map(|c| c.metric.as_str()).unwrap_or(""),
            opt(c.map(|c| c.value)),
            error
        )
        .unwrap();
    }
    out
}

fn headline(report: &crate::metrics::ScoreReport) -> (&'static str, f64) {
    match report.exact_match {
        Some(em) => ("exact match", em),
        None => ("class accuracy", report.class_accuracy),
    }
}

/// Score against training-set fraction, fractions in the order run.
pub fn fewshot_svg(curve: &FewshotCurve) -> String {
    let mut label = "score";
    let points: Vec<(f64, f64)> = curve
        .rows
        .iter()
        .filter_map(|row| {
            let (name, value) = headline(row.outcome.report()?);
            label = name;
            Some((row.fraction, value))
        })
        .collect();
    line_chart(
        &format!("{} few-shot curve", curve.task),
        "training fraction",
        label,
        &[(curve.task.to_string(), points)],
    )
}

/// Writes a few-shot run: report, one table and figure per task, manifest.
pub fn write_fewshot_run(
    dir: &RunDir,
    seed: u64,
    curves: &[FewshotCurve],
    manifest: &InputManifest,
) -> Result<PathBuf> {
    for curve in curves {
        let name = format!("fewshot_{}", slug(&curve.task.to_string()));
        dir.write_table(&name, &fewshot_csv(curve))?;
        dir.write_figure(&name, &fewshot_svg(curve))?;
    }
    dir.write_manifest(manifest)?;
    dir.write_report(&Report {
        timestamp: timestamp(),
        experiment: "fewshot".into(),
        seed,
        results: curves,
    })
}

/// One row per (train, test) cell with every metric and delta.
pub fn ood_csv(matrix: &OodMatrix) -> String {
    let names: Vec<&String> = {
        let mut all: Vec<&String> = matrix.cells.iter().flat_map(|c| c.metrics.keys()).collect();
        all.sort();
        all.dedup();
        all
    };
    let mut out = String::from("train,test,status");
    for n in &names {
        write!(out, ",{n},delta_{n}").unwrap();
    }
    out.push('\n');
    for cell in &matrix.cells {
        write!(
            out,
            "{},{},{}",
            csv_field(&cell.train.to_string()),
            csv_field(&cell.test.to_string()),
            if cell.outcome.report().is_some() {
                "ok"
            } else {
                "failed"
            }
        )
        .unwrap();
        for n in &names {
            write!(
                out,
                ",{},{}",
                opt(cell.metrics.get(*n).copied()),
                opt(cell.deltas.get(*n).copied())
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}

/// Heat map of headline-metric deltas, rows are training tasks.
pub fn ood_svg(matrix: &OodMatrix) -> String {
    let labels: Vec<String> = matrix.tasks.iter().map(ToString::to_string).collect();
    let metric = if matrix.cells.iter().any(|c| c.deltas.contains_key("exact_match")) {
        "exact_match"
    } else {
        "class_accuracy"
    };
    let values: Vec<Vec<Option<f64>>> = matrix
        .tasks
        .iter()
        .map(|train| {
            matrix
                .tasks
                .iter()
                .map(|test| matrix.cell(train, test).and_then(|c| c.deltas.get(metric).copied()))
                .collect()
        })
        .collect();
    heatmap(
        &format!("OOD {metric} delta (row: train, column: test)"),
        &labels,
        &labels,
        &values,
    )
}

pub fn write_ood_run(dir: &RunDir, seed: u64, matrix: &OodMatrix, manifest: &InputManifest) -> Result<PathBuf> {
    dir.write_table("ood", &ood_csv(matrix))?;
    dir.write_figure("ood", &ood_svg(matrix))?;
    dir.write_manifest(manifest)?;
    dir.write_report(&Report {
        timestamp: timestamp(),
        experiment: "ood".into(),
        seed,
        results: matrix,
    })
}

pub fn write_timeline_run(dir: &RunDir, timeline: &Timeline, manifest: &InputManifest) -> Result<PathBuf> {
    let name = format!("timeline_{}", slug(timeline.victim_type.as_str()));
    dir.write_table(&name, &timeline.daily_csv())?;
    dir.write_table(&format!("{name}_events"), &timeline.events_csv())?;
    dir.write_figure(&name, &timeline.to_svg())?;
    dir.write_manifest(manifest)?;
    dir.write_report(&Report {
        timestamp: timestamp(),
        experiment: "timeline".into(),
        seed: 0,
        results: timeline,
    })
}

pub fn write_calibration_run(
    dir: &RunDir,
    seed: u64,
    outcome: &CalibrationOutcome,
    manifest: &InputManifest,
) -> Result<PathBuf> {
    for (name, bins) in [("before", &outcome.bins_before), ("after", &outcome.bins_after)] {
        dir.write_table(&format!("reliability_{name}"), &bins_to_csv(bins))?;
        dir.write_figure(
            &format!("reliability_{name}"),
            &bins_to_svg(bins, &format!("{} {name} calibration", outcome.metric)),
        )?;
    }
    dir.write_manifest(manifest)?;
    dir.write_report(&Report {
        timestamp: timestamp(),
        experiment: "calibration".into(),
        seed,
        results: outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("WAD death"), "wad_death");
    }

    #[test]
    fn timestamp_is_rfc3339() {
        let t = timestamp();
        assert!(chrono::DateTime::parse_from_rfc3339(&t).is_ok(), "{t}");
    }
}
