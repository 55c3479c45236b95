//! Model runners and the content-addressed results cache.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::extraction::{run_extraction, Annotations};
use crate::corpus::{write_records, EventRecord, SplitManifest, Task};
use crate::extract::{LexiconSet, Method};
use crate::metrics::BinningScheme;
use crate::{Error, Result};

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "VCOUNT_CACHE_DIR";

/// Everything a runner sees for one experiment cell.
#[derive(Debug, Clone, Copy)]
pub struct CellInputs<'a> {
    /// Task the model is trained for; its victim type is the one predicted.
    pub train_task: &'a Task,
    pub test_task: &'a Task,
    pub fraction: f64,
    pub seed: u64,
    pub train: &'a [EventRecord],
    pub test: &'a [EventRecord],
    pub manifest: &'a SplitManifest,
}

/// Produces a prediction file for a cell.
#[derive(Debug, Clone)]
pub enum Runner {
    /// A rule-based extractor; ignores the training records.
    Builtin {
        method: Method,
        lexicons: LexiconSet,
        annotations: Annotations,
    },
    /// A shell command template.
    Command { template: String },
}

/// A runner that did not yield predictions. Recorded, not raised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFailure(pub String);

fn shell_quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', r"'\''"))
}

fn stderr_tail(raw: &[u8]) -> String {
    let text = String::from_utf8_lossy(raw);
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(5)..].join("\n")
}

impl Runner {
    /// Stable description used in cache keys.
    pub fn describe(&self) -> String {
        match self {
            Runner::Builtin { method, .. } => format!("builtin:{method}"),
            Runner::Command { template } => format!("command:{template}"),
        }
    }

    /// Runs the cell in `workdir` and returns the raw prediction file.
    pub fn run(&self, inputs: &CellInputs<'_>, workdir: &Path) -> Result<std::result::Result<String, RunFailure>> {
        match self {
            Runner::Builtin {
                method,
                lexicons,
                annotations,
            } => {
                let outcome = run_extraction(
                    inputs.test,
                    *method,
                    &inputs.train_task.victim_type,
                    lexicons,
                    annotations,
                    &BinningScheme::four_bin(),
                );
                match outcome {
                    Ok(run) => {
                        let mut out = String::new();
                        for e in &run.extractions {
                            out.push_str(&serde_json::to_string(&e.to_count_line())?);
                            out.push('\n');
                        }
                        Ok(Ok(out))
                    }
                    Err(e) => Ok(Err(RunFailure(e.to_string()))),
                }
            }
            Runner::Command { template } => {
                std::fs::create_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
                let train = workdir.join("train.jsonl");
                let test = workdir.join("test.jsonl");
                let manifest = workdir.join("manifest.json");
                let out = workdir.join("predictions.jsonl");
                write_records(&train, inputs.train)?;
                write_records(&test, inputs.test)?;
                inputs.manifest.write(&manifest)?;
                if out.exists() {
                    std::fs::remove_file(&out).map_err(|e| Error::io(&out, e))?;
                }
                let command = template
                    .replace("{train}", &shell_quote(&train))
                    .replace("{test}", &shell_quote(&test))
                    .replace("{out}", &shell_quote(&out))
                    .replace("{manifest}", &shell_quote(&manifest))
                    .replace("{type}", inputs.train_task.victim_type.as_str());
                log::info!("running `{command}`");
                let output = Command::new("sh")
                    .arg("-c")
                    .arg(&command)
                    .current_dir(workdir)
                    .output()
                    .map_err(|e| Error::io("sh", e))?;
                if !output.status.success() {
                    return Ok(Err(RunFailure(format!(
                        "runner exited with {}: {}",
                        output.status,
                        stderr_tail(&output.stderr)
                    ))));
                }
                match std::fs::read_to_string(&out) {
                    Ok(raw) => Ok(Ok(raw)),
                    Err(_) => Ok(Err(RunFailure("runner wrote no prediction file".into()))),
                }
            }
        }
    }
}

/// Prediction files stored under the hash of everything that produced them.
#[derive(Debug)]
pub struct ResultCache {
    dir: PathBuf,
    writes: Mutex<()>,
}

impl ResultCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResultCache {
            dir: dir.into(),
            writes: Mutex::new(()),
        }
    }

    /// The cache named by [`CACHE_DIR_ENV`], if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_DIR_ENV)
            .filter(|v| !v.is_empty())
            .map(|v| ResultCache::new(PathBuf::from(v)))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Key over the runner, the cell and the serialized input records.
    pub fn key(runner: &Runner, inputs: &CellInputs<'_>) -> Result<String> {
        let mut hasher = Sha256::new();
        let mut feed = |bytes: &[u8]| {
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(bytes);
        };
        feed(runner.describe().as_bytes());
        feed(inputs.train_task.to_string().as_bytes());
        feed(inputs.test_task.to_string().as_bytes());
        feed(&inputs.fraction.to_le_bytes());
        feed(&inputs.seed.to_le_bytes());
        feed(&serde_json::to_vec(inputs.train)?);
        feed(&serde_json::to_vec(inputs.test)?);
        Ok(hex::encode(hasher.finalize()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.jsonl"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, contents: &str) -> Result<()> {
        let _guard = self.writes.lock().unwrap_or_else(|e| e.into_inner());
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
        let dest = self.path(key);
        std::fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))
    }
}

/// Runs a cell through the cache: a hit skips the runner, a successful miss
/// is stored. Failures are never cached.
pub fn run_cached(
    runner: &Runner,
    cache: Option<&ResultCache>,
    inputs: &CellInputs<'_>,
    workdir: &Path,
) -> Result<std::result::Result<String, RunFailure>> {
    let key = match cache {
        Some(_) => Some(ResultCache::key(runner, inputs)?),
        None => None,
    };
    if let (Some(cache), Some(key)) = (cache, &key) {
        if let Some(hit) = cache.get(key) {
            log::debug!("cache hit {key}");
            return Ok(Ok(hit));
        }
    }
    let outcome = runner.run(inputs, workdir)?;
    if let (Some(cache), Some(key), Ok(raw)) = (cache, &key, &outcome) {
        cache.put(key, raw)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Source, VictimType};

    fn fixture() -> (Task, Vec<EventRecord>, SplitManifest) {
        let task = Task::new("toy", VictimType::injury());
        let records = vec![EventRecord {
            id: "a".into(),
            text: "4 people were injured".into(),
            gold_counts: [(VictimType::injury(), Some(4))].into_iter().collect(),
            source: Source::Custom,
            date: None,
        }];
        let manifest = SplitManifest {
            seed: 1,
            fractions: [0.8, 0.1, 0.1],
            fewshot_fraction: 0.0,
            train: vec![],
            dev: vec![],
            test: vec!["a".into()],
            fewshot: vec![],
        };
        (task, records, manifest)
    }

    #[test]
    fn builtin_regex() {
        let (task, records, manifest) = fixture();
        let inputs = CellInputs {
            train_task: &task,
            test_task: &task,
            fraction: 0.0,
            seed: 1,
            train: &[],
            test: &records,
            manifest: &manifest,
        };
        let runner = Runner::Builtin {
            method: Method::Regex,
            lexicons: LexiconSet::defaults(),
            annotations: Annotations::default(),
        };
        let dir = std::env::temp_dir();
        let raw = runner.run(&inputs, &dir).unwrap().unwrap();
        assert_eq!(raw, "{\"id\":\"a\",\"count\":4}\n");
    }

    #[test]
    fn quoting() {
        assert_eq!(shell_quote(Path::new("/tmp/it's")), r"'/tmp/it'\''s'");
    }
}
