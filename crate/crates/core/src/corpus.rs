//! Event datasets: loading, filtering, deterministic splits and task pairings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result};

/// A kind of victim that can be counted, e.g. `death` or `injury`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct VictimType(String);

impl VictimType {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_uppercase() || c.is_whitespace()) {
            return Err(Error::Config(format!(
                "victim type `{name}` must be a non-empty lowercase identifier"
            )));
        }
        Ok(VictimType(name))
    }

    pub fn death() -> Self {
        VictimType("death".into())
    }

    pub fn injury() -> Self {
        VictimType("injury".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for VictimType {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        VictimType::new(value)
    }
}

impl From<VictimType> for String {
    fn from(value: VictimType) -> Self {
        value.0
    }
}

impl std::str::FromStr for VictimType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VictimType::new(s)
    }
}

impl fmt::Display for VictimType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Which dataset a record came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "WAD")]
    Wad,
    #[serde(rename = "NAVCO")]
    Navco,
    #[serde(rename = "EMM")]
    Emm,
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Wad => "WAD",
            Source::Navco => "NAVCO",
            Source::Emm => "EMM",
            Source::Custom => "custom",
        })
    }
}

/// One event description with its gold counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub text: String,
    pub gold_counts: BTreeMap<VictimType, Option<u64>>,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

impl EventRecord {
    pub fn gold(&self, victim_type: &VictimType) -> Option<u64> {
        self.gold_counts.get(victim_type).copied().flatten()
    }
}

/// Column mapping for a dataset file.
///
/// ```json
/// {"id": "event_id", "text": "description",
///  "counts": {"death": "deaths", "injury": "injured"},
///  "date": "event_date", "source": "WAD"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub id: String,
    pub text: String,
    pub counts: BTreeMap<VictimType, String>,
    #[serde(default)]
    pub date: Option<String>,
    #[serde(default = "default_source")]
    pub source: Source,
}

fn default_source() -> Source {
    Source::Custom
}

impl DatasetSchema {
    /// Schema with columns `id`, `text` and one count column per victim type
    /// named after the type.
    pub fn simple(types: &[VictimType]) -> Self {
        DatasetSchema {
            id: "id".into(),
            text: "text".into(),
            counts: types.iter().map(|t| (t.clone(), t.to_string())).collect(),
            date: None,
            source: Source::Custom,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: DatasetSchema =
            serde_json::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if schema.counts.is_empty() {
            return Err(Error::Config("schema names no count column".into()));
        }
        Ok(schema)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Delimited(u8),
    JsonLines,
}

fn detect_format(path: &Path) -> Result<Format> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "csv" => Ok(Format::Delimited(b',')),
        "tsv" | "tab" => Ok(Format::Delimited(b'\t')),
        "jsonl" | "ndjson" | "json" => Ok(Format::JsonLines),
        _ => Err(Error::Config(format!(
            "cannot infer dataset format from `{}`; use .csv, .tsv or .jsonl",
            path.display()
        ))),
    }
}

/// Raw cell value before count parsing.
enum Cell<'a> {
    Missing,
    Text(&'a str),
    Number(f64),
}

fn is_missing_text(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("null")
}

fn parse_count_cell(cell: Cell<'_>) -> std::result::Result<Option<u64>, String> {
    let value = match cell {
        Cell::Missing => return Ok(None),
        Cell::Text(s) if is_missing_text(s) => return Ok(None),
        Cell::Text(s) => {
            let t = s.trim();
            match t.parse::<u64>() {
                Ok(v) => return Ok(Some(v)),
                Err(_) => t.parse::<f64>().map_err(|_| format!("count `{t}` is not a number"))?,
            }
        }
        Cell::Number(v) => v,
    };
    if value.is_nan() {
        return Ok(None);
    }
    if value < 0.0 || value.fract() != 0.0 || !value.is_finite() {
        return Err(format!("count {value} is not a non-negative integer"));
    }
    Ok(Some(value as u64))
}

struct RowBuilder<'s> {
    schema: &'s DatasetSchema,
    path: PathBuf,
}

impl RowBuilder<'_> {
    fn build<'a>(&self, line: u64, get: &dyn Fn(&str) -> Option<Cell<'a>>) -> Result<EventRecord> {
        let malformed = |message: String| Error::MalformedRow {
            path: self.path.clone(),
            line,
            message,
        };
        let id = match get(&self.schema.id) {
            Some(Cell::Text(s)) if !s.trim().is_empty() => s.trim().to_string(),
            Some(Cell::Number(n)) => format_number_id(n),
            _ => return Err(malformed("missing id".into())),
        };
        let text = match get(&self.schema.text) {
            Some(Cell::Text(s)) if !s.trim().is_empty() => s.to_string(),
            _ => return Err(malformed(format!("record `{id}` has empty text"))),
        };
        let mut gold_counts = BTreeMap::new();
        for (victim_type, column) in &self.schema.counts {
            let cell = get(column).unwrap_or(Cell::Missing);
            let count = parse_count_cell(cell).map_err(malformed)?;
            gold_counts.insert(victim_type.clone(), count);
        }
        let date = self.schema.date.as_ref().and_then(|c| match get(c) {
            Some(Cell::Text(s)) if !is_missing_text(s) => Some(s.trim().to_string()),
            _ => None,
        });
        Ok(EventRecord {
            id,
            text,
            gold_counts,
            source: self.schema.source.clone(),
            date,
        })
    }
}

fn format_number_id(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        n.to_string()
    }
}

/// Loads a dataset, dropping records whose requested counts are missing and,
/// when `drop_zero` is set, records whose requested counts are all zero.
///
/// CSV and TSV files are read with a header row; `.jsonl` files hold one JSON
/// object per line. Row order is preserved.
pub fn load_dataset(path: &Path, schema: &DatasetSchema, drop_zero: bool) -> Result<Vec<EventRecord>> {
    if schema.counts.is_empty() {
        return Err(Error::Config("schema names no count column".into()));
    }
    let builder = RowBuilder {
        schema,
        path: path.to_path_buf(),
    };
    let records = match detect_format(path)? {
        Format::Delimited(delimiter) => load_delimited(path, delimiter, &builder)?,
        Format::JsonLines => load_json_lines(path, &builder)?,
    };
    Ok(records
        .into_iter()
        .filter(|r| r.gold_counts.values().all(Option::is_some))
        .filter(|r| !drop_zero || r.gold_counts.values().any(|c| *c != Some(0)))
        .collect())
}

fn load_delimited(path: &Path, delimiter: u8, builder: &RowBuilder<'_>) -> Result<Vec<EventRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(file);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(csv_error(path, e)),
    };
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let schema = builder.schema;
    let mut required: Vec<&str> = vec![&schema.id, &schema.text];
    required.extend(schema.counts.values().map(String::as_str));
    required.extend(schema.date.as_deref());
    for column in required {
        if !headers.iter().any(|h| h == column) {
            return Err(Error::Config(format!(
                "unknown column `{column}` in {}",
                path.display()
            )));
        }
    }
    let index: BTreeMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let get = |column: &str| index.get(column).and_then(|&i| row.get(i)).map(Cell::Text);
        records.push(builder.build(line, &get)?);
    }
    Ok(records)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            message: format!("{other:?}"),
        },
    }
}

fn load_json_lines(path: &Path, builder: &RowBuilder<'_>) -> Result<Vec<EventRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut columns_checked = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let Value::Object(object) = value else {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                line: line_no,
                message: "expected a JSON object".into(),
            });
        };
        if !columns_checked {
            let schema = builder.schema;
            for column in [&schema.id, &schema.text].into_iter().chain(schema.counts.values()) {
                if !object.contains_key(column) {
                    return Err(Error::Config(format!(
                        "unknown column `{column}` in {}",
                        path.display()
                    )));
                }
            }
            columns_checked = true;
        }
        let get = |column: &str| {
            object.get(column).map(|v| match v {
                Value::Null => Cell::Missing,
                Value::String(s) => Cell::Text(s),
                Value::Number(n) => Cell::Number(n.as_f64().unwrap_or(f64::NAN)),
                _ => Cell::Missing,
            })
        };
        records.push(builder.build(line_no, &get)?);
    }
    Ok(records)
}

/// Writes records as JSON lines, one [`EventRecord`] per line.
pub fn write_records(path: &Path, records: &[EventRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads records previously written by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<EventRecord>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRow {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Training-set fractions used for few-shot curves, largest first.
pub const FEWSHOT_FRACTIONS: [f64; 6] = [1.0, 0.5, 0.1, 0.05, 0.005, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub train: f64,
    pub dev: f64,
    pub test: f64,
    pub fewshot_fraction: f64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            seed: 0,
            train: 0.8,
            dev: 0.1,
            test: 0.1,
            fewshot_fraction: 1.0,
        }
    }
}

impl SplitPlan {
    pub fn with_fewshot(&self, fraction: f64) -> Self {
        SplitPlan {
            fewshot_fraction: fraction,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::Config("split fractions must be strictly positive".into()));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must sum to 1".into()));
        }
        if !FEWSHOT_FRACTIONS
            .iter()
            .any(|f| (f - self.fewshot_fraction).abs() < 1e-12)
        {
            return Err(Error::Config(format!(
                "few-shot fraction {} is not one of {FEWSHOT_FRACTIONS:?}",
                self.fewshot_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<EventRecord>,
    pub dev: Vec<EventRecord>,
    pub test: Vec<EventRecord>,
    /// Subset of `train` of size `round(fewshot_fraction * |train|)`.
    pub fewshot: Vec<EventRecord>,
}

impl Splits {
    pub fn manifest(&self, plan: &SplitPlan) -> SplitManifest {
        let ids = |rs: &[EventRecord]| rs.iter().map(|r| r.id.clone()).collect();
        SplitManifest {
            seed: plan.seed,
            fractions: [plan.train, plan.dev, plan.test],
            fewshot_fraction: plan.fewshot_fraction,
            train: ids(&self.train),
            dev: ids(&self.dev),
            test: ids(&self.test),
            fewshot: ids(&self.fewshot),
        }
    }
}

/// Record ids per split, as written next to experiment outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub fractions: [f64; 3],
    pub fewshot_fraction: f64,
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
    pub fewshot: Vec<String>,
}

impl SplitManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Partitions `records` into train/dev/test and draws the few-shot subset.
///
/// The record order is shuffled once with a seeded ChaCha generator and cut
/// by the plan's fractions, so the same seed always yields the same
/// partition. The few-shot subset is a prefix of a second seeded permutation
/// of the training split, which nests smaller subsets inside larger ones.
/// Each split keeps the records in their original relative order.
pub fn make_splits(records: &[EventRecord], plan: &SplitPlan) -> Result<Splits> {
    plan.validate()?;
    let n = records.len();
    if n < 3 {
        return Err(Error::Domain(format!("need at least 3 records to split, got {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    order.shuffle(&mut rng);

    let n_train = ((plan.train * n as f64).round() as usize).clamp(1, n - 2);
    let n_dev = ((plan.dev * n as f64).round() as usize).clamp(1, n - n_train - 1);

    let pick = |idx: &[usize]| -> Vec<EventRecord> {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| records[i].clone()).collect()
    };
    let train_idx = &order[..n_train];
    let dev_idx = &order[n_train..n_train + n_dev];
    let test_idx = &order[n_train + n_dev..];

    let mut fewshot_order = train_idx.to_vec();
    fewshot_order.sort_unstable();
    let mut fewshot_rng = ChaCha8Rng::seed_from_u64(plan.seed ^ 0x5eed_f3a5_0000_0001);
    fewshot_order.shuffle(&mut fewshot_rng);
    let k = (plan.fewshot_fraction * n_train as f64).round() as usize;

    Ok(Splits {
        train: pick(train_idx),
        dev: pick(dev_idx),
        test: pick(test_idx),
        fewshot: pick(&fewshot_order[..k.min(n_train)]),
    })
}

/// A (dataset, victim type) combination.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Task {
    pub dataset: String,
    pub victim_type: VictimType,
}

impl Task {
    pub fn new(dataset: impl Into<String>, victim_type: VictimType) -> Self {
        Task {
            dataset: dataset.into(),
            victim_type,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.dataset, self.victim_type)
    }
}

/// An out-of-distribution pairing and its in-distribution reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OodPair {
    pub train: Task,
    pub test: Task,
    /// Always `(test, test)`.
    pub reference: (Task, Task),
}

/// All ordered pairs of distinct tasks, each with its in-distribution
/// reference.
pub fn ood_pairs(tasks: &[Task]) -> Result<Vec<OodPair>> {
    let distinct: BTreeSet<&Task> = tasks.iter().collect();
    if distinct.len() < 2 {
        return Err(Error::Domain("OOD pairing needs at least two distinct tasks".into()));
    }
    let mut seen = BTreeSet::new();
    let unique: Vec<&Task> = tasks.iter().filter(|t| seen.insert(*t)).collect();
    let mut pairs = Vec::new();
    for train in &unique {
        for test in &unique {
            if train != test {
                pairs.push(OodPair {
                    train: (*train).clone(),
                    test: (*test).clone(),
                    reference: ((*test).clone(), (*test).clone()),
                });
            }
        }
    }
    Ok(pairs)
}
