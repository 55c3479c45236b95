//! `vcount`: victim-count extraction, scoring and calibration from the shell.
//!
//! Every subcommand writes JSON to stdout. `--pretty` adds a human-readable
//! summary on stderr. Exit status is 0 on success, 1 for invalid input or
//! usage and 2 for filesystem errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use victim_count::calibration::{
    apply_calibrator, read_prediction_file, write_prediction_file, ConfidenceOptions, Correctness, PredictionKind,
    DEFAULT_BEAM_WIDTH, DEFAULT_BINS,
};
use victim_count::corpus::{load_dataset, DatasetSchema, EventRecord, Task, VictimType};
use victim_count::extract::{LexiconSet, Method};
use victim_count::harness::{
    emit_timeline, evaluate_outputs, event_counts, gold_counts, parse_date, read_model_outputs,
    run_calibration_experiment, run_extraction, run_fewshot, run_ood, write_calibration_run, write_extractions,
    write_fewshot_run, write_ood_run, write_timeline_run, Annotations, CalibrationSettings, EvalSettings,
    ExperimentConfig, ExperimentContext, InputManifest, RunDir, DEFAULT_QUANTILES,
};
use victim_count::metrics::BinningScheme;
use victim_count::numerals::normalize_numerals;
use victim_count::Error;

#[derive(Debug, Parser)]
#[command(name = "vcount", version, about = "Victim-count extraction and evaluation toolkit")]
struct Cli {
    /// Random seed; overrides the seed in an experiment config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print a human-readable summary to stderr
    #[arg(long, global = true)]
    pretty: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a rule-based extractor over a dataset
    Extract(ExtractArgs),
    /// Score a prediction file against gold counts
    Evaluate(EvaluateArgs),
    /// Fit a calibrator on dev predictions and report test error before and after
    Calibrate(CalibrateArgs),
    /// Run a few-shot experiment from a config file
    Fewshot(ExperimentArgs),
    /// Run an out-of-distribution experiment from a config file
    Ood(ExperimentArgs),
    /// Aggregate predicted counts into a daily timeline
    Timeline(TimelineArgs),
    /// Rewrite spelled-out numerals as digits, one input line at a time
    Normalize(NormalizeArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset file (.csv, .tsv or .jsonl)
    #[arg(long)]
    data: PathBuf,

    /// Column-mapping JSON file [default: columns id, text and one per victim type]
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// Extraction method: regex, dep or srl
    #[arg(long)]
    method: Method,

    /// Victim type to count, e.g. death or injury
    #[arg(long = "type")]
    victim_type: VictimType,

    #[command(flatten)]
    data: DataArgs,

    /// CoNLL dependency parses, required by the dep method
    #[arg(long)]
    parses: Option<PathBuf>,

    /// SRL frames as JSON lines, required by the srl method
    #[arg(long)]
    frames: Option<PathBuf>,

    /// Lexicon file of [type] and [type.predicates] sections [default: built-in death and injury lists]
    #[arg(long)]
    lexicon: Option<PathBuf>,

    /// Binning scheme for the accuracy report
    #[arg(long, default_value = "four-bin")]
    scheme: String,

    /// Output prediction file (JSON lines)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Prediction file: counts, beams, class scores or regression outputs
    #[arg(long)]
    preds: PathBuf,

    /// Gold file: a dataset, or JSON lines of {"id", "count"}
    #[arg(long)]
    gold: PathBuf,

    /// Victim type whose gold counts to read from a dataset
    #[arg(long = "type")]
    victim_type: Option<VictimType>,

    /// Column-mapping JSON file for a dataset gold file
    #[arg(long)]
    schema: Option<PathBuf>,

    /// Binning scheme: four-bin or three-class
    #[arg(long, default_value = "four-bin")]
    scheme: String,

    /// Number of calibration bins
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,

    /// Beams kept when computing generation confidence
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    beam: usize,

    /// Quantile levels for pinball loss on regression outputs
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_QUANTILES.to_vec())]
    quantiles: Vec<f64>,

    /// Count a generated answer as correct when it falls in the gold class
    #[arg(long)]
    class_correctness: bool,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Prediction kind: clf, gen or reg
    #[arg(long)]
    kind: PredictionKind,

    /// Dev predictions with inline labels, used for fitting
    #[arg(long)]
    dev: PathBuf,

    /// Test predictions with inline labels, used for scoring
    #[arg(long)]
    test: PathBuf,

    /// Number of calibration bins
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,

    /// Beams kept when computing generation confidence
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    beam: usize,

    /// Judge generated answers by class under this scheme instead of exact match
    #[arg(long)]
    class_scheme: Option<String>,

    /// Write the fitted calibrator here
    #[arg(long)]
    save_calibrator: Option<PathBuf>,

    /// Write the recalibrated test predictions here
    #[arg(long)]
    apply_out: Option<PathBuf>,

    /// Run directory for report.json, reliability tables and figures
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment config file (JSON)
    #[arg(long)]
    config: PathBuf,

    /// Run directory for report.json, tables/, figures/ and manifest.json
    #[arg(long)]
    out: PathBuf,

    /// Results cache directory; overrides the config and VCOUNT_CACHE_DIR
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    /// Scratch directory for runner inputs and outputs [default: <out>/cells]
    #[arg(long)]
    workdir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TimelineArgs {
    /// Prediction file: counts, beams or regression outputs
    #[arg(long)]
    preds: PathBuf,

    /// Dataset file holding the event dates
    #[arg(long)]
    data: PathBuf,

    /// Column-mapping JSON file [default: columns id, text, date and the victim type]
    #[arg(long)]
    schema: Option<PathBuf>,

    /// Victim type the predictions count
    #[arg(long = "type")]
    victim_type: VictimType,

    /// First day to include (YYYY-MM-DD)
    #[arg(long)]
    from: Option<String>,

    /// Last day to include (YYYY-MM-DD)
    #[arg(long)]
    to: Option<String>,

    /// Beams kept when computing generation confidence
    #[arg(long, default_value_t = DEFAULT_BEAM_WIDTH)]
    beam: usize,

    /// Run directory for the timeline tables and figure
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NormalizeArgs {
    /// Text file to normalize
    #[arg(long = "in")]
    input: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let io = e.chain().any(|cause| {
        cause.downcast_ref::<Error>().is_some_and(Error::is_io) || cause.downcast_ref::<std::io::Error>().is_some()
    });
    if io {
        2
    } else {
        1
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let pretty = cli.pretty;
    match cli.command {
        Command::Extract(args) => extract(args, pretty),
        Command::Evaluate(args) => evaluate(args, pretty),
        Command::Calibrate(args) => calibrate(args, pretty),
        Command::Fewshot(args) => experiment(args, cli.seed, false, pretty),
        Command::Ood(args) => experiment(args, cli.seed, true, pretty),
        Command::Timeline(args) => timeline(args, pretty),
        Command::Normalize(args) => normalize(args),
    }
}

fn emit<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

/// Two-column table of the scalar fields of a JSON object.
fn summary(title: &str, value: &Value) {
    eprintln!("{title}");
    let Value::Object(map) = value else { return };
    for (key, v) in map {
        let shown = match v {
            Value::Number(n) => match n.as_f64() {
                Some(x) if n.is_f64() => format!("{x:.4}"),
                _ => n.to_string(),
            },
            Value::String(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Object(inner) if inner.values().all(Value::is_number) && !inner.is_empty() => inner
                .iter()
                .map(|(k, x)| format!("{k}={}", x.as_f64().map_or(String::new(), |x| format!("{x:.4}"))))
                .collect::<Vec<_>>()
                .join(" "),
            _ => continue,
        };
        eprintln!("  {key:<20} {shown}");
    }
}

fn load_records(data: &Path, schema: Option<&Path>, default: DatasetSchema) -> anyhow::Result<Vec<EventRecord>> {
    let schema = match schema {
        Some(path) => DatasetSchema::from_file(path)?,
        None => default,
    };
    Ok(load_dataset(data, &schema, false)?)
}

fn extract(args: ExtractArgs, pretty: bool) -> anyhow::Result<()> {
    let scheme = BinningScheme::by_name(&args.scheme)?;
    let records = load_records(
        &args.data.data,
        args.data.schema.as_deref(),
        DatasetSchema::simple(std::slice::from_ref(&args.victim_type)),
    )?;
    let lexicons = match &args.lexicon {
        Some(path) => LexiconSet::from_file(path)?,
        None => LexiconSet::defaults(),
    };
    let annotations = Annotations::load(args.parses.as_deref(), args.frames.as_deref())?;
    let run = run_extraction(
        &records,
        args.method,
        &args.victim_type,
        &lexicons,
        &annotations,
        &scheme,
    )?;
    write_extractions(&args.out, &run.extractions)?;
    let out = serde_json::json!({
        "method": run.method,
        "type": run.victim_type,
        "records": records.len(),
        "extracted": run.extractions.len(),
        "skipped": run.skipped,
        "out": args.out,
        "report": run.report,
    });
    if pretty {
        summary(
            &format!("{} extraction of {} counts", run.method, run.victim_type),
            &out,
        );
        summary("scores", &serde_json::to_value(&run.report)?);
    }
    emit(&out)
}

/// Gold counts from either a `{"id", "count"}` JSON-lines file or a dataset.
fn load_gold(args: &EvaluateArgs) -> anyhow::Result<BTreeMap<String, u64>> {
    let is_jsonl = matches!(args.gold.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson"));
    if is_jsonl && args.schema.is_none() {
        let raw = std::fs::read_to_string(&args.gold)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", args.gold.display())))?;
        let first: Option<Value> = raw
            .lines()
            .find(|l| !l.trim().is_empty())
            .and_then(|l| serde_json::from_str(l).ok());
        if first
            .as_ref()
            .is_some_and(|v| v.get("count").is_some() && v.get("text").is_none())
        {
            let mut gold = BTreeMap::new();
            for (i, line) in raw.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: Value =
                    serde_json::from_str(line).with_context(|| format!("{}:{}", args.gold.display(), i + 1))?;
                let (Some(id), Some(count)) = (v.get("id"), v.get("count").and_then(Value::as_u64)) else {
                    bail!(
                        "{}:{}: expected {{\"id\", \"count\"}} with a non-negative integer count",
                        args.gold.display(),
                        i + 1
                    );
                };
                let id = match id {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                if gold.insert(id.clone(), count).is_some() {
                    bail!("duplicate gold id `{id}`");
                }
            }
            return Ok(gold);
        }
    }
    let Some(victim_type) = &args.victim_type else {
        bail!("--type is required when the gold file is a dataset");
    };
    let records = load_records(
        &args.gold,
        args.schema.as_deref(),
        DatasetSchema::simple(std::slice::from_ref(victim_type)),
    )?;
    Ok(gold_counts(&records, victim_type))
}

fn evaluate(args: EvaluateArgs, pretty: bool) -> anyhow::Result<()> {
    let scheme = BinningScheme::by_name(&args.scheme)?;
    let correctness = if args.class_correctness {
        Correctness::Class(scheme.clone())
    } else {
        Correctness::Exact
    };
    let settings = EvalSettings {
        scheme,
        quantiles: args.quantiles.clone(),
        bins: args.bins,
        confidence: ConfidenceOptions {
            beam_width: args.beam,
            correctness,
        },
    };
    let outputs = read_model_outputs(&args.preds)?;
    let gold = load_gold(&args)?;
    let evaluation = match evaluate_outputs(&outputs, &gold, &settings) {
        Ok(evaluation) => evaluation,
        Err(Error::IdMismatch {
            without_prediction,
            without_gold,
        }) => {
            if !without_prediction.is_empty() {
                eprintln!("gold ids without a prediction: {}", without_prediction.join(", "));
            }
            if !without_gold.is_empty() {
                eprintln!("predicted ids without gold: {}", without_gold.join(", "));
            }
            bail!(
                "prediction and gold ids differ ({} missing predictions, {} missing gold)",
                without_prediction.len(),
                without_gold.len()
            );
        }
        Err(e) => return Err(e.into()),
    };
    if pretty {
        let report = serde_json::to_value(&evaluation.report)?;
        summary(
            &format!("{} predictions against {}", evaluation.report.n, args.gold.display()),
            &report,
        );
        if let Some(c) = &evaluation.calibration {
            eprintln!("  {:<20} {:.4}", c.metric, c.value);
        }
    }
    emit(&evaluation)
}

fn calibrate(args: CalibrateArgs, pretty: bool) -> anyhow::Result<()> {
    let dev = read_prediction_file(&args.dev)?;
    let test = read_prediction_file(&args.test)?;
    for (name, set) in [("dev", &dev), ("test", &test)] {
        if set.kind() != args.kind {
            return Err(Error::KindMismatch {
                expected: args.kind.to_string(),
                found: format!("{} in the {name} file", set.kind()),
            }
            .into());
        }
    }
    let correctness = match &args.class_scheme {
        Some(name) => Correctness::Class(BinningScheme::by_name(name)?),
        None => Correctness::Exact,
    };
    let settings = CalibrationSettings {
        bins: args.bins,
        confidence: ConfidenceOptions {
            beam_width: args.beam,
            correctness,
        },
    };
    let outcome = run_calibration_experiment(&dev, &dev.inline_labels()?, &test, &test.inline_labels()?, &settings)?;
    if let Some(path) = &args.save_calibrator {
        outcome.calibrator.write(path)?;
    }
    if let Some(path) = &args.apply_out {
        write_prediction_file(path, &apply_calibrator(&outcome.calibrator, &test)?)?;
    }
    if let Some(dir) = &args.out_dir {
        let mut manifest = InputManifest::default();
        manifest.add(&args.dev)?;
        manifest.add(&args.test)?;
        write_calibration_run(&RunDir::create(dir)?, 0, &outcome, &manifest)?;
    }
    if pretty {
        let mut v = serde_json::to_value(&outcome)?;
        if let Value::Object(map) = &mut v {
            map.remove("calibrator");
        }
        summary(
            &format!("{} calibration ({})", outcome.kind, outcome.calibrator.name()),
            &v,
        );
    }
    emit(&outcome)
}

fn experiment(args: ExperimentArgs, seed: Option<u64>, ood: bool, pretty: bool) -> anyhow::Result<()> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(dir) = &args.cache_dir {
        config.cache_dir = Some(dir.clone());
    }
    let manifest = InputManifest::for_config(&config, Some(&args.config))?;
    let run_dir = RunDir::create(&args.out)?;
    let workdir = args.workdir.clone().unwrap_or_else(|| args.out.join("cells"));
    let ctx = ExperimentContext::new(&config, &workdir)?;
    let report_path = if ood {
        let matrix = run_ood(&ctx, &config.tasks)?;
        if pretty {
            eprintln!("OOD deltas (train -> test)");
            for cell in &matrix.cells {
                let shown = cell
                    .deltas
                    .iter()
                    .map(|(k, v)| format!("{k}={v:+.4}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                eprintln!(
                    "  {} -> {}: {}",
                    cell.train,
                    cell.test,
                    if shown.is_empty() { "failed".into() } else { shown }
                );
            }
        }
        write_ood_run(&run_dir, config.seed, &matrix, &manifest)?
    } else {
        let curves = config
            .tasks
            .iter()
            .map(|task: &Task| run_fewshot(&ctx, task))
            .collect::<victim_count::Result<Vec<_>>>()?;
        if pretty {
            for curve in &curves {
                eprintln!("{} (test size {})", curve.task, curve.test_size);
                for row in &curve.rows {
                    let m = row.outcome.metrics();
                    let shown = m
                        .iter()
                        .map(|(k, v)| format!("{k}={v:.4}"))
                        .collect::<Vec<_>>()
                        .join(" ");
                    eprintln!(
                        "  {:<8} n={:<6} {}",
                        row.fraction,
                        row.train_size,
                        if shown.is_empty() { "failed".into() } else { shown }
                    );
                }
            }
        }
        write_fewshot_run(&run_dir, config.seed, &curves, &manifest)?
    };
    let raw = std::fs::read_to_string(&report_path)?;
    let report: Value = serde_json::from_str(&raw)?;
    emit(&report)
}

fn timeline(args: TimelineArgs, pretty: bool) -> anyhow::Result<()> {
    let day = |raw: &Option<String>, flag: &str| -> anyhow::Result<Option<NaiveDate>> {
        raw.as_deref()
            .map(|s| parse_date(s).with_context(|| format!("--{flag}: cannot parse date `{s}`")))
            .transpose()
    };
    let range = match (day(&args.from, "from")?, day(&args.to, "to")?) {
        (None, None) => None,
        (from, to) => {
            let from = from.unwrap_or(NaiveDate::MIN);
            let to = to.unwrap_or(NaiveDate::MAX);
            if from > to {
                bail!("--from {from} is after --to {to}");
            }
            Some((from, to))
        }
    };
    let mut default = DatasetSchema::simple(std::slice::from_ref(&args.victim_type));
    default.date = Some("date".into());
    let records = load_records(&args.data, args.schema.as_deref(), default)?;
    let outputs = read_model_outputs(&args.preds)?;
    let counts = event_counts(&outputs, args.beam)?;
    let timeline = emit_timeline(&records, &counts, &args.victim_type, range);
    if let Some(dir) = &args.out {
        let mut manifest = InputManifest::default();
        manifest.add(&args.preds)?;
        manifest.add(&args.data)?;
        write_timeline_run(&RunDir::create(dir)?, &timeline, &manifest)?;
    }
    if pretty {
        eprint!("{}", timeline.daily_csv());
        if !timeline.skipped.is_empty() {
            eprintln!("{} records without a usable date", timeline.skipped.len());
        }
    }
    emit(&timeline)
}

fn normalize(args: NormalizeArgs) -> anyhow::Result<()> {
    let raw = std::fs::read_to_string(&args.input)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", args.input.display())))?;
    let mut stdout = std::io::stdout().lock();
    for line in raw.lines() {
        let out = serde_json::json!({ "text": line, "normalized": normalize_numerals(line) });
        writeln!(stdout, "{out}")?;
    }
    Ok(())
}
