//! Baseline extraction runs over a corpus.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evaluate::CountLine;
use crate::corpus::{EventRecord, VictimType};
use crate::extract::conll::read_parse_file;
use crate::extract::srl::read_frame_file;
use crate::extract::{
    extract_dependency, extract_regex, extract_srl, Extraction, LexiconSet, Method, ParsedDocument, SrlFrame,
};
use crate::metrics::{score_counts, BinningScheme, CountPrediction, ScoreReport};
use crate::numerals::normalize_numerals;
use crate::{Error, Result};

/// Parses and frames keyed by record id, computed on numeral-normalized text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub parses: Option<BTreeMap<String, ParsedDocument>>,
    pub frames: Option<BTreeMap<String, Vec<SrlFrame>>>,
}

impl Annotations {
    pub fn load(parses: Option<&Path>, frames: Option<&Path>) -> Result<Self> {
        Ok(Annotations {
            parses: parses.map(read_parse_file).transpose()?,
            frames: frames.map(read_frame_file).transpose()?,
        })
    }
}

/// Annotation file locations, as named in experiment configs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationPaths {
    #[serde(default)]
    pub parses: Option<PathBuf>,
    #[serde(default)]
    pub frames: Option<PathBuf>,
}

/// One record's extraction. Evidence spans index the normalized text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordExtraction {
    pub id: String,
    #[serde(flatten)]
    pub extraction: Extraction,
}

impl RecordExtraction {
    pub fn to_count_line(&self) -> CountLine {
        CountLine {
            id: self.id.clone(),
            count: self.extraction.count,
            text: None,
            confidence: None,
            quantiles: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRun {
    pub method: Method,
    pub victim_type: VictimType,
    pub extractions: Vec<RecordExtraction>,
    /// Records without the annotation the method needs.
    pub skipped: Vec<String>,
    /// Scores over the extracted records that carry a gold count.
    pub report: ScoreReport,
}

/// Runs one baseline over `records` and scores it against their gold counts.
///
/// Texts are numeral-normalized before extraction. Records missing from the
/// parse or frame maps are listed in `skipped`; a method whose annotation
/// map is absent altogether is a configuration error.
pub fn run_extraction(
    records: &[EventRecord],
    method: Method,
    victim_type: &VictimType,
    lexicons: &LexiconSet,
    annotations: &Annotations,
    scheme: &BinningScheme,
) -> Result<ExtractionRun> {
    let lexicon = match method {
        Method::Regex => None,
        Method::Dependency | Method::Srl => Some(
            lexicons
                .get(victim_type)
                .ok_or_else(|| Error::Config(format!("no lexicon for victim type `{victim_type}`")))?,
        ),
    };
    let parses = match method {
        Method::Dependency => Some(
            annotations
                .parses
                .as_ref()
                .ok_or_else(|| Error::Config("dependency extraction needs a parse file".into()))?,
        ),
        _ => None,
    };
    let frames = match method {
        Method::Srl => Some(
            annotations
                .frames
                .as_ref()
                .ok_or_else(|| Error::Config("SRL extraction needs a frame file".into()))?,
        ),
        _ => None,
    };

    let mut extractions = Vec::with_capacity(records.len());
    let mut skipped = Vec::new();
    for record in records {
        let text = normalize_numerals(&record.text);
        let extraction = match method {
            Method::Regex => extract_regex(&text, victim_type)?,
            Method::Dependency => match parses.and_then(|p| p.get(&record.id)) {
                Some(doc) => extract_dependency(doc, &text, lexicon.expect("lexicon checked"))
                    .map_err(|e| Error::Annotation(format!("record `{}`: {e}", record.id)))?,
                None => {
                    skipped.push(record.id.clone());
                    continue;
                }
            },
            Method::Srl => match frames.and_then(|f| f.get(&record.id)) {
                Some(frames) => extract_srl(&text, frames, lexicon.expect("lexicon checked"))
                    .map_err(|e| Error::Annotation(format!("record `{}`: {e}", record.id)))?,
                None => {
                    skipped.push(record.id.clone());
                    continue;
                }
            },
        };
        extractions.push(RecordExtraction {
            id: record.id.clone(),
            extraction,
        });
    }

    let gold: BTreeMap<&str, u64> = records
        .iter()
        .filter_map(|r| r.gold(victim_type).map(|g| (r.id.as_str(), g)))
        .collect();
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for e in &extractions {
        if let Some(&g) = gold.get(e.id.as_str()) {
            preds.push(CountPrediction::point(e.extraction.count.unwrap_or(0)));
            golds.push(g);
        }
    }
    let report = score_counts(&preds, &golds, scheme, &[])?;
    if !skipped.is_empty() {
        log::warn!("{} records skipped for missing annotations", skipped.len());
    }
    Ok(ExtractionRun {
        method,
        victim_type: victim_type.clone(),
        extractions,
        skipped,
        report,
    })
}

/// Writes extractions as JSON lines `{id, count, method, evidence, rule_fired}`.
pub fn write_extractions(path: &Path, extractions: &[RecordExtraction]) -> Result<()> {
    let mut out = String::new();
    for e in extractions {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
