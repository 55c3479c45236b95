//! Semantic-role frame extraction.
//!
//! Frames are visited in document order (by predicate start). The first frame
//! whose predicate lemma is in the lexicon decides the count: the first
//! number found scanning its argument spans left to right, or 1 if the frame
//! mentions no number. Documents without such a frame get 0. Later matching
//! frames are never consulted, so counts spread over several clauses are not
//! summed.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{rules, Extraction, Lexicon, Method};
use crate::numerals::parse_count_token;
use crate::span::Span;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlArgument {
    pub role: String,
    pub start: usize,
    pub end: usize,
}

impl SrlArgument {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

/// One predicate with its labelled arguments. Spans are character offsets
/// into the normalized event text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrlFrame {
    #[serde(rename = "predicate")]
    pub predicate_lemma: String,
    #[serde(with = "span_pair")]
    pub predicate_span: Span,
    pub arguments: Vec<SrlArgument>,
}

mod span_pair {
    use super::Span;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(span: &Span, s: S) -> Result<S::Ok, S::Error> {
        [span.start, span.end].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Span, D::Error> {
        let [start, end] = <[usize; 2]>::deserialize(d)?;
        Ok(Span::new(start, end))
    }
}

/// One line of a frame file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDocument {
    pub id: String,
    pub frames: Vec<SrlFrame>,
}

/// Reads a JSON-lines frame file into frames keyed by document id.
pub fn read_frame_file(path: &Path) -> Result<BTreeMap<String, Vec<SrlFrame>>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: FrameDocument =
            serde_json::from_str(line).map_err(|e| Error::Annotation(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if out.insert(doc.id.clone(), doc.frames).is_some() {
            return Err(Error::Annotation(format!(
                "{}:{}: duplicate document id `{}`",
                path.display(),
                i + 1,
                doc.id
            )));
        }
    }
    Ok(out)
}

fn validate(text: &str, frames: &[SrlFrame]) -> Result<()> {
    let len = text.chars().count();
    for frame in frames {
        if !frame.predicate_span.fits(len) {
            return Err(Error::Annotation(format!(
                "predicate `{}` span {:?} outside text of {len} characters",
                frame.predicate_lemma, frame.predicate_span
            )));
        }
        for arg in &frame.arguments {
            if arg.role.is_empty() {
                return Err(Error::Annotation(format!(
                    "argument of `{}` has an empty role",
                    frame.predicate_lemma
                )));
            }
            if !arg.span().fits(len) {
                return Err(Error::Annotation(format!(
                    "argument {} of `{}` span {:?} outside text of {len} characters",
                    arg.role,
                    frame.predicate_lemma,
                    arg.span()
                )));
            }
        }
    }
    Ok(())
}

/// First count token inside `span`, with its own span.
fn first_number(text: &str, span: Span) -> Option<(u64, Span)> {
    let chars: Vec<char> = text.chars().skip(span.start).take(span.len()).collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let mut lo = start;
        let mut hi = i;
        while lo < hi && !chars[lo].is_alphanumeric() {
            lo += 1;
        }
        while hi > lo && !chars[hi - 1].is_alphanumeric() {
            hi -= 1;
        }
        let word: String = chars[lo..hi].iter().collect();
        if let Some(n) = parse_count_token(&word) {
            return Some((n, Span::new(span.start + lo, span.start + hi)));
        }
    }
    None
}

/// Extracts a count for `lexicon.victim_type` from the SRL frames of `text`.
pub fn extract_srl(text: &str, frames: &[SrlFrame], lexicon: &Lexicon) -> Result<Extraction> {
    validate(text, frames)?;
    let mut ordered: Vec<&SrlFrame> = frames.iter().collect();
    ordered.sort_by_key(|f| f.predicate_span.start);

    let Some(frame) = ordered.into_iter().find(|f| lexicon.is_predicate(&f.predicate_lemma)) else {
        return Ok(Extraction::none(Method::Srl));
    };

    let mut arguments: Vec<&SrlArgument> = frame.arguments.iter().collect();
    arguments.sort_by_key(|a| a.start);
    for arg in arguments {
        if let Some((n, span)) = first_number(text, arg.span()) {
            return Ok(Extraction::new(Method::Srl, n, Some(span), rules::FRAME_NUMBER));
        }
    }
    Ok(Extraction::new(
        Method::Srl,
        1,
        Some(frame.predicate_span),
        rules::FRAME_WITHOUT_NUMBER,
    ))
}
