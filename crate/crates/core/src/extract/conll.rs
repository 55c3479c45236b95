//! Dependency parses in the 10-column CoNLL format.
//!
//! Each token line holds `index form lemma pos _ _ head deprel _ _` separated
//! by tabs; sentences are separated by blank lines. A file may hold several
//! documents, each introduced by a `# newdoc id = ...` (or `# doc_id = ...`)
//! comment. Other comment lines, multiword ranges (`3-4`) and empty nodes
//! (`3.1`) are skipped.

use std::collections::BTreeMap;
use std::path::Path;

use crate::span::Span;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position within the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    /// Index of the governing token, 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    /// Dependency relation without subtype (`nsubj:pass` becomes `nsubj`).
    pub fn base_relation(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Token by 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn head_of(&self, token: &Token) -> Option<&Token> {
        self.token(token.head)
    }

    pub fn dependents<'a>(&'a self, token: &'a Token) -> impl Iterator<Item = &'a Token> + 'a {
        self.tokens.iter().filter(move |t| t.head == token.index)
    }

    fn validate(&self, doc: &str, number: usize) -> Result<()> {
        let n = self.tokens.len();
        let mut roots = 0;
        for (i, token) in self.tokens.iter().enumerate() {
            if token.index != i + 1 {
                return Err(Error::Annotation(format!(
                    "{doc}: sentence {number}: token {} out of sequence",
                    token.index
                )));
            }
            if token.head > n || token.head == token.index {
                return Err(Error::Annotation(format!(
                    "{doc}: sentence {number}: token {} has dangling head {}",
                    token.index, token.head
                )));
            }
            if token.head == 0 {
                roots += 1;
            }
        }
        if roots != 1 {
            return Err(Error::Annotation(format!(
                "{doc}: sentence {number}: expected exactly one root, found {roots}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParsedDocument {
    pub sentences: Vec<Sentence>,
}

impl ParsedDocument {
    /// Parses a single document and checks its tree structure.
    pub fn from_conll(raw: &str) -> Result<Self> {
        let mut docs = parse_documents(raw, false)?;
        Ok(docs.pop().map(|(_, d)| d).unwrap_or_default())
    }

    pub fn validate(&self, doc: &str) -> Result<()> {
        for (i, sentence) in self.sentences.iter().enumerate() {
            sentence.validate(doc, i + 1)?;
        }
        Ok(())
    }

    /// Character span of every token in `text`, found by scanning forms left
    /// to right. Tokens that cannot be located get `None`.
    pub fn token_spans(&self, text: &str) -> Vec<Vec<Option<Span>>> {
        let mut cursor = 0;
        self.sentences
            .iter()
            .map(|sentence| {
                sentence
                    .tokens
                    .iter()
                    .map(|token| {
                        let found = text[cursor..].find(token.form.as_str())?;
                        let start = cursor + found;
                        let end = start + token.form.len();
                        cursor = end;
                        Some(Span::from_byte_range(text, start, end))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Reads a multi-document parse file into documents keyed by id.
pub fn read_parse_file(path: &Path) -> Result<BTreeMap<String, ParsedDocument>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let docs = parse_documents(&raw, true)?;
    let mut out = BTreeMap::new();
    for (id, doc) in docs {
        if out.insert(id.clone(), doc).is_some() {
            return Err(Error::Annotation(format!(
                "{}: duplicate document id `{id}`",
                path.display()
            )));
        }
    }
    Ok(out)
}

fn doc_id_comment(line: &str) -> Option<&str> {
    let body = line.strip_prefix('#')?.trim();
    let (key, value) = body.split_once('=')?;
    matches!(key.trim(), "newdoc id" | "doc_id").then(|| value.trim())
}

fn parse_documents(raw: &str, require_ids: bool) -> Result<Vec<(String, ParsedDocument)>> {
    let mut docs: Vec<(String, ParsedDocument)> = Vec::new();
    let mut sentence = Sentence::default();

    fn flush(docs: &mut Vec<(String, ParsedDocument)>, sentence: &mut Sentence) {
        if sentence.tokens.is_empty() {
            return;
        }
        if docs.is_empty() {
            docs.push((String::new(), ParsedDocument::default()));
        }
        docs.last_mut().unwrap().1.sentences.push(std::mem::take(sentence));
    }

    for (i, line) in raw.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            flush(&mut docs, &mut sentence);
            continue;
        }
        if trimmed.starts_with('#') {
            if let Some(id) = doc_id_comment(trimmed) {
                flush(&mut docs, &mut sentence);
                docs.push((id.to_string(), ParsedDocument::default()));
            }
            continue;
        }
        if require_ids && docs.is_empty() {
            return Err(Error::Annotation(format!(
                "line {line_no}: token before any `# newdoc id = ...` comment"
            )));
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Annotation(format!(
                "line {line_no}: expected 10 tab-separated columns, found {}",
                cols.len()
            )));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let bad = |what: &str| Error::Annotation(format!("line {line_no}: bad {what} `{}`", cols[0]));
        let index: usize = cols[0].parse().map_err(|_| bad("token index"))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| Error::Annotation(format!("line {line_no}: bad head `{}`", cols[6])))?;
        let pos = if cols[3] == "_" { cols[4] } else { cols[3] };
        sentence.tokens.push(Token {
            index,
            form: cols[1].to_string(),
            lemma: cols[2].to_lowercase(),
            pos: pos.to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    flush(&mut docs, &mut sentence);

    for (id, doc) in &docs {
        doc.validate(if id.is_empty() { "document" } else { id })?;
    }
    Ok(docs)
}
