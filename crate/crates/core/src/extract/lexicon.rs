use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::VictimType;
use crate::{Error, Result};

/// Locating terms for one victim type.
///
/// `locating_terms` anchor the dependency rules; `predicate_verbs` select SRL
/// frames. Both hold lowercase lemmas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub victim_type: VictimType,
    pub locating_terms: Vec<String>,
    pub predicate_verbs: Vec<String>,
}

impl Lexicon {
    pub fn new(victim_type: VictimType, locating_terms: Vec<String>, predicate_verbs: Vec<String>) -> Result<Self> {
        for (what, list) in [
            ("locating terms", &locating_terms),
            ("predicate verbs", &predicate_verbs),
        ] {
            if list.is_empty() {
                return Err(Error::Config(format!("{what} for `{victim_type}` are empty")));
            }
            let mut seen = HashSet::new();
            for term in list {
                if term.is_empty() || term.chars().any(char::is_uppercase) {
                    return Err(Error::Config(format!(
                        "term `{term}` for `{victim_type}` must be a non-empty lowercase lemma"
                    )));
                }
                if !seen.insert(term) {
                    return Err(Error::Config(format!(
                        "duplicate term `{term}` in {what} for `{victim_type}`"
                    )));
                }
            }
        }
        Ok(Lexicon {
            victim_type,
            locating_terms,
            predicate_verbs,
        })
    }

    /// Built-in lists for `death` and `injury`.
    pub fn default_for(victim_type: &VictimType) -> Option<Self> {
        let terms: &[&str] = match victim_type.as_str() {
            "death" => &["die", "kill", "slay", "dead"],
            "injury" => &["injure", "wound"],
            _ => return None,
        };
        let terms: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
        Some(Lexicon {
            victim_type: victim_type.clone(),
            locating_terms: terms.clone(),
            predicate_verbs: terms,
        })
    }

    pub fn locates(&self, lemma: &str) -> bool {
        self.locating_terms.iter().any(|t| t.eq_ignore_ascii_case(lemma))
    }

    pub fn is_predicate(&self, lemma: &str) -> bool {
        self.predicate_verbs.iter().any(|t| t.eq_ignore_ascii_case(lemma))
    }
}

/// Lexicons for several victim types, as read from a lexicon file.
///
/// The file lists one term per line under a `[type]` header. An optional
/// `[type.predicates]` section gives separate SRL predicate verbs; without it
/// the locating terms are used for both. `#` starts a comment.
///
/// ```text
/// [death]
/// die
/// kill
///
/// [abduction]
/// abduct
/// kidnap
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LexiconSet {
    lexicons: BTreeMap<VictimType, Lexicon>,
}

impl LexiconSet {
    /// The built-in death and injury lexicons.
    pub fn defaults() -> Self {
        let mut set = LexiconSet::default();
        for t in [VictimType::death(), VictimType::injury()] {
            set.lexicons.insert(t.clone(), Lexicon::default_for(&t).unwrap());
        }
        set
    }

    pub fn get(&self, victim_type: &VictimType) -> Option<&Lexicon> {
        self.lexicons.get(victim_type)
    }

    pub fn insert(&mut self, lexicon: Lexicon) {
        self.lexicons.insert(lexicon.victim_type.clone(), lexicon);
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw)
    }

    pub fn parse(raw: &str) -> Result<Self> {
        let mut terms: BTreeMap<VictimType, Vec<String>> = BTreeMap::new();
        let mut predicates: BTreeMap<VictimType, Vec<String>> = BTreeMap::new();
        let mut current: Option<(VictimType, bool)> = None;
        for (i, line) in raw.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let (name, is_pred) = match header.strip_suffix(".predicates") {
                    Some(name) => (name, true),
                    None => (header, false),
                };
                let victim_type = VictimType::new(name.trim())?;
                let target = if is_pred { &mut predicates } else { &mut terms };
                target.entry(victim_type.clone()).or_default();
                current = Some((victim_type, is_pred));
                continue;
            }
            let Some((victim_type, is_pred)) = &current else {
                return Err(Error::Config(format!(
                    "lexicon line {}: term `{line}` before any [type] header",
                    i + 1
                )));
            };
            let target = if *is_pred { &mut predicates } else { &mut terms };
            target.entry(victim_type.clone()).or_default().push(line.to_string());
        }
        if let Some(orphan) = predicates.keys().find(|t| !terms.contains_key(*t)) {
            return Err(Error::Config(format!(
                "predicate section for `{orphan}` has no matching [{orphan}] section"
            )));
        }
        let mut set = LexiconSet::default();
        for (victim_type, locating) in terms {
            let verbs = predicates.remove(&victim_type).unwrap_or_else(|| locating.clone());
            set.insert(Lexicon::new(victim_type, locating, verbs)?);
        }
        Ok(set)
    }
}
