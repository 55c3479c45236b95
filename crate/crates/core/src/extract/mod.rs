//! Rule-based victim-count extractors.
//!
//! All three baselines locate the part of a description that talks about a
//! victim type using a per-type list of anchor terms (the [`Lexicon`]) and
//! read the nearby number:
//!
//! - [`regex::extract_regex`] matches passive and active voice patterns on the
//!   raw text,
//! - [`dependency::extract_dependency`] checks numeric modifiers against the
//!   clause structure of a dependency parse,
//! - [`srl::extract_srl`] reads the arguments of the first predicate-argument
//!   frame whose predicate is in the lexicon.
//!
//! Texts are expected to have been through
//! [`normalize_numerals`](crate::numerals::normalize_numerals) and any
//! annotations must be computed on that normalized text.

pub mod conll;
pub mod dependency;
mod lexicon;
pub mod regex;
pub mod srl;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use conll::{ParsedDocument, Sentence, Token};
pub use dependency::extract_dependency;
pub use lexicon::{Lexicon, LexiconSet};
pub use regex::extract_regex;
pub use srl::{extract_srl, SrlArgument, SrlFrame};

use crate::span::Span;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Regex,
    #[serde(alias = "dep")]
    Dependency,
    Srl,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Regex => "regex",
            Method::Dependency => "dependency",
            Method::Srl => "srl",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "regex" => Ok(Method::Regex),
            "dep" | "dependency" => Ok(Method::Dependency),
            "srl" => Ok(Method::Srl),
            _ => Err(Error::Config(format!("unknown extraction method `{s}`"))),
        }
    }
}

/// Labels for the rule that produced an [`Extraction`].
pub mod rules {
    pub const PASSIVE_PLURAL: &str = "passive_plural";
    pub const PASSIVE_SINGULAR: &str = "passive_singular";
    pub const PASSIVE_SINGULAR_IMPLIED: &str = "passive_singular_implied_one";
    pub const ACTIVE: &str = "active";
    pub const NUMERIC_MODIFIER: &str = "numeric_modifier";
    pub const SINGULAR_ARGUMENT: &str = "singular_argument_fallback";
    pub const FRAME_NUMBER: &str = "frame_number";
    pub const FRAME_WITHOUT_NUMBER: &str = "frame_without_number";
    pub const NO_MATCH: &str = "no_match";

    /// Rules whose count does not come from a number in the evidence span.
    pub fn is_fallback(rule: &str) -> bool {
        matches!(
            rule,
            PASSIVE_SINGULAR_IMPLIED | SINGULAR_ARGUMENT | FRAME_WITHOUT_NUMBER | NO_MATCH
        )
    }
}

/// A predicted count with the rule and text span that justify it.
///
/// Extractors always produce a count; a description where nothing fires
/// yields zero under the [`rules::NO_MATCH`] label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub count: Option<u64>,
    pub method: Method,
    pub evidence: Option<Span>,
    pub rule_fired: String,
}

impl Extraction {
    pub(crate) fn new(method: Method, count: u64, evidence: Option<Span>, rule: &str) -> Self {
        Extraction {
            count: Some(count),
            method,
            evidence,
            rule_fired: rule.to_string(),
        }
    }

    pub(crate) fn none(method: Method) -> Self {
        Extraction::new(method, 0, None, rules::NO_MATCH)
    }
}
