//! Dependency-rule extraction.
//!
//! Rule inventory, applied over the whole document:
//!
//! 1. Every token whose form parses as a count and that is tagged as a
//!    number (`NUM`/`CD`) or attached as `nummod`/`num` is a candidate.
//! 2. A candidate is accepted when the nominal it counts (its head for a
//!    `nummod`, otherwise the token itself) is the subject or object of a
//!    clause anchored by a locating term. A clause is anchored when its verb,
//!    or a predicate reachable from it through `conj`, `xcomp` or `acomp`
//!    links, has a lemma in the lexicon. A `conj` link is only followed
//!    when the conjunct has no subject of its own. Candidates inside age
//!    expressions (`42-year-old`, `6-month-old`) are rejected outright.
//! 3. If nothing is accepted but an anchored clause has a singular subject or
//!    object ("a journalist was injured"), the count is 1.
//! 4. Otherwise the count is 0.
//!
//! Among accepted candidates the earliest nonzero one wins.

use super::conll::{ParsedDocument, Sentence, Token};
use super::{rules, Extraction, Lexicon, Method};
use crate::numerals::parse_count_token;
use crate::Result;

const ARGUMENT_RELATIONS: [&str; 5] = ["nsubj", "nsubjpass", "obj", "dobj", "iobj"];
const NUMERIC_RELATIONS: [&str; 2] = ["nummod", "num"];
const NUMERIC_TAGS: [&str; 2] = ["NUM", "CD"];
const CLAUSE_LINKS: [&str; 3] = ["conj", "xcomp", "acomp"];
const AGE_UNITS: [&str; 4] = ["year", "month", "week", "day"];
const SINGULAR_PRONOUNS: [&str; 11] = [
    "i", "me", "he", "him", "she", "her", "it", "someone", "somebody", "anyone", "nobody",
];
const MAX_LINK_DEPTH: usize = 3;

fn is_argument(token: &Token) -> bool {
    ARGUMENT_RELATIONS.contains(&token.base_relation())
}

fn numeric_value(token: &Token) -> Option<u64> {
    let value = parse_count_token(&token.form)?;
    let tagged = NUMERIC_TAGS.contains(&token.pos.as_str()) || NUMERIC_RELATIONS.contains(&token.base_relation());
    tagged.then_some(value)
}

fn is_singular(token: &Token) -> bool {
    let form = token.form.to_lowercase();
    match token.pos.as_str() {
        "NN" | "NNP" => true,
        "NOUN" | "PROPN" => form == token.lemma,
        "PRP" | "PRON" => SINGULAR_PRONOUNS.contains(&form.as_str()),
        _ => false,
    }
}

fn has_subject(sentence: &Sentence, token: &Token) -> bool {
    sentence
        .dependents(token)
        .any(|d| matches!(d.base_relation(), "nsubj" | "nsubjpass" | "csubj"))
}

/// Whether `governor` heads a clause anchored by a locating term.
fn anchored(sentence: &Sentence, governor: &Token, lexicon: &Lexicon) -> bool {
    let mut frontier = vec![governor];
    for _ in 0..=MAX_LINK_DEPTH {
        if frontier.iter().any(|t| lexicon.locates(&t.lemma)) {
            return true;
        }
        frontier = frontier
            .iter()
            .flat_map(|t| sentence.dependents(t))
            .filter(|d| CLAUSE_LINKS.contains(&d.base_relation()))
            .filter(|d| d.base_relation() != "conj" || !has_subject(sentence, d))
            .collect();
        if frontier.is_empty() {
            break;
        }
    }
    false
}

/// `N-year-old` and similar, whether tokenized as one token or split on
/// hyphens.
fn in_age_expression(sentence: &Sentence, numeral: &Token) -> bool {
    let surface: String = sentence.tokens[numeral.index - 1..]
        .iter()
        .take(6)
        .map(|t| t.form.to_lowercase())
        .collect();
    let rest = surface.trim_start_matches(|c: char| c.is_ascii_digit() || c == ',');
    let by_surface = AGE_UNITS.iter().any(|unit| {
        rest.strip_prefix('-')
            .and_then(|r| r.strip_prefix(unit))
            .map(|r| r.strip_prefix('s').unwrap_or(r))
            .is_some_and(|r| r.starts_with("-old"))
    });
    let by_tree = NUMERIC_RELATIONS.contains(&numeral.base_relation())
        && sentence.head_of(numeral).is_some_and(|unit| {
            AGE_UNITS.contains(&unit.lemma.as_str()) && sentence.head_of(unit).is_some_and(|h| h.lemma == "old")
        });
    by_surface || by_tree
}

fn accepts_numeral(sentence: &Sentence, numeral: &Token, lexicon: &Lexicon) -> bool {
    if in_age_expression(sentence, numeral) {
        return false;
    }
    let nominal = if NUMERIC_RELATIONS.contains(&numeral.base_relation()) {
        match sentence.head_of(numeral) {
            Some(n) => n,
            None => return false,
        }
    } else {
        numeral
    };
    is_argument(nominal)
        && sentence
            .head_of(nominal)
            .is_some_and(|governor| anchored(sentence, governor, lexicon))
}

/// Extracts a count for `lexicon.victim_type` from a dependency parse of the
/// normalized text. `text` is only used to compute evidence spans.
pub fn extract_dependency(doc: &ParsedDocument, text: &str, lexicon: &Lexicon) -> Result<Extraction> {
    doc.validate("document")?;
    let spans = doc.token_spans(text);
    let span_of = |s: usize, t: &Token| spans[s][t.index - 1];

    let mut accepted: Vec<(usize, &Token, u64)> = Vec::new();
    for (s, sentence) in doc.sentences.iter().enumerate() {
        for token in &sentence.tokens {
            if let Some(value) = numeric_value(token) {
                if accepts_numeral(sentence, token, lexicon) {
                    accepted.push((s, token, value));
                }
            }
        }
    }
    let chosen = accepted.iter().find(|(_, _, v)| *v > 0).or_else(|| accepted.first());
    if let Some(&(s, token, value)) = chosen {
        return Ok(Extraction::new(
            Method::Dependency,
            value,
            span_of(s, token),
            rules::NUMERIC_MODIFIER,
        ));
    }

    for (s, sentence) in doc.sentences.iter().enumerate() {
        for token in &sentence.tokens {
            let fires = is_argument(token)
                && numeric_value(token).is_none()
                && is_singular(token)
                && sentence.head_of(token).is_some_and(|g| anchored(sentence, g, lexicon));
            if fires {
                return Ok(Extraction::new(
                    Method::Dependency,
                    1,
                    span_of(s, token),
                    rules::SINGULAR_ARGUMENT,
                ));
            }
        }
    }
    Ok(Extraction::none(Method::Dependency))
}
