//! Passive/active voice regular expressions for death and injury counts.
//!
//! Patterns are tried in the order passive plural, passive singular, active,
//! and the first number matched by the first matching pattern is the count.
//! Passive plural and active patterns capture digit runs; the passive
//! singular pattern captures the token in front of the auxiliary, which
//! counts as one victim unless it is itself a number.
//!
//! Two adjustments over a literal transcription: matching is
//! case-insensitive so sentence-initial verbs are found, and digit runs are
//! matched atomically. Without the latter, backtracking lets `15` shrink to
//! `1` to escape a negative lookahead (`15 injured and 3 were killed` would
//! give a death count of 1 instead of 3).

use std::sync::LazyLock;

use fancy_regex::Regex;

use super::{rules, Extraction, Method};
use crate::corpus::VictimType;
use crate::numerals::parse_count_token;
use crate::span::Span;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Voice {
    PassivePlural,
    PassiveSingular,
    Active,
}

struct Pattern {
    voice: Voice,
    regex: Regex,
}

fn compile(voice: Voice, pattern: &str) -> Pattern {
    Pattern {
        voice,
        regex: Regex::new(&format!("(?i){pattern}")).expect("built-in pattern compiles"),
    }
}

static DEATH: LazyLock<[Pattern; 3]> = LazyLock::new(|| {
    [
        compile(
            Voice::PassivePlural,
            r"(?P<n>(?>\d(?:\d|,)*))(?!\D*(?:injur|wound))(?=.*(?:\b(?:were|are)\D*\b(?:killed|dead|died|slain)))",
        ),
        compile(
            Voice::PassiveSingular,
            r"(?P<n>\S*)(?!\D*(?:injur|wound))(?=.*(?:\b(?:was|is)\D*\b(?:killed|dead|died|slain)))",
        ),
        compile(Voice::Active, r"(?:kill|slay|slain)\D*\b(?P<n>(?>\d(?:\d|,)*))"),
    ]
});

static INJURY: LazyLock<[Pattern; 3]> = LazyLock::new(|| {
    [
        compile(
            Voice::PassivePlural,
            r"(?P<n>(?>\d(?:\d|,)*))(?!.*(?:\b(?:were|are)?\D*\b(?:killed|dead|died|slain)))(?=.*\b(?:injur|wound))",
        ),
        compile(
            Voice::PassiveSingular,
            r"(?P<n>\S*)(?=(?:was|is).*\b(?:injur|wound))(?!\D*(?:\b(?:were|are)\D*\b(?:killed|dead|died|slain)))",
        ),
        compile(Voice::Active, r"(?:injured?|wound)\D*(?P<n>\d+)"),
    ]
});

fn patterns_for(victim_type: &VictimType) -> Result<&'static [Pattern; 3]> {
    match victim_type.as_str() {
        "death" => Ok(&DEATH),
        "injury" => Ok(&INJURY),
        other => Err(Error::UnsupportedType(other.to_string())),
    }
}

/// Whether built-in patterns exist for `victim_type`.
pub fn supports(victim_type: &VictimType) -> bool {
    patterns_for(victim_type).is_ok()
}

/// Extracts a count for `victim_type` from numeral-normalized `text`.
///
/// Returns zero when no pattern matches.
pub fn extract_regex(text: &str, victim_type: &VictimType) -> Result<Extraction> {
    for pattern in patterns_for(victim_type)? {
        for captures in pattern.regex.captures_iter(text) {
            let captures = match captures {
                Ok(c) => c,
                Err(e) => {
                    log::warn!("regex {:?} gave up on input: {e}", pattern.voice);
                    break;
                }
            };
            let Some(m) = captures.name("n") else { continue };
            let span = Span::from_byte_range(text, m.start(), m.end());
            let parsed = parse_count_token(m.as_str());
            let (count, rule) = match (pattern.voice, parsed) {
                (Voice::PassivePlural, Some(n)) => (n, rules::PASSIVE_PLURAL),
                (Voice::Active, Some(n)) => (n, rules::ACTIVE),
                (Voice::PassiveSingular, Some(n)) => (n, rules::PASSIVE_SINGULAR),
                (Voice::PassiveSingular, None) => (1, rules::PASSIVE_SINGULAR_IMPLIED),
                // Digit runs too long for u64; try the next match.
                (_, None) => continue,
            };
            return Ok(Extraction::new(Method::Regex, count, Some(span), rule));
        }
    }
    Ok(Extraction::none(Method::Regex))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn death(text: &str) -> u64 {
        extract_regex(text, &VictimType::death()).unwrap().count.unwrap()
    }

    fn injury(text: &str) -> u64 {
        extract_regex(text, &VictimType::injury()).unwrap().count.unwrap()
    }

    #[test]
    fn passive_plural_injury() {
        let e = extract_regex("5 people were injured", &VictimType::injury()).unwrap();
        assert_eq!(e.count, Some(5));
        assert_eq!(e.rule_fired, rules::PASSIVE_PLURAL);
        assert_eq!(e.evidence, Some(Span::new(0, 1)));
    }

    #[test]
    fn passive_plural_death() {
        assert_eq!(death("23 people were killed in the attack"), 23);
        assert_eq!(death("At least 5,000 are feared dead"), 5000);
    }

    #[test]
    fn no_match_is_zero() {
        let e = extract_regex("The market reopened today", &VictimType::death()).unwrap();
        assert_eq!(e.count, Some(0));
        assert_eq!(e.rule_fired, rules::NO_MATCH);
        assert_eq!(e.evidence, None);
        assert_eq!(injury("The market reopened today"), 0);
    }

    #[test]
    fn active_voice() {
        let text = "Rebels killed 12 civilians and injured 30";
        assert_eq!(death(text), 12);
        // The injury passive-plural pattern needs no auxiliary, only a later
        // "injur" with no later "killed", so it fires on 12 before the
        // active pattern is consulted.
        let e = extract_regex(text, &VictimType::injury()).unwrap();
        assert_eq!((e.count, e.rule_fired.as_str()), (Some(12), rules::PASSIVE_PLURAL));
        assert_eq!(injury("Soldiers wounded 30 protesters"), 30);
        assert_eq!(death("Gunmen slew 4 villagers"), 0);
        assert_eq!(death("The army reportedly killed at least 17"), 17);
    }

    #[test]
    fn singular_passive_implies_one() {
        let e = extract_regex("A policeman was killed on Monday", &VictimType::death()).unwrap();
        assert_eq!(e.count, Some(1));
        assert_eq!(e.rule_fired, rules::PASSIVE_SINGULAR_IMPLIED);
        assert_eq!(injury("a journalist was injured"), 1);
    }

    #[test]
    fn singular_passive_with_number() {
        let e = extract_regex("1 was killed", &VictimType::death()).unwrap();
        assert_eq!(e.count, Some(1));
        assert_eq!(e.rule_fired, rules::PASSIVE_SINGULAR);
    }

    #[test]
    fn injured_numbers_not_counted_as_deaths() {
        assert_eq!(death("15 injured and 3 were killed"), 3);
        assert_eq!(death("5 people were injured"), 0);
    }

    #[test]
    fn deaths_not_counted_as_injuries() {
        assert_eq!(injury("3 people were killed"), 0);
        assert_eq!(injury("2 were killed and 4 were wounded"), 4);
    }

    #[test]
    fn case_insensitive() {
        assert_eq!(death("Killed were 8 soldiers"), 8);
    }

    #[test]
    fn unsupported_type() {
        let t = VictimType::new("abduction").unwrap();
        assert!(matches!(extract_regex("x", &t), Err(Error::UnsupportedType(_))));
        assert!(!supports(&t));
    }
}
