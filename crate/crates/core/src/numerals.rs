//! Spelled-out numeral normalization and count-token parsing.
//!
//! The extractors only understand digit strings, so every event text is first
//! passed through [`normalize_numerals`], which rewrites maximal English
//! cardinal phrases ("Twenty-three", "three hundred and five",
//! "a thousand") as plain ASCII digits. Vague quantifiers such as "dozens" or
//! "several" carry no exact value and are left alone.

/// Largest value the normalizer will produce. Phrases that would exceed it
/// (anything involving "billion" or above) pass through untouched.
pub const MAX_SPELLED_VALUE: u64 = 999_999_999;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Word {
    Zero,
    Unit(u64),
    Teen(u64),
    Tens(u64),
    Hundred,
    Scale(u64),
    BigScale,
    And,
    Article,
}

fn classify(word: &str) -> Option<Word> {
    let w = word.to_ascii_lowercase();
    let kind = match w.as_str() {
        "zero" => Word::Zero,
        "one" => Word::Unit(1),
        "two" => Word::Unit(2),
        "three" => Word::Unit(3),
        "four" => Word::Unit(4),
        "five" => Word::Unit(5),
        "six" => Word::Unit(6),
        "seven" => Word::Unit(7),
        "eight" => Word::Unit(8),
        "nine" => Word::Unit(9),
        "ten" => Word::Teen(10),
        "eleven" => Word::Teen(11),
        "twelve" => Word::Teen(12),
        "thirteen" => Word::Teen(13),
        "fourteen" => Word::Teen(14),
        "fifteen" => Word::Teen(15),
        "sixteen" => Word::Teen(16),
        "seventeen" => Word::Teen(17),
        "eighteen" => Word::Teen(18),
        "nineteen" => Word::Teen(19),
        "twenty" => Word::Tens(20),
        "thirty" => Word::Tens(30),
        "forty" => Word::Tens(40),
        "fifty" => Word::Tens(50),
        "sixty" => Word::Tens(60),
        "seventy" => Word::Tens(70),
        "eighty" => Word::Tens(80),
        "ninety" => Word::Tens(90),
        "hundred" => Word::Hundred,
        "thousand" => Word::Scale(1_000),
        "million" => Word::Scale(1_000_000),
        "billion" | "trillion" => Word::BigScale,
        "and" => Word::And,
        "a" | "an" => Word::Article,
        _ => return None,
    };
    Some(kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gap {
    Space,
    Hyphen,
    Other,
}

#[derive(Debug)]
struct Token {
    start: usize,
    end: usize,
    kind: Option<Word>,
    /// How this token is separated from the next one.
    gap_after: Gap,
}

/// Splits `text` into ASCII letter runs bounded by non-alphanumeric
/// characters. Runs glued to digits or other letters are not candidates.
fn word_tokens(text: &str) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut iter = text.char_indices().peekable();
    let mut prev: Option<char> = None;
    while let Some((i, c)) = iter.next() {
        if c.is_ascii_alphabetic() && !prev.is_some_and(|p| p.is_alphanumeric()) {
            let mut end = i + c.len_utf8();
            let mut last = c;
            while let Some(&(j, d)) = iter.peek() {
                if d.is_ascii_alphabetic() {
                    end = j + d.len_utf8();
                    last = d;
                    iter.next();
                } else {
                    break;
                }
            }
            let bounded = !text[end..].chars().next().is_some_and(|n| n.is_alphanumeric());
            let kind = if bounded { classify(&text[i..end]) } else { None };
            tokens.push(Token {
                start: i,
                end,
                kind,
                gap_after: Gap::Other,
            });
            prev = Some(last);
        } else {
            prev = Some(c);
        }
    }
    for k in 1..tokens.len() {
        let between = &text[tokens[k - 1].end..tokens[k].start];
        tokens[k - 1].gap_after = if between == "-" {
            Gap::Hyphen
        } else if !between.is_empty() && between.chars().all(char::is_whitespace) {
            Gap::Space
        } else {
            Gap::Other
        };
    }
    tokens
}

#[derive(Debug, Default)]
struct Phrase {
    total: u64,
    current: u64,
    hundreds: bool,
    tens: bool,
    units: bool,
    last_scale: Option<u64>,
    after_article: bool,
}

impl Phrase {
    fn accept(&mut self, prev: Word, word: Word, gap: Gap) -> bool {
        if gap == Gap::Other {
            return false;
        }
        if gap == Gap::Hyphen && !(matches!(prev, Word::Tens(_)) && matches!(word, Word::Unit(_))) {
            return false;
        }
        match word {
            Word::Unit(v) if !self.units => {
                self.current += v;
                self.units = true;
            }
            Word::Teen(v) | Word::Tens(v) if !self.units && !self.tens => {
                self.current += v;
                if matches!(word, Word::Teen(_)) {
                    self.units = true;
                } else {
                    self.tens = true;
                }
            }
            Word::Hundred
                if !self.hundreds && !self.tens && (self.units || (self.after_article && self.current == 0)) =>
            {
                self.current = self.current.max(1) * 100;
                self.hundreds = true;
                self.units = false;
            }
            Word::Scale(s)
                if (self.current > 0 || self.after_article) && self.last_scale.is_none_or(|last| s < last) =>
            {
                self.total += self.current.max(1) * s;
                self.current = 0;
                self.hundreds = false;
                self.tens = false;
                self.units = false;
                self.last_scale = Some(s);
            }
            _ => return false,
        }
        self.after_article = false;
        true
    }

    fn value(&self) -> u64 {
        self.total + self.current
    }
}

/// Parses the phrase starting at token `i`. Returns the index one past the
/// last consumed token and the phrase value.
fn parse_phrase(tokens: &[Token], i: usize) -> Option<(usize, u64)> {
    let first = tokens[i].kind?;
    let mut phrase = Phrase::default();
    match first {
        Word::Zero => return Some((i + 1, 0)),
        Word::Unit(v) | Word::Teen(v) | Word::Tens(v) => {
            phrase.current = v;
            phrase.units = !matches!(first, Word::Tens(_));
            phrase.tens = matches!(first, Word::Tens(_));
        }
        Word::Article => {
            let next = tokens.get(i + 1)?;
            let countable = matches!(next.kind, Some(Word::Hundred | Word::Scale(_)));
            if !countable || tokens[i].gap_after != Gap::Space {
                return None;
            }
            phrase.after_article = true;
        }
        _ => return None,
    }

    let mut end = i + 1;
    let mut prev = first;
    let mut k = i + 1;
    while k < tokens.len() {
        let gap = tokens[k - 1].gap_after;
        let Some(word) = tokens[k].kind else { break };
        if word == Word::And {
            // "and" only joins a scale word to a following small number.
            let joins = matches!(prev, Word::Hundred | Word::Scale(_))
                && gap == Gap::Space
                && tokens[k].gap_after == Gap::Space
                && matches!(
                    tokens.get(k + 1).and_then(|t| t.kind),
                    Some(Word::Unit(_) | Word::Teen(_) | Word::Tens(_))
                );
            if !joins {
                break;
            }
            let next = tokens[k + 1].kind.unwrap();
            if !phrase.accept(prev, next, Gap::Space) {
                break;
            }
            prev = next;
            k += 2;
            end = k;
            continue;
        }
        if !phrase.accept(prev, word, gap) {
            break;
        }
        prev = word;
        k += 1;
        end = k;
    }

    if first == Word::Article && end == i + 1 {
        return None;
    }
    // A trailing "billion" means the real value is out of range.
    if tokens[end - 1].gap_after == Gap::Space && tokens.get(end).and_then(|t| t.kind) == Some(Word::BigScale) {
        return None;
    }
    let value = phrase.value();
    (value <= MAX_SPELLED_VALUE).then_some((end, value))
}

/// Rewrites every maximal spelled-out cardinal in `text` as ASCII digits.
///
/// Text outside the rewritten phrases is copied unchanged, and the function is
/// idempotent.
pub fn normalize_numerals(text: &str) -> String {
    let tokens = word_tokens(text);
    let mut out = String::with_capacity(text.len());
    let mut copied = 0;
    let mut i = 0;
    while i < tokens.len() {
        match parse_phrase(&tokens, i) {
            Some((end, value)) => {
                out.push_str(&text[copied..tokens[i].start]);
                out.push_str(&value.to_string());
                copied = tokens[end - 1].end;
                i = end;
            }
            None => i += 1,
        }
    }
    out.push_str(&text[copied..]);
    out
}

/// Parses a digit token with optional comma grouping (`5,000`, `12`).
///
/// The accepted shape is a digit followed by digits or commas, which is what
/// the count patterns capture. Anything else (including vague quantifiers
/// like "dozens") yields `None`.
pub fn parse_count_token(token: &str) -> Option<u64> {
    let mut chars = token.chars();
    if !chars.next()?.is_ascii_digit() {
        return None;
    }
    if !chars.all(|c| c.is_ascii_digit() || c == ',') {
        return None;
    }
    token
        .chars()
        .filter(char::is_ascii_digit)
        .collect::<String>()
        .parse()
        .ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve() {
        assert_eq!(normalize_numerals("twelve"), "12");
    }

    #[test]
    fn hyphenated_sentence_start() {
        assert_eq!(
            normalize_numerals("Twenty-three people were killed"),
            "23 people were killed"
        );
    }

    #[test]
    fn identity_without_numerals() {
        assert_eq!(normalize_numerals("no counts at all"), "no counts at all");
    }

    #[test]
    fn compound_with_and() {
        assert_eq!(normalize_numerals("three hundred and five"), "305");
        assert_eq!(normalize_numerals("one thousand and one dead"), "1001 dead");
        assert_eq!(normalize_numerals("three hundred and counting"), "300 and counting");
    }

    #[test]
    fn articles_before_scale_words() {
        assert_eq!(normalize_numerals("a hundred people"), "100 people");
        assert_eq!(normalize_numerals("An hundred"), "100");
        assert_eq!(normalize_numerals("a thousand and twelve"), "1012");
        assert_eq!(normalize_numerals("a man was shot"), "a man was shot");
        assert_eq!(normalize_numerals("a dozen were hurt"), "a dozen were hurt");
    }

    #[test]
    fn scales() {
        assert_eq!(normalize_numerals("two million"), "2000000");
        assert_eq!(
            normalize_numerals(
                "nine hundred ninety-nine million nine hundred ninety-nine thousand nine hundred ninety-nine"
            ),
            "999999999"
        );
        assert_eq!(normalize_numerals("one hundred thousand"), "100000");
        assert_eq!(normalize_numerals("two billion"), "two billion");
    }

    #[test]
    fn ages_are_converted() {
        assert_eq!(normalize_numerals("a four-year-old girl"), "a 4-year-old girl");
    }

    #[test]
    fn vague_quantifiers_untouched() {
        let text = "dozens were injured and several killed, scores more missing";
        assert_eq!(normalize_numerals(text), text);
    }

    #[test]
    fn adjacent_units_do_not_merge() {
        assert_eq!(normalize_numerals("five six"), "5 6");
        assert_eq!(normalize_numerals("one-two"), "1-2");
        assert_eq!(normalize_numerals("twenty twenty"), "20 20");
    }

    #[test]
    fn embedded_words_untouched() {
        assert_eq!(normalize_numerals("someone often"), "someone often");
        assert_eq!(normalize_numerals("5ten"), "5ten");
        assert_eq!(normalize_numerals("one, two"), "1, 2");
    }

    #[test]
    fn count_tokens() {
        assert_eq!(parse_count_token("5,000"), Some(5000));
        assert_eq!(parse_count_token("0"), Some(0));
        assert_eq!(parse_count_token("dozens"), None);
        assert_eq!(parse_count_token(""), None);
        assert_eq!(parse_count_token(",5"), None);
        assert_eq!(parse_count_token("12a"), None);
        assert_eq!(parse_count_token("99999999999999999999999"), None);
    }

    /// Character-by-character reference for comma-grouped digit strings.
    fn oracle_parse(token: &str) -> Option<u64> {
        let mut seen_digit = false;
        let mut value: u64 = 0;
        for (i, c) in token.chars().enumerate() {
            match c {
                '0'..='9' => {
                    seen_digit = true;
                    value = value.checked_mul(10)?.checked_add(c as u64 - '0' as u64)?;
                }
                ',' if i > 0 => {}
                _ => return None,
            }
        }
        seen_digit.then_some(value)
    }

    #[test]
    fn parse_matches_oracle() {
        for t in ["5,000", "1,234,567", "0", "007", "1,", "12,3", "x1", ",1", "1 000"] {
            assert_eq!(parse_count_token(t), oracle_parse(t), "{t}");
        }
    }
}
