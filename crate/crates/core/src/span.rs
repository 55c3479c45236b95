//! Character spans into event text.
//!
//! All spans in this crate count Unicode scalar values, not bytes.

use serde::{Deserialize, Serialize};

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether the span is well-formed and lies within a text of `text_len`
    /// characters.
    pub fn fits(&self, text_len: usize) -> bool {
        self.start <= self.end && self.end <= text_len
    }

    /// Converts a byte range of `text` into a character span.
    pub fn from_byte_range(text: &str, start: usize, end: usize) -> Self {
        Span {
            start: text[..start].chars().count(),
            end: text[..end].chars().count(),
        }
    }

    /// The covered text, or `None` if the span does not fit.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        let start = char_to_byte(text, self.start)?;
        let end = char_to_byte(text, self.end)?;
        text.get(start..end)
    }
}

fn char_to_byte(text: &str, pos: usize) -> Option<usize> {
    if pos == 0 {
        return Some(0);
    }
    text.char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .nth(pos)
}
