//! Line partitioning for C-family sources.
//!
//! A small state machine walks the bytes once, blanking out comment text and
//! the contents of string and character literals. Each physical line is then
//! labelled blank, comment or code from what remains.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Blank,
    Comment,
    Code,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CommentStyle {
    /// `//` and `/* */` comments, `"..."` and `'...'` literals.
    #[default]
    CFamily,
    /// No comment or literal syntax; every non-blank line is code.
    Plain,
}

/// One physical line after lexing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexedLine {
    pub kind: LineKind,
    /// The line with comments and literal contents replaced by spaces.
    pub masked: Vec<u8>,
}

impl LexedLine {
    /// True when the code on this line ends in a backslash continuation.
    pub fn continues(&self) -> bool {
        self.kind == LineKind::Code && self.masked.trim_ascii_end().last() == Some(&b'\\')
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Code,
    LineComment,
    BlockComment,
    Literal(u8),
}

/// Splits `text` on `\n` (a trailing `\r` is dropped) and lexes every line.
pub fn lex_lines(text: &[u8], style: CommentStyle) -> Vec<LexedLine> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix(b"\n").unwrap_or(text);
    let mut state = State::Code;
    let mut out = Vec::new();
    for raw in body.split(|&b| b == b'\n') {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let masked = match style {
            CommentStyle::CFamily => mask_line(raw, &mut state),
            CommentStyle::Plain => raw.to_vec(),
        };
        let kind = if raw.iter().all(u8::is_ascii_whitespace) {
            LineKind::Blank
        } else if masked.iter().all(u8::is_ascii_whitespace) {
            LineKind::Comment
        } else {
            LineKind::Code
        };
        out.push(LexedLine { kind, masked });
    }
    out
}

fn mask_line(raw: &[u8], state: &mut State) -> Vec<u8> {
    let mut masked = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let b = raw[i];
        let next = raw.get(i + 1).copied();
        match *state {
            State::Code => match (b, next) {
                (b'/', Some(b'/')) => {
                    *state = State::LineComment;
                    masked.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                (b'/', Some(b'*')) => {
                    *state = State::BlockComment;
                    masked.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                (b'"', _) => {
                    *state = State::Literal(b'"');
                    masked.push(b);
                }
                // A quote after a digit is a C++14 digit separator.
                (b'\'', _) if i == 0 || !raw[i - 1].is_ascii_digit() => {
                    *state = State::Literal(b'\'');
                    masked.push(b);
                }
                _ => masked.push(b),
            },
            State::LineComment => masked.push(b' '),
            State::BlockComment => {
                if b == b'*' && next == Some(b'/') {
                    *state = State::Code;
                    masked.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                masked.push(b' ');
            }
            State::Literal(q) => {
                if b == b'\\' && next.is_some() {
                    masked.extend_from_slice(b"  ");
                    i += 2;
                    continue;
                }
                if b == q {
                    *state = State::Code;
                    masked.push(b);
                } else {
                    masked.push(b' ');
                }
            }
        }
        i += 1;
    }
    // Only block comments survive the end of a line.
    if *state != State::BlockComment {
        *state = State::Code;
    }
    masked
}

/// Labels every line of `text`; framework sets are left empty.
pub fn partition_lines(text: &[u8], style: CommentStyle) -> Vec<super::LineClass> {
    lex_lines(text, style)
        .into_iter()
        .enumerate()
        .map(|(i, l)| super::LineClass {
            line_no: i + 1,
            kind: l.kind,
            frameworks: Default::default(),
        })
        .collect()
}
