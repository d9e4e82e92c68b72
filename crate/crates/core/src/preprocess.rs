//! Normalization of raw source bytes into token streams.
//!
//! Text is lowercased, split wherever the character class changes between
//! alphabetic, digit and punctuation runs, digit runs collapse into a single
//! number sentinel, newline runs into a single newline sentinel, and the
//! result is wrapped in beginning/end-of-file sentinels.

use std::fmt;

use crate::{Error, Result};

pub const ALPHA_IDENT_SPELLING: &str = "__a__";
pub const PUNCT_IDENT_SPELLING: &str = "__s__";
pub const NUMBER_SPELLING: &str = "__d__";
pub const NEWLINE_SPELLING: &str = "__NL__";
pub const BOF_SPELLING: &str = "__BOF__";
pub const EOF_SPELLING: &str = "__EOF__";

const RESERVED_SPELLINGS: [&str; 6] = [
    ALPHA_IDENT_SPELLING,
    PUNCT_IDENT_SPELLING,
    NUMBER_SPELLING,
    NEWLINE_SPELLING,
    BOF_SPELLING,
    EOF_SPELLING,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CharClass {
    Alpha,
    Digit,
    Punct,
    Newline,
    Space,
}

pub(crate) fn char_class(c: char) -> CharClass {
    match c {
        '\n' | '\r' | '\u{85}' | '\u{2028}' | '\u{2029}' => CharClass::Newline,
        '0'..='9' => CharClass::Digit,
        '_' => CharClass::Alpha,
        c if c.is_whitespace() => CharClass::Space,
        // non-ASCII numerals count as letters
        c if c.is_alphabetic() || c.is_numeric() => CharClass::Alpha,
        _ => CharClass::Punct,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenKind {
    Alpha,
    Punct,
    Number,
    Newline,
    Bof,
    Eof,
}

/// One normalized word of a source file.
///
/// Sentinels are kinds of their own, so file content that literally spells
/// `__d__` is an ordinary alpha token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Alpha(String),
    Punct(String),
    Number,
    Newline,
    Bof,
    Eof,
}

impl Token {
    pub fn kind(&self) -> TokenKind {
        match self {
            Token::Alpha(_) => TokenKind::Alpha,
            Token::Punct(_) => TokenKind::Punct,
            Token::Number => TokenKind::Number,
            Token::Newline => TokenKind::Newline,
            Token::Bof => TokenKind::Bof,
            Token::Eof => TokenKind::Eof,
        }
    }

    /// The token text for alpha and punctuation tokens.
    pub fn text(&self) -> Option<&str> {
        match self {
            Token::Alpha(t) | Token::Punct(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.text().is_none()
    }

    /// Debug spelling: sentinels use their reserved names and literals that
    /// would collide with one (or start with a backslash) get a `\` prefix.
    pub fn spelling(&self) -> String {
        match self {
            Token::Alpha(t) | Token::Punct(t) => escape_literal(t),
            Token::Number => NUMBER_SPELLING.to_owned(),
            Token::Newline => NEWLINE_SPELLING.to_owned(),
            Token::Bof => BOF_SPELLING.to_owned(),
            Token::Eof => EOF_SPELLING.to_owned(),
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spelling())
    }
}

pub(crate) fn escape_literal(text: &str) -> String {
    if text.starts_with('\\') || RESERVED_SPELLINGS.contains(&text) {
        format!("\\{text}")
    } else {
        text.to_owned()
    }
}

/// Returns true if every character of `text` belongs to `class`.
pub(crate) fn is_run_of(text: &str, class: CharClass) -> bool {
    !text.is_empty() && text.chars().all(|c| char_class(c) == class)
}

/// A preprocessed file: `[BOF, ..., EOF]` with no adjacent newline sentinels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenStream {
    tokens: Vec<Token>,
}

impl TokenStream {
    /// Builds a stream from an explicit token list, checking every invariant.
    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self> {
        if tokens.first() != Some(&Token::Bof) {
            return Err(Error::InvalidStream("first token must be BOF".into()));
        }
        if tokens.len() < 2 || tokens.last() != Some(&Token::Eof) {
            return Err(Error::InvalidStream("last token must be EOF".into()));
        }
        let interior = &tokens[1..tokens.len() - 1];
        for (i, tok) in interior.iter().enumerate() {
            match tok {
                Token::Bof | Token::Eof => {
                    return Err(Error::InvalidStream(format!(
                        "{tok} at interior position {}",
                        i + 1
                    )))
                }
                Token::Alpha(t) if !is_run_of(t, CharClass::Alpha) || t.to_lowercase() != *t => {
                    return Err(Error::InvalidStream(format!("bad alpha token {t:?}")))
                }
                Token::Punct(t) if !is_run_of(t, CharClass::Punct) || t.to_lowercase() != *t => {
                    return Err(Error::InvalidStream(format!("bad punctuation token {t:?}")))
                }
                _ => {}
            }
        }
        if interior
            .windows(2)
            .any(|w| w[0] == Token::Newline && w[1] == Token::Newline)
        {
            return Err(Error::InvalidStream("adjacent newline sentinels".into()));
        }
        Ok(TokenStream { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens between the BOF and EOF sentinels.
    pub fn interior(&self) -> &[Token] {
        &self.tokens[1..self.tokens.len() - 1]
    }

    /// Renders the stream as source text that preprocesses back to the same
    /// stream: tokens joined by single spaces, numbers as `0`, newlines as
    /// line breaks. BOF and EOF are implied.
    pub fn to_source(&self) -> String {
        let parts: Vec<&str> = self
            .interior()
            .iter()
            .map(|t| match t {
                Token::Alpha(s) | Token::Punct(s) => s.as_str(),
                Token::Number => "0",
                Token::Newline => "\n",
                Token::Bof | Token::Eof => unreachable!("sentinel inside stream"),
            })
            .collect();
        parts.join(" ")
    }

    /// Space-separated debug spellings, including BOF and EOF.
    pub fn display(&self) -> String {
        self.tokens
            .iter()
            .map(Token::spelling)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Converts raw source bytes into a normalized token stream.
///
/// Invalid UTF-8 is replaced by U+FFFD, which classifies as punctuation.
pub fn preprocess_text(raw: &[u8]) -> TokenStream {
    let lowered = String::from_utf8_lossy(raw).to_lowercase();

    let mut tokens = vec![Token::Bof];
    let mut run = String::new();
    let mut run_class = CharClass::Space;

    let flush = |tokens: &mut Vec<Token>, run: &mut String, class: CharClass| {
        if run.is_empty() {
            return;
        }
        let tok = match class {
            CharClass::Alpha => Token::Alpha(std::mem::take(run)),
            CharClass::Punct => Token::Punct(std::mem::take(run)),
            CharClass::Digit => {
                run.clear();
                Token::Number
            }
            CharClass::Newline | CharClass::Space => unreachable!(),
        };
        tokens.push(tok);
    };

    for c in lowered.chars() {
        let class = char_class(c);
        if class != run_class {
            flush(&mut tokens, &mut run, run_class);
            run_class = class;
        }
        match class {
            CharClass::Alpha | CharClass::Digit | CharClass::Punct => run.push(c),
            CharClass::Newline => {
                if tokens.last() != Some(&Token::Newline) {
                    tokens.push(Token::Newline);
                }
            }
            CharClass::Space => {}
        }
    }
    flush(&mut tokens, &mut run, run_class);
    tokens.push(Token::Eof);

    TokenStream { tokens }
}
