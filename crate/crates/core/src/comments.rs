//! Per-language comment syntax and comment stripping.
//!
//! Comment markers are the only language-specific syntax the toolkit knows
//! about. They are used when counting word document frequencies so that
//! license headers and prose do not leak into keyword tables.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Language, Result};

const DEFAULT_SYNTAX: &str = include_str!("../data/comment_syntax.toml");

/// Comment markers of one language.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRules {
    /// Markers that comment out the rest of the line.
    #[serde(default)]
    pub line: Vec<String>,
    /// `(open, close)` pairs. Blocks do not nest: the first close ends them.
    #[serde(default)]
    pub block: Vec<(String, String)>,
}

enum Marker<'a> {
    Line,
    Block(&'a [u8]),
}

impl CommentRules {
    pub fn is_empty(&self) -> bool {
        self.line.is_empty() && self.block.is_empty()
    }

    fn validate(&self, lang: &Language) -> Result<()> {
        let empty_line = self.line.iter().any(String::is_empty);
        let empty_block = self.block.iter().any(|(o, c)| o.is_empty() || c.is_empty());
        if empty_line || empty_block {
            return Err(Error::invalid(
                "comment marker",
                format!("empty marker for `{lang}`"),
                "nonempty strings",
            ));
        }
        Ok(())
    }

    /// Longest marker starting at `pos`, with its byte length.
    fn marker_at(&self, raw: &[u8], pos: usize) -> Option<(usize, Marker<'_>)> {
        let rest = &raw[pos..];
        let mut best: Option<(usize, Marker<'_>)> = None;
        for m in &self.line {
            if rest.starts_with(m.as_bytes()) && best.as_ref().is_none_or(|(len, _)| m.len() > *len) {
                best = Some((m.len(), Marker::Line));
            }
        }
        for (open, close) in &self.block {
            if rest.starts_with(open.as_bytes())
                && best.as_ref().is_none_or(|(len, _)| open.len() > *len)
            {
                best = Some((open.len(), Marker::Block(close.as_bytes())));
            }
        }
        best
    }

    /// Replaces every comment with a single newline byte.
    ///
    /// A line comment runs through its terminating `\n` (or to end of
    /// input); a block runs through the first subsequent close marker, or to
    /// end of input if unterminated. Scanning is single-pass and leftmost;
    /// string literals are not recognized.
    pub fn strip(&self, raw: &[u8]) -> Vec<u8> {
        if self.is_empty() {
            return raw.to_vec();
        }
        let mut out = Vec::with_capacity(raw.len());
        let mut pos = 0;
        while pos < raw.len() {
            let Some((len, marker)) = self.marker_at(raw, pos) else {
                out.push(raw[pos]);
                pos += 1;
                continue;
            };
            let body = pos + len;
            pos = match marker {
                Marker::Line => match raw[body..].iter().position(|&b| b == b'\n') {
                    Some(nl) => body + nl + 1,
                    None => raw.len(),
                },
                Marker::Block(close) => match find(&raw[body..], close) {
                    Some(at) => body + at + close.len(),
                    None => raw.len(),
                },
            };
            out.push(b'\n');
        }
        out
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

#[derive(Debug, Deserialize, Serialize)]
struct SyntaxFile {
    languages: BTreeMap<Language, CommentRules>,
}

/// Comment rules for a set of languages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CommentSyntax {
    languages: BTreeMap<Language, CommentRules>,
}

impl CommentSyntax {
    /// The shipped table covering 29 common languages.
    pub fn builtin() -> Self {
        Self::from_toml(DEFAULT_SYNTAX).expect("bundled comment syntax is valid")
    }

    /// Parses a TOML table of the form
    ///
    /// ```toml
    /// [languages.Python]
    /// line = ["#"]
    ///
    /// [languages."C/C++"]
    /// line = ["//"]
    /// block = [["/*", "*/"]]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SyntaxFile = toml::from_str(text)?;
        for (lang, rules) in &file.languages {
            rules.validate(lang)?;
        }
        Ok(CommentSyntax {
            languages: file.languages,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Adds or replaces the entries of `other`.
    pub fn extend(&mut self, other: CommentSyntax) {
        self.languages.extend(other.languages);
    }

    pub fn insert(&mut self, lang: Language, rules: CommentRules) -> Result<()> {
        rules.validate(&lang)?;
        self.languages.insert(lang, rules);
        Ok(())
    }

    pub fn rules(&self, lang: &Language) -> Option<&CommentRules> {
        self.languages.get(lang)
    }

    pub fn languages(&self) -> impl Iterator<Item = &Language> {
        self.languages.keys()
    }

    /// Restricts the table to the given languages.
    pub fn subset<'a>(&self, langs: impl IntoIterator<Item = &'a Language>) -> CommentSyntax {
        let languages = langs
            .into_iter()
            .filter_map(|l| self.languages.get(l).map(|r| (l.clone(), r.clone())))
            .collect();
        CommentSyntax { languages }
    }
}

/// Strips the comments of `lang` from `raw`.
pub fn strip_comments(raw: &[u8], lang: &Language, syntax: &CommentSyntax) -> Result<Vec<u8>> {
    let rules = syntax
        .rules(lang)
        .ok_or_else(|| Error::UnknownCommentSyntax(lang.clone()))?;
    Ok(rules.strip(raw))
}
