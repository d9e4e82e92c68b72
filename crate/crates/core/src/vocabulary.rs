//! Keyword induction from document frequencies, and lexicalization of token
//! streams into keyword / generic-identifier form.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comments::CommentSyntax;
use crate::preprocess::{self, preprocess_text, CharClass, Token, TokenStream};
use crate::{Error, Language, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WordKind {
    Alpha,
    Punct,
}

/// An alpha or punctuation token's text together with its kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    pub kind: WordKind,
    pub text: String,
}

impl Word {
    pub fn alpha(text: impl Into<String>) -> Self {
        Word {
            kind: WordKind::Alpha,
            text: text.into(),
        }
    }

    pub fn punct(text: impl Into<String>) -> Self {
        Word {
            kind: WordKind::Punct,
            text: text.into(),
        }
    }

    pub fn of_token(tok: &Token) -> Option<Word> {
        match tok {
            Token::Alpha(t) => Some(Word::alpha(t.clone())),
            Token::Punct(t) => Some(Word::punct(t.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&preprocess::escape_literal(&self.text))
    }
}

/// Per-language document frequencies of words in comment-stripped code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordFrequencyTable {
    pub language: Language,
    pub total_files: usize,
    pub doc_count: BTreeMap<Word, usize>,
}

impl WordFrequencyTable {
    pub fn frequency(&self, word: &Word) -> f64 {
        self.doc_count.get(word).copied().unwrap_or(0) as f64 / self.total_files as f64
    }
}

fn distinct_words(stream: &TokenStream) -> HashSet<Word> {
    stream.tokens().iter().filter_map(Word::of_token).collect()
}

/// Counts, for every alpha/punctuation word, how many files of `lang`
/// contain it at least once after comment stripping.
///
/// Languages without a comment syntax entry are counted unstripped.
pub fn count_frequencies<B>(files: &[B], lang: &Language, syntax: &CommentSyntax) -> Result<WordFrequencyTable>
where
    B: AsRef<[u8]> + Sync,
{
    if files.is_empty() {
        return Err(Error::EmptyLanguageSample(lang.clone()));
    }
    let rules = syntax.rules(lang).cloned().unwrap_or_else(|| {
        log::warn!("no comment syntax for `{lang}`; counting words without stripping comments");
        Default::default()
    });
    let doc_count = files
        .par_iter()
        .map(|raw| distinct_words(&preprocess_text(&rules.strip(raw.as_ref()))))
        .fold(BTreeMap::new, |mut acc: BTreeMap<Word, usize>, words| {
            for w in words {
                *acc.entry(w).or_default() += 1;
            }
            acc
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (w, n) in b {
                *a.entry(w).or_default() += n;
            }
            a
        });
    Ok(WordFrequencyTable {
        language: lang.clone(),
        total_files: files.len(),
        doc_count,
    })
}

/// The words of one language frequent enough to be kept literally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordTable {
    pub language: Language,
    pub threshold: f64,
    pub total_files: usize,
    /// Keyword → number of training files containing it.
    #[serde(with = "word_entries")]
    pub keywords: BTreeMap<Word, usize>,
}

/// Serializes a word map as a list of `(word, count)` entries, since words
/// are not plain strings.
mod word_entries {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::Word;

    pub fn serialize<S: Serializer>(map: &BTreeMap<Word, usize>, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<(&Word, &usize)> = map.iter().collect();
        entries.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Word, usize>, D::Error> {
        let entries = Vec::<(Word, usize)>::deserialize(d)?;
        Ok(entries.into_iter().collect())
    }
}

impl KeywordTable {
    pub fn contains(&self, word: &Word) -> bool {
        self.keywords.contains_key(word)
    }

    fn contains_token(&self, kind: WordKind, text: &str) -> bool {
        self.keywords.contains_key(&Word {
            kind,
            text: text.to_owned(),
        })
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    /// `word TAB doc_count TAB frequency` lines sorted by word.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (w, n) in &self.keywords {
            let freq = *n as f64 / self.total_files as f64;
            out.push_str(&format!("{w}\t{n}\t{freq:.6}\n"));
        }
        out
    }
}

/// Selects as keywords the words whose document frequency is at least
/// `threshold`.
pub fn build_keyword_table(freqs: &WordFrequencyTable, threshold: f64) -> Result<KeywordTable> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid("keyword threshold", threshold, "a fraction in (0, 1]"));
    }
    let total = freqs.total_files as f64;
    let keywords = freqs
        .doc_count
        .iter()
        .filter(|(_, &n)| n as f64 / total >= threshold)
        .map(|(w, &n)| (w.clone(), n))
        .collect();
    Ok(KeywordTable {
        language: freqs.language.clone(),
        threshold,
        total_files: freqs.total_files,
        keywords,
    })
}

/// A lexicalized token: a literal keyword, a generic identifier, or a
/// sentinel. Productions are sequences of symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Alpha(String),
    Punct(String),
    AlphaIdent,
    PunctIdent,
    Number,
    Newline,
    Bof,
    Eof,
}

impl Symbol {
    pub fn spelling(&self) -> String {
        match self {
            Symbol::Alpha(t) | Symbol::Punct(t) => preprocess::escape_literal(t),
            Symbol::AlphaIdent => preprocess::ALPHA_IDENT_SPELLING.to_owned(),
            Symbol::PunctIdent => preprocess::PUNCT_IDENT_SPELLING.to_owned(),
            Symbol::Number => preprocess::NUMBER_SPELLING.to_owned(),
            Symbol::Newline => preprocess::NEWLINE_SPELLING.to_owned(),
            Symbol::Bof => preprocess::BOF_SPELLING.to_owned(),
            Symbol::Eof => preprocess::EOF_SPELLING.to_owned(),
        }
    }

    /// Inverse of [`Symbol::spelling`].
    pub fn parse_spelling(s: &str) -> Result<Symbol> {
        if let Some(lit) = s.strip_prefix('\\') {
            return literal_symbol(lit);
        }
        Ok(match s {
            preprocess::ALPHA_IDENT_SPELLING => Symbol::AlphaIdent,
            preprocess::PUNCT_IDENT_SPELLING => Symbol::PunctIdent,
            preprocess::NUMBER_SPELLING => Symbol::Number,
            preprocess::NEWLINE_SPELLING => Symbol::Newline,
            preprocess::BOF_SPELLING => Symbol::Bof,
            preprocess::EOF_SPELLING => Symbol::Eof,
            _ => return literal_symbol(s),
        })
    }

    pub fn from_word(w: &Word) -> Symbol {
        match w.kind {
            WordKind::Alpha => Symbol::Alpha(w.text.clone()),
            WordKind::Punct => Symbol::Punct(w.text.clone()),
        }
    }
}

fn literal_symbol(text: &str) -> Result<Symbol> {
    if preprocess::is_run_of(text, CharClass::Alpha) {
        Ok(Symbol::Alpha(text.to_owned()))
    } else if preprocess::is_run_of(text, CharClass::Punct) {
        Ok(Symbol::Punct(text.to_owned()))
    } else {
        Err(Error::InvalidPattern(format!("`{text}` is not a single token")))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spelling())
    }
}

/// A token stream after keyword/identifier replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexicalizedStream {
    symbols: Vec<Symbol>,
}

impl LexicalizedStream {
    /// Wraps an arbitrary symbol sequence, e.g. a fragment of a file.
    pub fn new(symbols: Vec<Symbol>) -> Self {
        LexicalizedStream { symbols }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn display(&self) -> String {
        self.symbols
            .iter()
            .map(Symbol::spelling)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Keeps keywords literal and replaces every other alpha word with `__a__`
/// and every other punctuation word with `__s__`.
pub fn lexicalize(stream: &TokenStream, table: &KeywordTable) -> LexicalizedStream {
    let symbols = stream
        .tokens()
        .iter()
        .map(|tok| match tok {
            Token::Alpha(t) if table.contains_token(WordKind::Alpha, t) => Symbol::Alpha(t.clone()),
            Token::Alpha(_) => Symbol::AlphaIdent,
            Token::Punct(t) if table.contains_token(WordKind::Punct, t) => Symbol::Punct(t.clone()),
            Token::Punct(_) => Symbol::PunctIdent,
            Token::Number => Symbol::Number,
            Token::Newline => Symbol::Newline,
            Token::Bof => Symbol::Bof,
            Token::Eof => Symbol::Eof,
        })
        .collect();
    LexicalizedStream { symbols }
}
