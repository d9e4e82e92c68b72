//! Grammar productions: n-gram candidate extraction, mutual-information
//! scoring and selection, and matching productions against token streams.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::preprocess::{Token, TokenStream};
use crate::vocabulary::{LexicalizedStream, Symbol};
use crate::{Error, Language, Result, MAX_NGRAM};

/// A sequence of one to three symbols.
///
/// Serialized as its space-separated spelling, e.g. `class = __a__`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pattern(Vec<Symbol>);

impl Pattern {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() || symbols.len() > MAX_NGRAM {
            return Err(Error::InvalidPattern(format!(
                "length {} outside 1..={MAX_NGRAM}",
                symbols.len()
            )));
        }
        Ok(Pattern(symbols))
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&s.spelling())?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .split(' ')
            .map(Symbol::parse_spelling)
            .collect::<Result<Vec<_>>>()?;
        Pattern::new(symbols)
    }
}

impl TryFrom<String> for Pattern {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Pattern> for String {
    fn from(p: Pattern) -> String {
        p.to_string()
    }
}

/// All distinct contiguous windows of length `1..=n_max` over the stream.
pub fn extract_candidates(stream: &LexicalizedStream, n_max: usize) -> HashSet<Pattern> {
    let symbols = stream.symbols();
    let n_max = n_max.min(MAX_NGRAM);
    let mut out = HashSet::new();
    for n in 1..=n_max {
        for w in symbols.windows(n) {
            out.insert(Pattern(w.to_vec()));
        }
    }
    out
}

/// Presence counts of every candidate production per language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionStats {
    languages: Vec<Language>,
    file_count: Vec<usize>,
    present: HashMap<Pattern, Vec<usize>>,
}

impl ProductionStats {
    pub fn new(languages: Vec<Language>) -> Self {
        let file_count = vec![0; languages.len()];
        ProductionStats {
            languages,
            file_count,
            present: HashMap::new(),
        }
    }

    /// Records one training file of language `label` with its candidate set.
    pub fn add_file<'a>(&mut self, candidates: impl IntoIterator<Item = &'a Pattern>, label: usize) -> Result<()> {
        let m = self.languages.len();
        if label >= m {
            return Err(Error::UnknownLabel { label, languages: m });
        }
        self.file_count[label] += 1;
        for p in candidates {
            match self.present.get_mut(p) {
                Some(counts) => counts[label] += 1,
                None => {
                    let mut counts = vec![0; m];
                    counts[label] = 1;
                    self.present.insert(p.clone(), counts);
                }
            }
        }
        Ok(())
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn file_count(&self) -> &[usize] {
        &self.file_count
    }

    pub fn present_count(&self, pattern: &Pattern) -> Option<&[usize]> {
        self.present.get(pattern).map(Vec::as_slice)
    }

    /// Number of distinct candidates.
    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn candidates(&self) -> impl Iterator<Item = (&Pattern, &[usize])> {
        self.present.iter().map(|(p, c)| (p, c.as_slice()))
    }

    /// MI of a candidate; a pattern never seen has all-absent counts.
    pub fn mutual_information(&self, pattern: &Pattern) -> Result<f64> {
        match self.present.get(pattern) {
            Some(counts) => mutual_information(counts, &self.file_count),
            None => mutual_information(&vec![0; self.file_count.len()], &self.file_count),
        }
    }
}

/// Builds production statistics from per-file candidate sets and labels.
pub fn accumulate_stats<I>(languages: Vec<Language>, files: I) -> Result<ProductionStats>
where
    I: IntoIterator<Item = (HashSet<Pattern>, usize)>,
{
    let mut stats = ProductionStats::new(languages);
    for (candidates, label) in files {
        stats.add_file(&candidates, label)?;
    }
    Ok(stats)
}

/// Mutual information (nats) between a binary presence feature and the
/// language label, from the per-language presence counts and file counts.
///
/// Empty cells contribute zero; no smoothing is applied.
pub fn mutual_information(present: &[usize], file_count: &[usize]) -> Result<f64> {
    if present.len() != file_count.len() {
        return Err(Error::invalid(
            "contingency table",
            format!("{} presence counts for {} languages", present.len(), file_count.len()),
            "one presence count per language",
        ));
    }
    if let Some(j) = (0..present.len()).find(|&j| present[j] > file_count[j]) {
        return Err(Error::invalid(
            "contingency table",
            format!("language {j} has {} presences in {} files", present[j], file_count[j]),
            "presence counts bounded by file counts",
        ));
    }
    let total: usize = file_count.iter().sum();
    if total == 0 {
        return Err(Error::EmptyContingencyTable);
    }
    let n_present: usize = present.iter().sum();
    let n_absent = total - n_present;
    let n = total as f64;

    let mut mi = 0.0;
    for (&p, &files) in present.iter().zip(file_count) {
        for (cell, marginal) in [(p, n_present), (files - p, n_absent)] {
            if cell == 0 {
                continue;
            }
            let cell = cell as f64;
            mi += cell / n * (cell * n / (marginal as f64 * files as f64)).ln();
        }
    }
    // rounding can leave independent tables a hair below zero
    Ok(mi.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Production {
    pub pattern: Pattern,
    pub mi_score: f64,
}

/// Selects every candidate whose MI exceeds `mi_threshold`, ordered by
/// descending MI and then by pattern.
pub fn select_grammar(stats: &ProductionStats, mi_threshold: f64) -> Result<Grammar> {
    if mi_threshold.is_nan() || mi_threshold < 0.0 {
        return Err(Error::invalid("MI threshold", mi_threshold, "a nonnegative number"));
    }
    if stats.file_count.iter().sum::<usize>() == 0 {
        return Err(Error::EmptyContingencyTable);
    }
    let candidates: Vec<(&Pattern, &Vec<usize>)> = stats.present.iter().collect();
    let mut productions: Vec<Production> = candidates
        .par_iter()
        .filter_map(|(pattern, counts)| {
            let mi = mutual_information(counts, &stats.file_count).expect("validated table");
            (mi > mi_threshold).then(|| Production {
                pattern: (*pattern).clone(),
                mi_score: mi,
            })
        })
        .collect();
    productions.sort_by(|a, b| {
        b.mi_score
            .total_cmp(&a.mi_score)
            .then_with(|| a.pattern.cmp(&b.pattern))
    });
    if productions.is_empty() {
        log::warn!("grammar selection at MI > {mi_threshold} kept no productions");
    }
    Grammar::new(productions)
}

/// Whether `pattern` matches `stream` starting at `position`.
///
/// Literals match tokens of the same kind and text, `__a__` matches any
/// alpha token, `__s__` any punctuation token, sentinels their own kind.
pub fn production_matches_at(pattern: &Pattern, stream: &TokenStream, position: usize) -> bool {
    let tokens = stream.tokens();
    if position + pattern.len() > tokens.len() {
        return false;
    }
    pattern
        .symbols()
        .iter()
        .zip(&tokens[position..])
        .all(|(sym, tok)| symbol_matches(sym, tok))
}

fn symbol_matches(sym: &Symbol, tok: &Token) -> bool {
    match (sym, tok) {
        (Symbol::Alpha(a), Token::Alpha(b)) | (Symbol::Punct(a), Token::Punct(b)) => a == b,
        (Symbol::AlphaIdent, Token::Alpha(_))
        | (Symbol::PunctIdent, Token::Punct(_))
        | (Symbol::Number, Token::Number)
        | (Symbol::Newline, Token::Newline)
        | (Symbol::Bof, Token::Bof)
        | (Symbol::Eof, Token::Eof) => true,
        _ => false,
    }
}

/// Sorted, duplicate-free set of production ids present in a sample.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureSet(Vec<usize>);

impl FeatureSet {
    pub fn from_ids(ids: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        FeatureSet(v)
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }
}

// Symbol codes used by the index. Literal codes start at FIRST_LITERAL.
const ALPHA_IDENT: u32 = 0;
const PUNCT_IDENT: u32 = 1;
const NUMBER: u32 = 2;
const NEWLINE: u32 = 3;
const BOF: u32 = 4;
const EOF: u32 = 5;
const FIRST_LITERAL: u32 = 6;
const EMPTY_SLOT: u32 = u32::MAX;

type PatternKey = [u32; MAX_NGRAM];

/// Hash index from encoded patterns to production ids.
///
/// Matching a sample enumerates, for every window, each way of reading its
/// alpha/punct tokens either literally or as the generic identifier, and
/// probes the index with each reading.
#[derive(Debug, Clone, Default)]
struct GrammarIndex {
    alpha_literals: HashMap<String, u32>,
    punct_literals: HashMap<String, u32>,
    patterns: HashMap<PatternKey, usize>,
    max_len: usize,
}

impl GrammarIndex {
    fn build(productions: &[Production]) -> Self {
        let mut index = GrammarIndex::default();
        let mut next = FIRST_LITERAL;
        for (id, prod) in productions.iter().enumerate() {
            let mut key = [EMPTY_SLOT; MAX_NGRAM];
            for (slot, sym) in key.iter_mut().zip(prod.pattern.symbols()) {
                *slot = match sym {
                    Symbol::Alpha(t) => *index.alpha_literals.entry(t.clone()).or_insert_with(|| {
                        next += 1;
                        next - 1
                    }),
                    Symbol::Punct(t) => *index.punct_literals.entry(t.clone()).or_insert_with(|| {
                        next += 1;
                        next - 1
                    }),
                    Symbol::AlphaIdent => ALPHA_IDENT,
                    Symbol::PunctIdent => PUNCT_IDENT,
                    Symbol::Number => NUMBER,
                    Symbol::Newline => NEWLINE,
                    Symbol::Bof => BOF,
                    Symbol::Eof => EOF,
                };
            }
            index.patterns.insert(key, id);
            index.max_len = index.max_len.max(prod.pattern.len());
        }
        index
    }

    /// The codes a token can be read as: its literal (if any production
    /// mentions it) and its generic class.
    fn readings(&self, tok: &Token) -> ([u32; 2], usize) {
        match tok {
            Token::Alpha(t) => match self.alpha_literals.get(t.as_str()) {
                Some(&code) => ([code, ALPHA_IDENT], 2),
                None => ([ALPHA_IDENT, 0], 1),
            },
            Token::Punct(t) => match self.punct_literals.get(t.as_str()) {
                Some(&code) => ([code, PUNCT_IDENT], 2),
                None => ([PUNCT_IDENT, 0], 1),
            },
            Token::Number => ([NUMBER, 0], 1),
            Token::Newline => ([NEWLINE, 0], 1),
            Token::Bof => ([BOF, 0], 1),
            Token::Eof => ([EOF, 0], 1),
        }
    }

    fn features(&self, tokens: &[Token]) -> FeatureSet {
        if self.patterns.is_empty() {
            return FeatureSet::default();
        }
        let readings: Vec<([u32; 2], usize)> = tokens.iter().map(|t| self.readings(t)).collect();
        let mut seen = vec![false; self.patterns.len()];
        let mut hits = Vec::new();
        for start in 0..readings.len() {
            let longest = self.max_len.min(readings.len() - start);
            for len in 1..=longest {
                let window = &readings[start..start + len];
                let mut choice = [0usize; MAX_NGRAM];
                'combos: loop {
                    let mut key = [EMPTY_SLOT; MAX_NGRAM];
                    for k in 0..len {
                        key[k] = window[k].0[choice[k]];
                    }
                    if let Some(&id) = self.patterns.get(&key) {
                        if !seen[id] {
                            seen[id] = true;
                            hits.push(id);
                        }
                    }
                    // odometer over the per-position readings
                    let mut k = 0;
                    loop {
                        if k == len {
                            break 'combos;
                        }
                        choice[k] += 1;
                        if choice[k] < window[k].1 {
                            break;
                        }
                        choice[k] = 0;
                        k += 1;
                    }
                }
            }
        }
        FeatureSet::from_ids(hits)
    }
}

/// The selected productions, in a fixed id order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Production>", into = "Vec<Production>")]
pub struct Grammar {
    productions: Vec<Production>,
    index: GrammarIndex,
}

impl PartialEq for Grammar {
    fn eq(&self, other: &Self) -> bool {
        self.productions == other.productions
    }
}

impl Grammar {
    /// Builds a grammar; ids are positions in `productions`.
    pub fn new(productions: Vec<Production>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(productions.len());
        for p in &productions {
            if !seen.insert(&p.pattern) {
                return Err(Error::DuplicateProduction(p.pattern.to_string()));
            }
            if !(p.mi_score >= 0.0 && p.mi_score.is_finite()) {
                return Err(Error::InvalidPattern(format!(
                    "`{}` has MI score {}",
                    p.pattern, p.mi_score
                )));
            }
        }
        let index = GrammarIndex::build(&productions);
        Ok(Grammar { productions, index })
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn get(&self, id: usize) -> Option<&Production> {
        self.productions.get(id)
    }

    pub fn len(&self) -> usize {
        self.productions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.productions.is_empty()
    }

    /// Number of unigram, bigram and trigram productions.
    pub fn count_by_length(&self) -> [usize; MAX_NGRAM] {
        let mut counts = [0; MAX_NGRAM];
        for p in &self.productions {
            counts[p.pattern.len() - 1] += 1;
        }
        counts
    }

    /// `mi_score TAB pattern` lines in id order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for p in &self.productions {
            out.push_str(&format!("{:.6}\t{}\n", p.mi_score, p.pattern));
        }
        out
    }
}

impl TryFrom<Vec<Production>> for Grammar {
    type Error = Error;

    fn try_from(productions: Vec<Production>) -> Result<Self> {
        Grammar::new(productions)
    }
}

impl From<Grammar> for Vec<Production> {
    fn from(g: Grammar) -> Self {
        g.productions
    }
}

/// Ids of all productions that match somewhere in `stream`.
pub fn extract_features(stream: &TokenStream, grammar: &Grammar) -> FeatureSet {
    grammar.index.features(stream.tokens())
}
