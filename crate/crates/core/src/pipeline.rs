//! End-to-end training and classification.

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comments::CommentSyntax;
use crate::corpus::{ingest, split, CorpusManifest, CorpusSource, IngestOptions, Split};
use crate::grammar::{accumulate_stats, extract_candidates, extract_features, select_grammar};
use crate::maxent::{predict, train_with_progress, MaxentModel, Sample, TraceEntry, TrainConfig, TrainingSet};
use crate::model_file::{ModelFile, TrainingMetadata};
use crate::preprocess::{preprocess_text, TokenStream};
use crate::vocabulary::{build_keyword_table, count_frequencies, lexicalize, KeywordTable};
use crate::{Error, Language, Result, DEFAULT_KEYWORD_THRESHOLD, DEFAULT_MI_THRESHOLD, MAX_NGRAM};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub keyword_threshold: f64,
    pub mi_threshold: f64,
    pub n_max: usize,
    pub train: TrainConfig,
    pub comment_syntax: CommentSyntax,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            keyword_threshold: DEFAULT_KEYWORD_THRESHOLD,
            mi_threshold: DEFAULT_MI_THRESHOLD,
            n_max: MAX_NGRAM,
            train: TrainConfig::default(),
            comment_syntax: CommentSyntax::builtin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitParams {
    pub ingest: IngestOptions,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        SplitParams {
            ingest: IngestOptions::default(),
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// A trained model with everything needed to write it out.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model_file: ModelFile,
    pub trace: Vec<TraceEntry>,
    /// Distinct candidate productions seen before MI selection.
    pub candidate_count: usize,
}

impl Trained {
    pub fn model(&self) -> &MaxentModel {
        &self.model_file.model
    }

    /// Grammar size by n-gram length, e.g. `12 unigrams, 40 bigrams, 31 trigrams`.
    pub fn grammar_summary(&self) -> String {
        let [u, b, t] = self.model().grammar().count_by_length();
        format!(
            "{} productions: {u} unigrams, {b} bigrams, {t} trigrams (from {} candidates)",
            u + b + t,
            self.candidate_count
        )
    }
}

/// Trains on in-memory labeled files. `languages` fixes the label order and
/// every language must have at least one file.
pub fn train_from_samples<B, F>(
    languages: &[Language],
    samples: &[(Language, B)],
    params: &TrainParams,
    progress: F,
) -> Result<Trained>
where
    B: AsRef<[u8]> + Sync,
    F: FnMut(&TraceEntry),
{
    if !(1..=MAX_NGRAM).contains(&params.n_max) {
        return Err(Error::invalid("n_max", params.n_max, "1, 2 or 3"));
    }
    if samples.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let index: BTreeMap<&Language, usize> = languages.iter().enumerate().map(|(i, l)| (l, i)).collect();
    if index.len() != languages.len() {
        let mut seen = std::collections::HashSet::new();
        let dup = languages.iter().find(|l| !seen.insert(*l)).expect("duplicate exists");
        return Err(Error::DuplicateLanguage(dup.clone()));
    }
    let labels: Vec<usize> = samples
        .iter()
        .map(|(l, _)| index.get(l).copied().ok_or_else(|| Error::UnknownLanguage(l.clone())))
        .collect::<Result<_>>()?;

    let mut keywords = BTreeMap::new();
    for (j, lang) in languages.iter().enumerate() {
        let files: Vec<&[u8]> = samples
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == j)
            .map(|((_, b), _)| b.as_ref())
            .collect();
        if files.is_empty() {
            return Err(Error::EmptyLanguageSample(lang.clone()));
        }
        let freqs = count_frequencies(&files, lang, &params.comment_syntax)?;
        let table = build_keyword_table(&freqs, params.keyword_threshold)?;
        info!("{lang}: {} keywords from {} files", table.len(), files.len());
        keywords.insert(lang.clone(), table);
    }
    let tables: Vec<&KeywordTable> = languages.iter().map(|l| &keywords[l]).collect();

    let streams: Vec<TokenStream> = samples.par_iter().map(|(_, raw)| preprocess_text(raw.as_ref())).collect();
    let candidates: Vec<_> = streams
        .par_iter()
        .zip(&labels)
        .map(|(s, &l)| extract_candidates(&lexicalize(s, tables[l]), params.n_max))
        .collect();
    let stats = accumulate_stats(languages.to_vec(), candidates.into_iter().zip(labels.iter().copied()))?;
    let candidate_count = stats.len();
    let grammar = select_grammar(&stats, params.mi_threshold)?;
    drop(stats);
    if grammar.is_empty() {
        return Err(Error::EmptyGrammar);
    }

    let features: Vec<_> = streams.par_iter().map(|s| extract_features(s, &grammar)).collect();
    drop(streams);
    let data = TrainingSet::new(
        languages.to_vec(),
        features
            .into_iter()
            .zip(labels)
            .map(|(features, label)| Sample { features, label })
            .collect(),
    )?;
    let outcome = train_with_progress(&data, grammar, &params.train, progress)?;

    let metadata = TrainingMetadata {
        keyword_threshold: params.keyword_threshold,
        mi_threshold: params.mi_threshold,
        sigma: params.train.sigma,
        n_max: params.n_max,
        min_bytes: 0,
        max_bytes: 0,
        train_fraction: None,
        seed: None,
        tol: params.train.tol,
        max_iters: params.train.max_iters,
        corpus_digest: String::new(),
        train_files: samples.len(),
        converged: outcome.converged,
        iterations: outcome.iterations,
        grad_max_norm: outcome.grad_max_norm,
        final_penalized_ll: outcome.trace.last().map_or(0.0, |t| t.penalized_ll),
        created: None,
    };
    Ok(Trained {
        model_file: ModelFile {
            comment_syntax: params.comment_syntax.subset(languages),
            model: outcome.model,
            keywords,
            metadata,
        },
        trace: outcome.trace,
        candidate_count,
    })
}

/// Reads every record of a manifest, in order.
pub fn load_records(manifest: &CorpusManifest) -> Result<Vec<(Language, Vec<u8>)>> {
    manifest
        .records
        .par_iter()
        .map(|r| Ok((r.language.clone(), r.read()?)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct CorpusTraining {
    pub trained: Trained,
    pub split: Split,
}

/// Ingest, split by repository, and train on the train side.
pub fn train_from_corpus<F>(
    sources: &[CorpusSource],
    split_params: &SplitParams,
    params: &TrainParams,
    progress: F,
) -> Result<CorpusTraining>
where
    F: FnMut(&TraceEntry),
{
    let manifest = ingest(sources, &split_params.ingest)?;
    let split = split(&manifest, split_params.train_fraction, split_params.seed)?;
    let languages = manifest.languages();
    info!(
        "{} files ingested: {} train, {} test",
        manifest.len(),
        split.train.len(),
        split.test.len()
    );
    let samples = load_records(&split.train)?;
    let mut trained = train_from_samples(&languages, &samples, params, progress)?;
    let meta = &mut trained.model_file.metadata;
    meta.min_bytes = split_params.ingest.min_bytes;
    meta.max_bytes = split_params.ingest.max_bytes;
    meta.train_fraction = Some(split_params.train_fraction);
    meta.seed = Some(split_params.seed);
    meta.corpus_digest = split.train.digest();
    Ok(CorpusTraining { trained, split })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub language: Language,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResult {
    /// Descending probability; ties keep model language order.
    pub ranked: Vec<Ranked>,
    pub matched_productions: usize,
    /// No production matched, so the distribution is uniform.
    pub no_evidence: bool,
}

impl ClassifyResult {
    pub fn best(&self) -> &Language {
        &self.ranked[0].language
    }

    pub fn truncate(&mut self, top: usize) {
        self.ranked.truncate(top.max(1));
    }

    pub fn render_text(&self) -> String {
        let width = self.ranked.iter().map(|r| r.language.as_str().chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.ranked {
            out.push_str(&format!("{:<width$}  {:.6}\n", r.language.as_str(), r.probability));
        }
        out.push_str(&format!("matched productions: {}", self.matched_productions));
        if self.no_evidence {
            out.push_str(" (no evidence)");
        }
        out.push('\n');
        out
    }
}

/// Preprocesses, extracts features and ranks the model's languages.
pub fn classify(model: &MaxentModel, raw: &[u8]) -> Result<ClassifyResult> {
    let features = extract_features(&preprocess_text(raw), model.grammar());
    let prediction = predict(&features, model)?;
    let mut order: Vec<usize> = (0..model.languages().len()).collect();
    order.sort_by(|&a, &b| prediction.probabilities[b].total_cmp(&prediction.probabilities[a]));
    Ok(ClassifyResult {
        ranked: order
            .into_iter()
            .map(|j| Ranked {
                language: model.languages()[j].clone(),
                probability: prediction.probabilities[j],
            })
            .collect(),
        matched_productions: features.len(),
        no_evidence: features.is_empty(),
    })
}
