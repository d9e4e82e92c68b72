//! Conditional maximum-entropy classifier over grammar production features.
//!
//! A sample's score for language `j` is the sum of the weights `λ[i][j]` of
//! the productions `i` present in it; probabilities are the softmax of the
//! scores. Training maximizes the log likelihood of the training labels
//! minus the Gaussian penalty `Σ λ² / (2σ²)`.

pub mod lbfgs;

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grammar::{FeatureSet, Grammar};
use crate::{Error, Language, Result, DEFAULT_SIGMA};

/// Dense `productions × languages` weight matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct Weights {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawWeights {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl TryFrom<RawWeights> for Weights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        Weights::from_values(raw.rows, raw.cols, raw.values)
    }
}

impl Weights {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Weights {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::CorruptModel(format!(
                "{} weight values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Weights { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, production: usize, language: usize) -> f64 {
        self.values[production * self.cols + language]
    }

    pub fn set(&mut self, production: usize, language: usize, value: f64) {
        self.values[production * self.cols + language] = value;
    }

    pub fn row(&self, production: usize) -> &[f64] {
        &self.values[production * self.cols..(production + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A trained (or hand-built) classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxentModel {
    languages: Vec<Language>,
    grammar: Grammar,
    weights: Weights,
    sigma: f64,
}

impl MaxentModel {
    pub fn new(languages: Vec<Language>, grammar: Grammar, weights: Weights, sigma: f64) -> Result<Self> {
        if languages.is_empty() {
            return Err(Error::invalid("language list", "[]", "at least one language"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = languages.iter().find(|l| !seen.insert(*l)) {
            return Err(Error::DuplicateLanguage(dup.clone()));
        }
        if weights.rows != grammar.len() || weights.cols != languages.len() {
            return Err(Error::WeightShape {
                rows: weights.rows,
                cols: weights.cols,
                expected_rows: grammar.len(),
                expected_cols: languages.len(),
            });
        }
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::invalid("sigma", sigma, "a positive number"));
        }
        Ok(MaxentModel {
            languages,
            grammar,
            weights,
            sigma,
        })
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn language_index(&self, lang: &Language) -> Option<usize> {
        self.languages.iter().position(|l| l == lang)
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn check_features(&self, features: &FeatureSet) -> Result<()> {
        match features.ids().last() {
            Some(&id) if id >= self.grammar.len() => Err(Error::UnknownFeature {
                id,
                size: self.grammar.len(),
            }),
            _ => Ok(()),
        }
    }

    /// `weights:` dump, one `pattern TAB w_1 ... w_m` line per production.
    pub fn dump_weights(&self) -> String {
        let mut out = format!(
            "# {} productions x {} languages\npattern\t{}\n",
            self.weights.rows,
            self.weights.cols,
            self.languages.iter().map(Language::as_str).collect::<Vec<_>>().join("\t")
        );
        for (i, p) in self.grammar.productions().iter().enumerate() {
            let row: Vec<String> = self.weights.row(i).iter().map(|w| format!("{w:.6}")).collect();
            out.push_str(&format!("{}\t{}\n", p.pattern, row.join("\t")));
        }
        out
    }
}

/// Per-language probabilities for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    /// Index of the most probable language; ties go to the earliest.
    pub best: usize,
}

fn scores_into(features: &[usize], weights: &[f64], cols: usize, scores: &mut [f64]) {
    scores.iter_mut().for_each(|s| *s = 0.0);
    for &i in features {
        for (s, w) in scores.iter_mut().zip(&weights[i * cols..(i + 1) * cols]) {
            *s += w;
        }
    }
}

/// Replaces scores by probabilities in place and returns `ln Σ exp(score)`.
fn softmax_in_place(scores: &mut [f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    max + sum.ln()
}

/// Language probabilities of a sample with the given features.
pub fn predict(features: &FeatureSet, model: &MaxentModel) -> Result<Prediction> {
    model.check_features(features)?;
    let mut probabilities = vec![0.0; model.languages.len()];
    scores_into(features.ids(), &model.weights.values, model.weights.cols, &mut probabilities);
    softmax_in_place(&mut probabilities);
    let mut best = 0;
    for (j, &p) in probabilities.iter().enumerate() {
        if p > probabilities[best] {
            best = j;
        }
    }
    Ok(Prediction { probabilities, best })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub features: FeatureSet,
    pub label: usize,
}

/// Labeled feature sets; every sample carries equal empirical weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSet {
    languages: Vec<Language>,
    samples: Vec<Sample>,
}

impl TrainingSet {
    pub fn new(languages: Vec<Language>, samples: Vec<Sample>) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| s.label >= languages.len()) {
            return Err(Error::UnknownLabel {
                label: s.label,
                languages: languages.len(),
            });
        }
        Ok(TrainingSet { languages, samples })
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn max_feature(&self) -> Option<usize> {
        self.samples.iter().filter_map(|s| s.features.ids().last().copied()).max()
    }
}

// Fixed partition count keeps the floating-point summation order, and
// therefore the trained weights, independent of the thread pool size.
const PARTITIONS: usize = 8;

/// Penalized log likelihood and (optionally) its gradient at `weights`.
fn objective(data: &TrainingSet, weights: &[f64], cols: usize, sigma: f64, with_grad: bool) -> (f64, Vec<f64>) {
    let n = data.samples.len();
    let chunk = n.div_ceil(PARTITIONS).max(1);
    let partials: Vec<(f64, Vec<f64>)> = data
        .samples
        .par_chunks(chunk)
        .map(|samples| {
            let mut ll = 0.0;
            let mut grad = if with_grad { vec![0.0; weights.len()] } else { Vec::new() };
            let mut probs = vec![0.0; cols];
            for s in samples {
                let ids = s.features.ids();
                scores_into(ids, weights, cols, &mut probs);
                let label_score = probs[s.label];
                let lse = softmax_in_place(&mut probs);
                ll += label_score - lse;
                if with_grad {
                    for &i in ids {
                        let row = &mut grad[i * cols..(i + 1) * cols];
                        for (g, p) in row.iter_mut().zip(&probs) {
                            *g -= p;
                        }
                        row[s.label] += 1.0;
                    }
                }
            }
            (ll, grad)
        })
        .collect();

    let mut ll = 0.0;
    let mut grad = if with_grad { vec![0.0; weights.len()] } else { Vec::new() };
    for (pll, pgrad) in partials {
        ll += pll;
        for (g, pg) in grad.iter_mut().zip(pgrad) {
            *g += pg;
        }
    }

    let inv_var = 1.0 / (sigma * sigma);
    ll -= 0.5 * inv_var * weights.iter().map(|w| w * w).sum::<f64>();
    for (g, w) in grad.iter_mut().zip(weights) {
        *g -= w * inv_var;
    }
    (ll, grad)
}

fn check_compatible(data: &TrainingSet, model: &MaxentModel) -> Result<()> {
    if data.languages != model.languages {
        return Err(Error::invalid(
            "training set",
            "language list differs from the model's",
            "the model's language list",
        ));
    }
    match data.max_feature() {
        Some(id) if id >= model.grammar.len() => Err(Error::UnknownFeature {
            id,
            size: model.grammar.len(),
        }),
        _ => Ok(()),
    }
}

/// `Σ_s ln p(label(s) | s) − Σ λ² / (2σ²)`.
pub fn penalized_log_likelihood(data: &TrainingSet, model: &MaxentModel) -> Result<f64> {
    check_compatible(data, model)?;
    let w = &model.weights;
    Ok(objective(data, &w.values, w.cols, model.sigma, false).0)
}

/// The unpenalized `Σ_s ln p(label(s) | s)`.
pub fn log_likelihood(data: &TrainingSet, model: &MaxentModel) -> Result<f64> {
    let penalty: f64 = model.weights.values.iter().map(|w| w * w).sum::<f64>() / (2.0 * model.sigma * model.sigma);
    Ok(penalized_log_likelihood(data, model)? + penalty)
}

/// Gradient of [`penalized_log_likelihood`]: empirical counts minus expected
/// counts minus `λ / σ²`.
pub fn gradient(data: &TrainingSet, model: &MaxentModel) -> Result<Weights> {
    check_compatible(data, model)?;
    let w = &model.weights;
    let (_, grad) = objective(data, &w.values, w.cols, model.sigma, true);
    Weights::from_values(w.rows, w.cols, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub sigma: f64,
    /// Gradient max-norm at which training stops.
    pub tol: f64,
    pub max_iters: usize,
    /// L-BFGS correction pairs.
    pub memory: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sigma: DEFAULT_SIGMA,
            tol: 1e-4,
            max_iters: 500,
            memory: 10,
        }
    }
}

/// One line of the training progress trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub penalized_ll: f64,
    pub grad_max_norm: f64,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iter {:>4}  penalized_ll {:.6}  grad_max {:.3e}",
            self.iteration, self.penalized_ll, self.grad_max_norm
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MaxentModel,
    pub trace: Vec<TraceEntry>,
    /// False when the tolerance was not reached; the model is then the best
    /// iterate found.
    pub converged: bool,
    pub iterations: usize,
    pub grad_max_norm: f64,
}

/// Trains weights from zero by maximizing the penalized log likelihood.
pub fn train(data: &TrainingSet, grammar: Grammar, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(data, grammar, config, |_| {})
}

/// Like [`train`], reporting each accepted iterate as it happens.
pub fn train_with_progress<F>(data: &TrainingSet, grammar: Grammar, config: &TrainConfig, mut progress: F) -> Result<TrainOutcome>
where
    F: FnMut(&TraceEntry),
{
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if config.tol.is_nan() || config.tol <= 0.0 {
        return Err(Error::invalid("tolerance", config.tol, "a positive number"));
    }
    let languages = data.languages.clone();
    let zeros = Weights::zeros(grammar.len(), languages.len());
    let model = MaxentModel::new(languages, grammar, zeros, config.sigma)?;
    check_compatible(data, &model)?;

    let cols = model.weights.cols;
    let sigma = model.sigma;
    let mut trace = Vec::new();
    let lbfgs_config = lbfgs::LbfgsConfig {
        memory: config.memory.max(1),
        tol: config.tol,
        max_iters: config.max_iters,
    };
    let minimum = lbfgs::minimize(
        |w| {
            let (ll, grad) = objective(data, w, cols, sigma, true);
            (-ll, grad.into_iter().map(|g| -g).collect())
        },
        model.weights.values.clone(),
        &lbfgs_config,
        |it| {
            let entry = TraceEntry {
                iteration: it.iteration,
                penalized_ll: -it.value,
                grad_max_norm: it.grad_max_norm,
            };
            progress(&entry);
            trace.push(entry);
        },
    )
    .map_err(|e| Error::NonFinite {
        iteration: e.iteration,
        what: e.what,
    })?;

    let converged = minimum.converged();
    if !converged {
        log::warn!(
            "training stopped after {} iterations ({:?}) with gradient max-norm {:.3e} above tolerance {:.1e}",
            minimum.iterations,
            minimum.stop,
            trace.last().map_or(f64::NAN, |t| t.grad_max_norm),
            config.tol
        );
    }
    let grad_max_norm = trace.last().map_or(0.0, |t| t.grad_max_norm);
    let MaxentModel {
        languages, grammar, ..
    } = model;
    let weights = Weights::from_values(grammar.len(), languages.len(), minimum.x)?;
    Ok(TrainOutcome {
        model: MaxentModel::new(languages, grammar, weights, sigma)?,
        trace,
        converged,
        iterations: minimum.iterations,
        grad_max_norm,
    })
}
