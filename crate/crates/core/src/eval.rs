//! Scoring a trained model on labeled test samples.
//!
//! Precision and recall follow the reproduced reports: precision of a
//! language is `correct / labeled` (row sum of the confusion matrix) and
//! recall is `correct / predicted` (column sum). This is the reverse of the
//! usual naming; F is symmetric so it is unaffected.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grammar::extract_features;
use crate::maxent::{predict, MaxentModel, Prediction};
use crate::preprocess::preprocess_text;
use crate::{Error, Language, Result};

/// One line explaining the precision/recall naming, printed under reports.
pub const NAMING_FOOTNOTE: &str =
    "precision = correct/labeled and recall = correct/predicted; these are swapped relative to standard usage";

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    languages: Vec<Language>,
    counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(languages: Vec<Language>) -> Self {
        let n = languages.len();
        ConfusionMatrix {
            languages,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn record(&mut self, actual: usize, predicted: usize) {
        self.counts[actual][predicted] += 1;
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn get(&self, actual: usize, predicted: usize) -> usize {
        self.counts[actual][predicted]
    }

    /// Number of test samples labeled `j`.
    pub fn row_sum(&self, j: usize) -> usize {
        self.counts[j].iter().sum()
    }

    /// Number of test samples predicted as `j`.
    pub fn column_sum(&self, j: usize) -> usize {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn diagonal_sum(&self) -> usize {
        (0..self.languages.len()).map(|j| self.counts[j][j]).sum()
    }

    fn merge(mut self, other: &ConfusionMatrix) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageMetrics {
    pub language: Language,
    pub labeled: usize,
    pub predicted: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl LanguageMetrics {
    /// True when precision was 0/0.
    pub fn precision_undefined(&self) -> bool {
        self.labeled == 0
    }

    /// True when recall was 0/0.
    pub fn recall_undefined(&self) -> bool {
        self.predicted == 0
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_language: Vec<LanguageMetrics>,
    /// Unweighted mean over languages with at least one test sample.
    pub average: Averages,
    pub accuracy: f64,
    pub total: usize,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self> {
        let total = confusion.total();
        if total == 0 {
            return Err(Error::EmptyTestSet);
        }
        let per_language: Vec<LanguageMetrics> = confusion
            .languages()
            .iter()
            .enumerate()
            .map(|(j, lang)| {
                let labeled = confusion.row_sum(j);
                let predicted = confusion.column_sum(j);
                let correct = confusion.get(j, j);
                let precision = ratio(correct, labeled);
                let recall = ratio(correct, predicted);
                LanguageMetrics {
                    language: lang.clone(),
                    labeled,
                    predicted,
                    correct,
                    precision,
                    recall,
                    f: f_measure(precision, recall),
                }
            })
            .collect();
        let present: Vec<&LanguageMetrics> = per_language.iter().filter(|m| m.labeled > 0).collect();
        let mean = |get: fn(&LanguageMetrics) -> f64| present.iter().map(|m| get(m)).sum::<f64>() / present.len() as f64;
        let average = Averages {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f: mean(|m| m.f),
        };
        Ok(EvalReport {
            per_language,
            average,
            accuracy: confusion.diagonal_sum() as f64 / total as f64,
            total,
            confusion,
        })
    }

    pub fn macro_f(&self) -> f64 {
        self.average.f
    }
}

/// Predicts every sample and scores the predictions. Predictions are returned
/// in sample order.
pub fn evaluate_detailed<B>(model: &MaxentModel, samples: &[(Language, B)]) -> Result<(EvalReport, Vec<Prediction>)>
where
    B: AsRef<[u8]> + Sync,
{
    if samples.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut unknown: Vec<Language> = samples
        .iter()
        .filter(|(lang, _)| model.language_index(lang).is_none())
        .map(|(lang, _)| lang.clone())
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(Error::LabelsOutsideModel(unknown));
    }

    let predictions = samples
        .par_iter()
        .map(|(_, raw)| {
            let features = extract_features(&preprocess_text(raw.as_ref()), model.grammar());
            predict(&features, model)
        })
        .collect::<Result<Vec<_>>>()?;

    let languages = model.languages().to_vec();
    let confusion = samples
        .iter()
        .zip(&predictions)
        .fold(ConfusionMatrix::new(languages), |mut acc, ((lang, _), p)| {
            acc.record(model.language_index(lang).expect("checked above"), p.best);
            acc
        });
    Ok((EvalReport::from_confusion(confusion)?, predictions))
}

pub fn evaluate<B>(model: &MaxentModel, samples: &[(Language, B)]) -> Result<EvalReport>
where
    B: AsRef<[u8]> + Sync,
{
    evaluate_detailed(model, samples).map(|(report, _)| report)
}

/// Sums confusion matrices over the same language list.
pub fn merge_confusion<'a, I>(languages: Vec<Language>, parts: I) -> ConfusionMatrix
where
    I: IntoIterator<Item = &'a ConfusionMatrix>,
{
    parts.into_iter().fold(ConfusionMatrix::new(languages), ConfusionMatrix::merge)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

pub fn render_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => render_text(report),
    }
}

pub fn parse_report_json(text: &str) -> Result<EvalReport> {
    Ok(serde_json::from_str(text)?)
}

fn cell(value: f64, undefined: bool) -> String {
    if undefined {
        format!("{value:.3}*")
    } else {
        format!("{value:.3}")
    }
}

fn render_text(report: &EvalReport) -> String {
    let name_width = report
        .per_language
        .iter()
        .map(|m| m.language.as_str().chars().count())
        .chain(["Language".len(), "Average".len()])
        .max()
        .unwrap_or(8);

    let mut out = String::new();
    let _ = writeln!(out, "{:<name_width$}  {:>9}  {:>9}  {:>9}", "Language", "Precision", "Recall", "F");
    let mut any_undefined = false;
    for m in &report.per_language {
        any_undefined |= m.precision_undefined() || m.recall_undefined();
        let _ = writeln!(
            out,
            "{:<name_width$}  {:>9}  {:>9}  {:>9}",
            m.language.as_str(),
            cell(m.precision, m.precision_undefined()),
            cell(m.recall, m.recall_undefined()),
            cell(m.f, m.precision_undefined() && m.recall_undefined()),
        );
    }
    let a = &report.average;
    let _ = writeln!(
        out,
        "{:<name_width$}  {:>9.3}  {:>9.3}  {:>9.3}",
        "Average", a.precision, a.recall, a.f
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "accuracy {:.3} over {} test files", report.accuracy, report.total);
    if any_undefined {
        let _ = writeln!(out, "* 0/0, reported as 0");
    }
    let _ = writeln!(out, "note: {NAMING_FOOTNOTE}");
    let _ = writeln!(out);
    out.push_str(&render_confusion(&report.confusion));
    out
}

/// Labeled grid, rows are actual languages and columns predicted ones.
pub fn render_confusion(confusion: &ConfusionMatrix) -> String {
    let names: Vec<&str> = confusion.languages().iter().map(Language::as_str).collect();
    let row_width = names.iter().map(|n| n.chars().count()).chain([13]).max().unwrap_or(13);
    let col_widths: Vec<usize> = names
        .iter()
        .enumerate()
        .map(|(j, n)| {
            let widest = (0..names.len()).map(|i| confusion.get(i, j).to_string().len()).max().unwrap_or(1);
            n.chars().count().max(widest)
        })
        .collect();

    let mut out = String::new();
    let _ = write!(out, "{:<row_width$}", "actual\\pred");
    for (n, w) in names.iter().zip(&col_widths) {
        let _ = write!(out, "  {n:>w$}");
    }
    out.push('\n');
    for (i, n) in names.iter().enumerate() {
        let _ = write!(out, "{n:<row_width$}");
        for (j, w) in col_widths.iter().enumerate() {
            let _ = write!(out, "  {:>w$}", confusion.get(i, j));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn langs(names: &[&str]) -> Vec<Language> {
        names.iter().map(|&n| Language::from(n)).collect()
    }

    fn matrix(names: &[&str], pairs: &[(usize, usize)]) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::new(langs(names));
        for &(a, p) in pairs {
            m.record(a, p);
        }
        m
    }

    #[test]
    fn one_misclassified_sample() {
        // A: two samples, one predicted B. B: two samples, both correct.
        let r = EvalReport::from_confusion(matrix(&["A", "B"], &[(0, 0), (0, 1), (1, 1), (1, 1)])).unwrap();
        let a = &r.per_language[0];
        let b = &r.per_language[1];
        assert_eq!((a.precision, a.recall), (0.5, 1.0));
        assert!((a.f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.precision, 1.0);
        assert!((b.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.f - 0.8).abs() < 1e-15);
        assert_eq!(r.accuracy, 0.75);
    }

    #[test]
    fn perfect_classifier() {
        let r = EvalReport::from_confusion(matrix(&["A", "B", "C"], &[(0, 0), (1, 1), (1, 1), (2, 2)])).unwrap();
        for m in &r.per_language {
            assert_eq!((m.precision, m.recall, m.f), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.average, Averages { precision: 1.0, recall: 1.0, f: 1.0 });
    }

    #[test]
    fn everything_predicted_as_first_language() {
        let r = EvalReport::from_confusion(matrix(&["A", "B"], &[(0, 0), (1, 0), (1, 0), (0, 0), (1, 0)])).unwrap();
        let a = &r.per_language[0];
        assert_eq!(a.recall, 2.0 / 5.0);
        let b = &r.per_language[1];
        assert_eq!((b.precision, b.recall, b.f), (0.0, 0.0, 0.0));
        assert!(b.recall_undefined());
        assert!(!b.precision_undefined());
    }

    #[test]
    fn averages_skip_languages_without_test_samples() {
        let r = EvalReport::from_confusion(matrix(&["A", "B", "C"], &[(0, 0), (1, 0)])).unwrap();
        // C has no samples: excluded. A: p=1, r=1/2. B: p=0, r=0 (0/0).
        assert!((r.average.precision - 0.5).abs() < 1e-15);
        assert!((r.average.recall - 0.25).abs() < 1e-15);
        assert!((r.average.f - (2.0 / 3.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_confusion_is_an_error() {
        assert!(matches!(
            EvalReport::from_confusion(ConfusionMatrix::new(langs(&["A"]))),
            Err(Error::EmptyTestSet)
        ));
    }

    #[test]
    fn single_language_text_report() {
        let r = EvalReport::from_confusion(matrix(&["Go"], &[(0, 0), (0, 0)])).unwrap();
        let text = render_report(&r, ReportFormat::Text);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["Language", "Precision", "Recall", "F"]);
        assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["Go", "1.000", "1.000", "1.000"]);
        assert_eq!(lines[2].split_whitespace().collect::<Vec<_>>(), ["Average", "1.000", "1.000", "1.000"]);
        assert!(text.contains(NAMING_FOOTNOTE));
        assert!(!text.contains("0/0"));
    }

    #[test]
    fn average_prints_at_three_decimals() {
        let mut r = EvalReport::from_confusion(matrix(&["Go"], &[(0, 0)])).unwrap();
        r.average.f = 0.99;
        let text = render_report(&r, ReportFormat::Text);
        let avg = text.lines().find(|l| l.starts_with("Average")).unwrap();
        assert!(avg.ends_with("0.990"), "{avg}");
    }

    #[test]
    fn undefined_cells_are_marked() {
        let r = EvalReport::from_confusion(matrix(&["A", "B"], &[(0, 0), (0, 0)])).unwrap();
        let text = render_report(&r, ReportFormat::Text);
        let b = text.lines().find(|l| l.starts_with('B')).unwrap();
        assert_eq!(b.split_whitespace().collect::<Vec<_>>(), ["B", "0.000*", "0.000*", "0.000*"]);
        assert!(text.contains("* 0/0"));
    }

    #[test]
    fn confusion_grid_layout() {
        let grid = render_confusion(&matrix(&["A", "Bee"], &[(0, 0), (0, 1), (1, 1)]));
        let rows: Vec<Vec<&str>> = grid.lines().map(|l| l.split_whitespace().collect()).collect();
        assert_eq!(rows[0], ["actual\\pred", "A", "Bee"]);
        assert_eq!(rows[1], ["A", "1", "1"]);
        assert_eq!(rows[2], ["Bee", "0", "1"]);
    }

    #[test]
    fn merge_sums_counts() {
        let a = matrix(&["A", "B"], &[(0, 0), (1, 0)]);
        let b = matrix(&["A", "B"], &[(1, 1)]);
        let m = merge_confusion(langs(&["A", "B"]), [&a, &b]);
        assert_eq!(m.counts(), &[vec![1, 0], vec![1, 1]]);
    }

    fn arb_confusion() -> impl Strategy<Value = ConfusionMatrix> {
        (1usize..6).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 1..60).prop_map(move |pairs| {
                let names: Vec<String> = (0..n).map(|i| format!("L{i}")).collect();
                let names: Vec<&str> = names.iter().map(String::as_str).collect();
                matrix(&names, &pairs)
            })
        })
    }

    proptest! {
        #[test]
        fn report_identities(confusion in arb_confusion()) {
            let r = EvalReport::from_confusion(confusion.clone()).unwrap();
            let labeled: usize = r.per_language.iter().map(|m| m.labeled).sum();
            prop_assert_eq!(labeled, r.total);
            prop_assert_eq!(r.total, confusion.total());
            let correct: usize = r.per_language.iter().map(|m| m.correct).sum();
            prop_assert_eq!(correct as f64 / r.total as f64, r.accuracy);
            for (j, m) in r.per_language.iter().enumerate() {
                prop_assert_eq!(m.labeled, confusion.row_sum(j));
                prop_assert!((0.0..=1.0).contains(&m.precision));
                prop_assert!((0.0..=1.0).contains(&m.recall));
                prop_assert!((0.0..=1.0).contains(&m.f));
                // swapping the two ratio definitions leaves F unchanged
                prop_assert_eq!(f_measure(m.recall, m.precision), m.f);
            }
        }

        #[test]
        fn json_round_trip(confusion in arb_confusion()) {
            let r = EvalReport::from_confusion(confusion).unwrap();
            let parsed = parse_report_json(&render_report(&r, ReportFormat::Json)).unwrap();
            prop_assert_eq!(parsed, r);
        }
    }
}
