//! Self-contained, versioned JSON model artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::comments::CommentSyntax;
use crate::grammar::Grammar;
use crate::maxent::{MaxentModel, Weights};
use crate::vocabulary::KeywordTable;
use crate::{Error, Language, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Describes the tokenizer behavior a model was trained with. Changing the
/// preprocessing rules must change this text.
const PREPROCESSING_RULES: &str = "lowercase; split alpha(alphabetic,_,non-ascii numerals)/digit(0-9)/punct; \
digit runs -> __d__; newline runs -> __NL__; wrap __BOF__ __EOF__; utf-8 lossy";

/// SHA-256 of the preprocessing rule description.
pub fn preprocessing_digest() -> String {
    hex::encode(Sha256::digest(PREPROCESSING_RULES.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub keyword_threshold: f64,
    pub mi_threshold: f64,
    pub sigma: f64,
    pub n_max: usize,
    pub min_bytes: u64,
    pub max_bytes: u64,
    pub train_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub tol: f64,
    pub max_iters: usize,
    /// Digest of the training records (language, repo, content hash).
    pub corpus_digest: String,
    pub train_files: usize,
    pub converged: bool,
    pub iterations: usize,
    pub grad_max_norm: f64,
    pub final_penalized_ll: f64,
    /// Only set when requested, so reruns stay byte-identical by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: MaxentModel,
    pub comment_syntax: CommentSyntax,
    pub keywords: BTreeMap<Language, KeywordTable>,
    pub metadata: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    format_version: u32,
    preprocessing_digest: String,
    languages: Vec<Language>,
    comment_syntax: CommentSyntax,
    keywords: Vec<KeywordTable>,
    grammar: Grammar,
    weights: Weights,
    metadata: TrainingMetadata,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        let repr = Repr {
            format_version: FORMAT_VERSION,
            preprocessing_digest: preprocessing_digest(),
            languages: self.model.languages().to_vec(),
            comment_syntax: self.comment_syntax.clone(),
            keywords: self.keywords.values().cloned().collect(),
            grammar: self.model.grammar().clone(),
            weights: self.model.weights().clone(),
            metadata: self.metadata.clone(),
        };
        let mut s = serde_json::to_string_pretty(&repr)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: VersionProbe = serde_json::from_str(text)?;
        if probe.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: probe.format_version,
                supported: FORMAT_VERSION,
            });
        }
        let repr: Repr = serde_json::from_str(text)?;
        if repr.preprocessing_digest != preprocessing_digest() {
            return Err(Error::CorruptModel(
                "model was trained with different preprocessing rules".into(),
            ));
        }
        let mut keywords = BTreeMap::new();
        for table in repr.keywords {
            if !repr.languages.contains(&table.language) {
                return Err(Error::CorruptModel(format!(
                    "keyword table for unknown language `{}`",
                    table.language
                )));
            }
            if keywords.insert(table.language.clone(), table).is_some() {
                return Err(Error::CorruptModel("duplicate keyword table".into()));
            }
        }
        let model = MaxentModel::new(repr.languages, repr.grammar, repr.weights, repr.metadata.sigma)
            .map_err(|e| Error::CorruptModel(e.to_string()))?;
        if model.weights().values().iter().any(|w| !w.is_finite()) {
            return Err(Error::CorruptModel("non-finite weight".into()));
        }
        Ok(ModelFile {
            model,
            comment_syntax: repr.comment_syntax,
            keywords,
            metadata: repr.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Keyword tables as `word TAB count TAB frequency` lines, one section
    /// per language.
    pub fn dump_keywords(&self) -> String {
        let mut out = String::new();
        for (lang, table) in &self.keywords {
            out.push_str(&format!("# {lang} ({} keywords, {} files)\n", table.len(), table.total_files));
            out.push_str(&table.dump());
        }
        out
    }
}
