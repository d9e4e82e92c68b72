//! Labeled corpus ingestion and repository-level train/test splitting.
//!
//! Labels come from the directory layout or a manifest file, never from file
//! extensions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::{Error, Language, Result, DEFAULT_MAX_BYTES, DEFAULT_MIN_BYTES};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub path: PathBuf,
    pub language: Language,
    pub repo: String,
    /// Hex SHA-256 of the file content.
    pub hash: String,
    pub size: u64,
}

impl SampleRecord {
    pub fn read(&self) -> Result<Vec<u8>> {
        fs::read(&self.path).map_err(|e| Error::io(&self.path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Train,
    Test,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub records: Vec<SampleRecord>,
    /// Empty until the manifest has been split.
    pub assignment: BTreeMap<String, Side>,
}

impl CorpusManifest {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct labels in sorted order.
    pub fn languages(&self) -> Vec<Language> {
        let set: BTreeSet<&Language> = self.records.iter().map(|r| &r.language).collect();
        set.into_iter().cloned().collect()
    }

    pub fn records_for<'a>(&'a self, lang: &'a Language) -> impl Iterator<Item = &'a SampleRecord> + 'a {
        self.records.iter().filter(move |r| &r.language == lang)
    }

    /// Digest over (language, repo, hash) of every record, in order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.records {
            h.update(r.language.as_str().as_bytes());
            h.update([0]);
            h.update(r.repo.as_bytes());
            h.update([0]);
            h.update(r.hash.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Renders `repo TAB language TAB path` lines with absolute paths.
    pub fn to_manifest_text(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            let path = std::path::absolute(&r.path).map_err(|e| Error::io(&r.path, e))?;
            let path = path
                .to_str()
                .filter(|p| !p.contains(['\t', '\n', '\r']))
                .ok_or_else(|| Error::invalid("manifest path", path.display(), "UTF-8 without tabs or newlines"))?
                .to_owned();
            let _ = writeln!(out, "{}\t{}\t{}", r.repo, r.language, path);
        }
        Ok(out)
    }

    pub fn write_manifest(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_manifest_text()?).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusSource {
    /// Every file below `path` is labeled `language`.
    Dir { path: PathBuf, language: Language },
    /// Each immediate subdirectory of `path` is a language.
    LanguageTree(PathBuf),
    /// Lines of `repo TAB language TAB path`; relative paths resolve against
    /// the manifest's directory. Blank lines and `#` lines are ignored.
    Manifest(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Inclusive lower size bound in bytes.
    pub min_bytes: u64,
    /// Inclusive upper size bound in bytes.
    pub max_bytes: u64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            min_bytes: DEFAULT_MIN_BYTES,
            max_bytes: DEFAULT_MAX_BYTES,
        }
    }
}

struct Candidate {
    path: PathBuf,
    language: Language,
    repo: String,
}

fn walk_dir(root: &Path, language: &Language, out: &mut Vec<Candidate>) -> Result<()> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                warn!("skipping unreadable entry under {}: {e}", root.display());
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("walk stays under root");
        let first = rel.components().next().expect("file has a relative path");
        out.push(Candidate {
            path: entry.path().to_path_buf(),
            language: language.clone(),
            repo: format!("{language}/{}", first.as_os_str().to_string_lossy()),
        });
    }
    Ok(())
}

fn language_dirs(root: &Path) -> Result<Vec<(PathBuf, Language)>> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.file_type().map_err(|e| Error::io(entry.path(), e))?.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            dirs.push((entry.path(), Language::new(name)));
        }
    }
    dirs.sort();
    Ok(dirs)
}

fn read_manifest(path: &Path, out: &mut Vec<Candidate>, declared: &mut Vec<Language>) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| Error::Manifest {
            path: path.to_path_buf(),
            line: i + 1,
            reason: reason.to_owned(),
        };
        let mut fields = line.split('\t');
        let (Some(repo), Some(lang), Some(file), None) = (fields.next(), fields.next(), fields.next(), fields.next()) else {
            return Err(bad("expected three tab-separated fields"));
        };
        if repo.is_empty() || lang.is_empty() || file.is_empty() {
            return Err(bad("empty field"));
        }
        let language = Language::from(lang);
        if !declared.contains(&language) {
            declared.push(language.clone());
        }
        out.push(Candidate {
            path: base.join(file),
            language,
            repo: repo.to_owned(),
        });
    }
    Ok(())
}

fn load_candidate(c: Candidate, opts: &IngestOptions) -> Option<SampleRecord> {
    let size = match fs::metadata(&c.path) {
        Ok(m) => m.len(),
        Err(e) => {
            warn!("skipping {}: {e}", c.path.display());
            return None;
        }
    };
    if size < opts.min_bytes || size > opts.max_bytes {
        return None;
    }
    let bytes = match fs::read(&c.path) {
        Ok(b) => b,
        Err(e) => {
            warn!("skipping {}: {e}", c.path.display());
            return None;
        }
    };
    // the file may have changed since the metadata call
    let size = bytes.len() as u64;
    if size < opts.min_bytes || size > opts.max_bytes {
        return None;
    }
    Some(SampleRecord {
        hash: hex::encode(Sha256::digest(&bytes)),
        path: c.path,
        language: c.language,
        repo: c.repo,
        size,
    })
}

/// Walks the sources in order, filters by size and drops content duplicates.
/// The first occurrence in source order, then path order, wins.
pub fn ingest(sources: &[CorpusSource], opts: &IngestOptions) -> Result<CorpusManifest> {
    if opts.min_bytes > opts.max_bytes {
        return Err(Error::invalid("size bounds", format!("{}..={}", opts.min_bytes, opts.max_bytes), "min <= max"));
    }
    let mut candidates = Vec::new();
    let mut declared: Vec<Language> = Vec::new();
    for source in sources {
        match source {
            CorpusSource::Dir { path, language } => {
                declared.push(language.clone());
                walk_dir(path, language, &mut candidates)?;
            }
            CorpusSource::LanguageTree(root) => {
                for (dir, language) in language_dirs(root)? {
                    declared.push(language.clone());
                    walk_dir(&dir, &language, &mut candidates)?;
                }
            }
            CorpusSource::Manifest(path) => read_manifest(path, &mut candidates, &mut declared)?,
        }
    }

    let loaded: Vec<Option<SampleRecord>> = candidates.into_par_iter().map(|c| load_candidate(c, opts)).collect();
    let mut seen = HashSet::new();
    let records: Vec<SampleRecord> = loaded.into_iter().flatten().filter(|r| seen.insert(r.hash.clone())).collect();

    for lang in &declared {
        if !records.iter().any(|r| &r.language == lang) {
            return Err(Error::NoUsableFiles(lang.clone()));
        }
    }
    Ok(CorpusManifest {
        records,
        assignment: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: CorpusManifest,
    pub test: CorpusManifest,
    /// Languages left without any test file.
    pub untestable: Vec<Language>,
}

/// Assigns whole repositories to train or test.
///
/// Per language (in sorted order) the repositories are shuffled with a seeded
/// generator and sent to train until the train side holds at least
/// `train_fraction` of that language's files; the rest go to test.
pub fn split(manifest: &CorpusManifest, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train fraction", train_fraction, "a value in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: BTreeMap<String, Side> = BTreeMap::new();
    let mut untestable = Vec::new();

    for lang in manifest.languages() {
        let mut repo_sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for r in manifest.records_for(&lang) {
            *repo_sizes.entry(r.repo.as_str()).or_default() += 1;
        }
        let total: usize = repo_sizes.values().sum();
        let mut repos: Vec<(&str, usize)> = repo_sizes.into_iter().collect();
        repos.shuffle(&mut rng);

        let mut train = 0usize;
        let mut test = 0usize;
        for (repo, files) in repos {
            let side = match assignment.get(repo) {
                // a repo shared with an earlier language keeps its side
                Some(&side) => side,
                None => {
                    let side = if (train as f64) < train_fraction * total as f64 {
                        Side::Train
                    } else {
                        Side::Test
                    };
                    assignment.insert(repo.to_owned(), side);
                    side
                }
            };
            match side {
                Side::Train => train += files,
                Side::Test => test += files,
            }
        }
        if test == 0 {
            warn!("language `{lang}` has no test files after the split");
            untestable.push(lang);
        }
    }

    let side_of = |side: Side| CorpusManifest {
        records: manifest
            .records
            .iter()
            .filter(|r| assignment[&r.repo] == side)
            .cloned()
            .collect(),
        assignment: assignment
            .iter()
            .filter(|(_, &s)| s == side)
            .map(|(k, &s)| (k.clone(), s))
            .collect(),
    };
    Ok(Split {
        train: side_of(Side::Train),
        test: side_of(Side::Test),
        untestable,
    })
}
