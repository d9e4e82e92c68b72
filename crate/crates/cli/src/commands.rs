use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use langgram::comments::CommentSyntax;
use langgram::corpus::{ingest, split, CorpusSource, IngestOptions};
use langgram::eval::{evaluate_detailed, render_report, ReportFormat};
use langgram::maxent::TrainConfig;
use langgram::model_file::ModelFile;
use langgram::pipeline::{classify, load_records, train_from_corpus, ClassifyResult, SplitParams, TrainParams};
use langgram::preprocess::preprocess_text;
use langgram::vocabulary::lexicalize;
use langgram::{Language, DEFAULT_MAX_BYTES, DEFAULT_MIN_BYTES};
use serde::Serialize;

use crate::args::{ClassifyArgs, CorpusArgs, EvaluateArgs, Format, InspectArgs, PreprocessArgs, Table, TrainArgs};

/// Exit status when `evaluate --min-f` is not met.
pub const GATE_FAILED: u8 = 3;

fn sources(args: &CorpusArgs) -> Result<Vec<CorpusSource>> {
    let mut out: Vec<CorpusSource> = args.corpus.iter().cloned().map(CorpusSource::LanguageTree).collect();
    for spec in &args.lang_dir {
        let Some((lang, dir)) = spec.split_once('=') else {
            bail!("--lang-dir expects LANGUAGE=DIR, got `{spec}`");
        };
        out.push(CorpusSource::Dir {
            path: dir.into(),
            language: Language::from(lang),
        });
    }
    out.extend(args.manifest.iter().cloned().map(CorpusSource::Manifest));
    if out.is_empty() {
        bail!("no corpus given; use --corpus, --lang-dir or --manifest");
    }
    Ok(out)
}

fn load_model(path: &Path) -> Result<ModelFile> {
    ModelFile::load(path).with_context(|| format!("cannot load model {}", path.display()))
}

fn creation_time() -> Result<String> {
    if let Ok(epoch) = std::env::var("SOURCE_DATE_EPOCH") {
        let secs: u64 = epoch.trim().parse().context("SOURCE_DATE_EPOCH is not an integer")?;
        return Ok(secs.to_string());
    }
    Ok(SystemTime::now().duration_since(UNIX_EPOCH)?.as_secs().to_string())
}

pub fn train(args: &TrainArgs) -> Result<ExitCode> {
    if !(args.keyword_threshold > 0.0 && args.keyword_threshold <= 1.0) {
        bail!("--keyword-threshold {} is not a fraction in (0, 1]", args.keyword_threshold);
    }
    let mut syntax = CommentSyntax::builtin();
    if let Some(path) = &args.comment_syntax {
        syntax.extend(CommentSyntax::load(path)?);
    }
    let params = TrainParams {
        keyword_threshold: args.keyword_threshold,
        mi_threshold: args.mi_threshold,
        n_max: args.n_max,
        train: TrainConfig {
            sigma: args.sigma,
            tol: args.tol,
            max_iters: args.max_iters,
            ..TrainConfig::default()
        },
        comment_syntax: syntax,
    };
    let split_params = SplitParams {
        ingest: IngestOptions {
            min_bytes: args.sizes.min_bytes,
            max_bytes: args.sizes.max_bytes,
        },
        train_fraction: args.train_fraction,
        seed: args.seed,
    };
    let trace = args.trace;
    let mut result = train_from_corpus(&sources(&args.corpus)?, &split_params, &params, |entry| {
        if trace {
            eprintln!("{entry}");
        }
    })?;

    if args.timestamp {
        result.trained.model_file.metadata.created = Some(creation_time()?);
    }
    result.trained.model_file.save(&args.out)?;
    if let Some(path) = &args.test_manifest_out {
        result.split.test.write_manifest(path)?;
    }
    if let Some(path) = &args.train_manifest_out {
        result.split.train.write_manifest(path)?;
    }

    let meta = &result.trained.model_file.metadata;
    let mut out = io::stdout().lock();
    writeln!(out, "grammar: {}", result.trained.grammar_summary())?;
    writeln!(
        out,
        "split: {} train files, {} test files",
        result.split.train.len(),
        result.split.test.len()
    )?;
    for lang in &result.split.untestable {
        writeln!(out, "warning: `{lang}` has no test files")?;
    }
    writeln!(
        out,
        "optimizer: {} after {} iterations, gradient max-norm {:.3e}",
        if meta.converged { "converged" } else { "did not converge" },
        meta.iterations,
        meta.grad_max_norm
    )?;
    writeln!(out, "model written to {}", args.out.display())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PathResult<'a> {
    path: &'a str,
    #[serde(flatten)]
    result: &'a ClassifyResult,
}

fn read_input(path: Option<&Path>) -> Result<Vec<u8>> {
    match path {
        None => read_stdin(),
        Some(p) if p == Path::new("-") => read_stdin(),
        Some(p) => fs::read(p).with_context(|| format!("cannot read {}", p.display())),
    }
}

fn read_stdin() -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    io::stdin().lock().read_to_end(&mut buf).context("cannot read standard input")?;
    Ok(buf)
}

pub fn classify_cmd(args: &ClassifyArgs) -> Result<ExitCode> {
    let model_file = load_model(&args.model.model)?;
    let model = &model_file.model;
    let inputs: Vec<Option<&Path>> = if args.inputs.is_empty() {
        vec![None]
    } else {
        args.inputs.iter().map(|p| Some(p.as_path())).collect()
    };
    let many = inputs.len() > 1;
    let mut out = io::stdout().lock();
    for input in inputs {
        let raw = read_input(input)?;
        let mut result = classify(model, &raw)?;
        if let Some(top) = args.top {
            result.truncate(top);
        }
        let name = input.map_or("-".into(), |p| p.display().to_string());
        match (args.format, many) {
            (Format::Json, false) => writeln!(out, "{}", serde_json::to_string(&result)?)?,
            (Format::Json, true) => writeln!(
                out,
                "{}",
                serde_json::to_string(&PathResult { path: &name, result: &result })?
            )?,
            (Format::Text, false) => write!(out, "{}", result.render_text())?,
            (Format::Text, true) => write!(out, "==> {name} <==\n{}", result.render_text())?,
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<ExitCode> {
    let model_file = load_model(&args.model.model)?;
    let meta = &model_file.metadata;
    // models trained from in-memory samples record no size bounds
    let ingest_opts = if meta.max_bytes == 0 {
        IngestOptions {
            min_bytes: DEFAULT_MIN_BYTES,
            max_bytes: DEFAULT_MAX_BYTES,
        }
    } else {
        IngestOptions {
            min_bytes: meta.min_bytes,
            max_bytes: meta.max_bytes,
        }
    };
    let manifest = ingest(&sources(&args.corpus)?, &ingest_opts)?;
    let manifest = if args.test_side {
        let (Some(fraction), Some(seed)) = (meta.train_fraction, meta.seed) else {
            bail!("--test-side needs a model that records its split seed and fraction");
        };
        split(&manifest, fraction, seed)?.test
    } else {
        manifest
    };
    let samples = load_records(&manifest)?;
    let (report, predictions) = evaluate_detailed(&model_file.model, &samples)?;

    let format = match args.format {
        Format::Text => ReportFormat::Text,
        Format::Json => ReportFormat::Json,
    };
    print!("{}", render_report(&report, format));

    if let Some(path) = &args.misclassified {
        let mut text = String::new();
        for (record, p) in manifest.records.iter().zip(&predictions) {
            let predicted = &model_file.model.languages()[p.best];
            if predicted != &record.language {
                let _ = writeln!(text, "{}\t{}\t{}", record.path.display(), record.language, predicted);
            }
        }
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }

    if let Some(min_f) = args.min_f {
        if min_f.is_nan() || report.macro_f() < min_f {
            eprintln!("macro-F {:.3} is below the required {min_f}", report.macro_f());
            return Ok(ExitCode::from(GATE_FAILED));
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn inspect(args: &InspectArgs) -> Result<ExitCode> {
    let model_file = load_model(&args.model.model)?;
    let text = match args.what {
        Table::Keywords => model_file.dump_keywords(),
        Table::Grammar => model_file.model.grammar().dump(),
        Table::Weights => model_file.model.dump_weights(),
    };
    io::stdout().lock().write_all(text.as_bytes())?;
    Ok(ExitCode::SUCCESS)
}

pub fn preprocess(args: &PreprocessArgs) -> Result<ExitCode> {
    let raw = read_input(args.input.as_deref())?;
    let stream = preprocess_text(&raw);
    let line = match (&args.language, &args.model) {
        (Some(lang), Some(model)) => {
            let model_file = load_model(model)?;
            let Some(table) = model_file.keywords.get(lang.as_str()) else {
                bail!("model has no keyword table for `{lang}`");
            };
            lexicalize(&stream, table).display()
        }
        _ => stream.display(),
    };
    println!("{line}");
    Ok(ExitCode::SUCCESS)
}
