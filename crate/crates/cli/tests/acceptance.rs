//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p langgram-cli --test acceptance`.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use langgram::corpus::{ingest, CorpusSource, IngestOptions};
use langgram::eval::{evaluate, f_measure, render_report, ConfusionMatrix, EvalReport, ReportFormat};
use langgram::grammar::{
    extract_candidates, extract_features, mutual_information, FeatureSet, Grammar, Pattern, Production,
};
use langgram::maxent::{
    gradient, penalized_log_likelihood, predict, train, MaxentModel, Sample, TrainConfig, TrainingSet, Weights,
};
use langgram::model_file::{ModelFile, TrainingMetadata};
use langgram::pipeline::{classify, load_records, train_from_corpus, CorpusTraining, SplitParams, TrainParams};
use langgram::preprocess::{preprocess_text, Token, TokenStream};
use langgram::vocabulary::{lexicalize, KeywordTable, LexicalizedStream, Symbol, Word};
use langgram::Language;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus")
}

fn work_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn langs(n: usize) -> Vec<Language> {
    (0..n).map(|j| Language::new(format!("L{j}"))).collect()
}

fn dummy_grammar(size: usize) -> Grammar {
    Grammar::new(
        (0..size)
            .map(|i| Production {
                pattern: Pattern::new(vec![Symbol::Alpha(format!("p{}", "x".repeat(i)))]).unwrap(),
                mi_score: 0.1,
            })
            .collect(),
    )
    .unwrap()
}

// 1 ------------------------------------------------------------------------

fn worked_examples() -> Outcome {
    let s = preprocess_text(br#"FUNCTION("123")"#);
    let expected = [
        Token::Bof,
        Token::Alpha("function".into()),
        Token::Punct("(\"".into()),
        Token::Number,
        Token::Punct("\")".into()),
        Token::Eof,
    ];
    ensure(s.tokens() == expected, || format!("function call: {}", s.display()))?;

    let html = b"<ul class = \" democrats \">\n    <li> Clinton </li>\n</ul>\n";
    let keywords: BTreeMap<Word, usize> = ["ul", "class", "li"]
        .map(Word::alpha)
        .into_iter()
        .chain(["<", "=", "\"", "\">", ">", "</"].map(Word::punct))
        .map(|w| (w, 10))
        .collect();
    let table = KeywordTable {
        language: "HTML".into(),
        threshold: 0.01,
        total_files: 10,
        keywords,
    };
    let lex = lexicalize(&preprocess_text(html), &table);
    let body = LexicalizedStream::new(lex.symbols()[1..lex.len() - 1].to_vec());
    let want = "< ul class = \" __a__ \"> __NL__ < li > __a__ </ li > __NL__ </ ul > __NL__";
    ensure(body.display() == want, || format!("lexicalized: {}", body.display()))?;

    let all = extract_candidates(&body, 3);
    let set = |xs: &[&str]| xs.iter().map(|p| p.parse::<Pattern>().unwrap()).collect::<HashSet<_>>();
    let by_len = |n| all.iter().filter(|p| p.len() == n).cloned().collect::<HashSet<_>>();
    let uni = set(&["<", "ul", "class", "=", "\"", "__a__", "\">", ">", "__NL__", "li", "</"]);
    let bi = set(&[
        "< ul", "ul class", "class =", "= \"", "\" __a__", "__a__ \">", "\"> __NL__", "__NL__ <", "< li",
        "li >", "> __a__", "__a__ </", "</ li", "> __NL__", "__NL__ </", "</ ul", "ul >",
    ]);
    let tri = set(&[
        "< ul class", "ul class =", "class = \"", "= \" __a__", "\" __a__ \">", "__a__ \"> __NL__",
        "\"> __NL__ <", "__NL__ < li", "< li >", "li > __a__", "> __a__ </", "__a__ </ li", "</ li >",
        "li > __NL__", "> __NL__ </", "__NL__ </ ul", "</ ul >", "ul > __NL__",
    ]);
    ensure(by_len(1) == uni, || "unigram set differs".into())?;
    ensure(by_len(2) == bi, || "bigram set differs".into())?;
    ensure(by_len(3) == tri, || "trigram set differs".into())?;
    Ok(format!("{} unigrams, {} bigrams, {} trigrams", uni.len(), bi.len(), tri.len()))
}

// 2 ------------------------------------------------------------------------

/// Direct evaluation of the MI double sum over an explicit list of files.
fn brute_force_mi(present: &[usize], files: &[usize]) -> f64 {
    let mut samples = Vec::new();
    for (j, (&p, &n)) in present.iter().zip(files).enumerate() {
        for k in 0..n {
            samples.push((k < p, j));
        }
    }
    let total = samples.len() as f64;
    let m = files.len();
    let mut mi = 0.0;
    for f in [false, true] {
        let pf = samples.iter().filter(|s| s.0 == f).count() as f64 / total;
        for j in 0..m {
            let pl = samples.iter().filter(|s| s.1 == j).count() as f64 / total;
            let pfl = samples.iter().filter(|s| s.0 == f && s.1 == j).count() as f64 / total;
            if pfl > 0.0 {
                mi += pfl * (pfl / (pf * pl)).ln();
            }
        }
    }
    mi
}

fn mi_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.random_range(2..=8);
        let files: Vec<usize> = (0..m).map(|_| rng.random_range(0..=50)).collect();
        if files.iter().sum::<usize>() == 0 {
            continue;
        }
        let present: Vec<usize> = files.iter().map(|&n| rng.random_range(0..=n)).collect();
        let got = mutual_information(&present, &files).map_err(|e| e.to_string())?;
        let want = brute_force_mi(&present, &files);
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= 1e-12, || format!("{present:?}/{files:?}: {got} vs {want}"))?;
    }
    let ln2 = mutual_information(&[20, 0], &[20, 20]).map_err(|e| e.to_string())?;
    ensure((ln2 - std::f64::consts::LN_2).abs() <= 1e-12, || format!("all-of-A case: {ln2}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 tables, max |diff| {worst:.1e}, ln 2 case ok, {elapsed:.2?}"))
}

// 3 ------------------------------------------------------------------------

fn symbol_matches(symbol: &Symbol, token: &Token) -> bool {
    match (symbol, token) {
        (Symbol::Alpha(s), Token::Alpha(t)) | (Symbol::Punct(s), Token::Punct(t)) => s == t,
        (Symbol::AlphaIdent, Token::Alpha(_)) | (Symbol::PunctIdent, Token::Punct(_)) => true,
        (Symbol::Number, Token::Number)
        | (Symbol::Newline, Token::Newline)
        | (Symbol::Bof, Token::Bof)
        | (Symbol::Eof, Token::Eof) => true,
        _ => false,
    }
}

/// For every production, try every start position.
fn naive_checker(stream: &TokenStream, grammar: &Grammar) -> FeatureSet {
    let tokens = stream.tokens();
    let mut ids = Vec::new();
    for (id, production) in grammar.productions().iter().enumerate() {
        let symbols = production.pattern.symbols();
        for start in 0..tokens.len() {
            if start + symbols.len() <= tokens.len()
                && symbols.iter().zip(&tokens[start..]).all(|(s, t)| symbol_matches(s, t))
            {
                ids.push(id);
                break;
            }
        }
    }
    FeatureSet::from_ids(ids)
}

const PIECES: [&str; 14] = ["if", "x", "y", "for", "(", ")", "{", "}", ";", "=", "42", "\n", "<", "ul"];

fn random_symbol(rng: &mut ChaCha8Rng) -> Symbol {
    match rng.random_range(0..10) {
        0 => Symbol::AlphaIdent,
        1 => Symbol::PunctIdent,
        2 => Symbol::Number,
        3 => Symbol::Newline,
        4 => Symbol::Bof,
        5 => Symbol::Eof,
        _ => {
            let piece = *PIECES[..10].choose(rng).unwrap();
            if piece.chars().all(char::is_alphabetic) {
                Symbol::Alpha(piece.into())
            } else if piece.chars().all(|c| c.is_ascii_digit()) {
                Symbol::Number
            } else {
                Symbol::Punct(piece.into())
            }
        }
    }
}

fn checker_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut total_hits = 0;
    for case in 0..200 {
        let len = rng.random_range(0..=198);
        let text: Vec<&str> = (0..len).map(|_| *PIECES.choose(&mut rng).unwrap()).collect();
        let stream = preprocess_text(text.join(" ").as_bytes());
        ensure(stream.len() <= 200, || format!("stream too long: {}", stream.len()))?;
        let mut seen = HashSet::new();
        let productions: Vec<Production> = (0..rng.random_range(1..=50))
            .filter_map(|_| {
                let n = rng.random_range(1..=3);
                let p = Pattern::new((0..n).map(|_| random_symbol(&mut rng)).collect()).unwrap();
                seen.insert(p.clone()).then_some(Production { pattern: p, mi_score: 0.1 })
            })
            .collect();
        let grammar = Grammar::new(productions).map_err(|e| e.to_string())?;
        let fast = extract_features(&stream, &grammar);
        let slow = naive_checker(&stream, &grammar);
        total_hits += slow.len();
        ensure(fast == slow, || format!("case {case}: {:?} vs {:?}", fast.ids(), slow.ids()))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("200 pairs identical ({total_hits} matched productions), {elapsed:.2?}"))
}

// 4 ------------------------------------------------------------------------

struct Instance {
    data: TrainingSet,
    model: MaxentModel,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let m = rng.random_range(1..=4);
    let g = rng.random_range(1..=10);
    let n = rng.random_range(1..=12);
    let samples = (0..n)
        .map(|_| Sample {
            features: FeatureSet::from_ids((0..g).filter(|_| rng.random_bool(0.5))),
            label: rng.random_range(0..m),
        })
        .collect();
    let weights = (0..g * m).map(|_| rng.random_range(-2.0..2.0)).collect();
    Instance {
        data: TrainingSet::new(langs(m), samples).unwrap(),
        model: MaxentModel::new(langs(m), dummy_grammar(g), Weights::from_values(g, m, weights).unwrap(), 10.0)
            .unwrap(),
    }
}

fn with_values(model: &MaxentModel, values: Vec<f64>) -> MaxentModel {
    let w = model.weights();
    MaxentModel::new(
        model.languages().to_vec(),
        model.grammar().clone(),
        Weights::from_values(w.rows(), w.cols(), values).unwrap(),
        model.sigma(),
    )
    .unwrap()
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut entries = 0;
    for case in 0..20 {
        let inst = random_instance(&mut rng);
        let analytic = gradient(&inst.data, &inst.model).map_err(|e| e.to_string())?;
        let base = inst.model.weights().values().to_vec();
        for k in 0..base.len() {
            let mut plus = base.clone();
            plus[k] += h;
            let mut minus = base.clone();
            minus[k] -= h;
            let fp = penalized_log_likelihood(&inst.data, &with_values(&inst.model, plus)).unwrap();
            let fm = penalized_log_likelihood(&inst.data, &with_values(&inst.model, minus)).unwrap();
            let numeric = (fp - fm) / (2.0 * h);
            let a = analytic.values()[k];
            let scale = a.abs().max(numeric.abs());
            let rel = if scale == 0.0 { 0.0 } else { (a - numeric).abs() / scale };
            worst = worst.max(rel);
            entries += 1;
            ensure(rel < 1e-6, || format!("case {case} entry {k}: analytic {a} numeric {numeric} rel {rel:.2e}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("{entries} entries, max relative error {worst:.2e}, {elapsed:.2?}"))
}

// 5 ------------------------------------------------------------------------

fn training_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..20 {
        let inst = random_instance(&mut rng);
        let out = train(&inst.data, inst.model.grammar().clone(), &TrainConfig::default()).map_err(|e| e.to_string())?;
        ensure(out.trace.windows(2).all(|w| w[1].penalized_ll >= w[0].penalized_ll), || {
            format!("random case {case}: trace decreased")
        })?;
    }

    // three languages, each with a private production plus a shared one
    let g = 4;
    let samples: Vec<Sample> = (0..30)
        .map(|i| {
            let label = i % 3;
            let mut ids = vec![label];
            if i % 2 == 0 {
                ids.push(3);
            }
            Sample { features: FeatureSet::from_ids(ids), label }
        })
        .collect();
    let data = TrainingSet::new(langs(3), samples).unwrap();
    let out = train(&data, dummy_grammar(g), &TrainConfig::default()).map_err(|e| e.to_string())?;
    ensure(out.trace.windows(2).all(|w| w[1].penalized_ll >= w[0].penalized_ll), || "trace decreased".into())?;
    let correct = data
        .samples()
        .iter()
        .filter(|s| predict(&s.features, &out.model).unwrap().best == s.label)
        .count();
    ensure(correct == data.len(), || format!("training accuracy {correct}/{}", data.len()))?;
    ensure(out.grad_max_norm < 1e-4, || format!("final gradient max-norm {:.2e}", out.grad_max_norm))?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "traces monotone; separable set 100% after {} iterations, |grad| {:.1e}, {elapsed:.2?}",
        out.iterations, out.grad_max_norm
    ))
}

// 6 ------------------------------------------------------------------------

fn fixture_training() -> Result<CorpusTraining, String> {
    train_from_corpus(
        &[CorpusSource::LanguageTree(corpus_root())],
        &SplitParams { train_fraction: 0.7, seed: 0, ..Default::default() },
        &TrainParams::default(),
        |_| {},
    )
    .map_err(|e| e.to_string())
}

fn fixture_accuracy(t: &CorpusTraining) -> Result<(String, EvalReport), String> {
    let start = Instant::now();
    let languages = t.split.train.languages();
    ensure(languages.len() >= 6, || format!("only {} languages", languages.len()))?;
    let all = ingest(&[CorpusSource::LanguageTree(corpus_root())], &IngestOptions::default()).map_err(|e| e.to_string())?;
    for lang in &languages {
        let n = all.records_for(lang).count();
        ensure(n >= 40, || format!("{lang} has {n} files"))?;
    }
    ensure(t.split.untestable.is_empty(), || "a language has no test files".into())?;
    let samples = load_records(&t.split.test).map_err(|e| e.to_string())?;
    let report = evaluate(t.trained.model(), &samples).map_err(|e| e.to_string())?;
    let text = render_report(&report, ReportFormat::Text);
    let header: Vec<&str> = text.lines().next().unwrap_or("").split_whitespace().collect();
    ensure(header == ["Language", "Precision", "Recall", "F"], || "report header differs".into())?;
    ensure(text.lines().nth(languages.len() + 1).is_some_and(|l| l.starts_with("Average")), || {
        "Average row missing".into()
    })?;
    println!("{}", text.lines().take(languages.len() + 2).map(|l| format!("    {l}")).collect::<Vec<_>>().join("\n"));
    ensure(report.macro_f() >= 0.90, || format!("macro-F {:.3}", report.macro_f()))?;
    Ok((
        format!(
            "{} languages, {} test files, macro-F {:.3} ({}), {:.2?}",
            languages.len(),
            report.total,
            report.macro_f(),
            t.trained.grammar_summary(),
            start.elapsed()
        ),
        report,
    ))
}

// 7 ------------------------------------------------------------------------

fn cli() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_langgram"));
    c.env_remove("LANGGRAM_MODEL");
    c
}

fn run_cli(cmd: &mut Command) -> Result<Vec<u8>, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("{cmd:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(out.stdout)
}

/// A file of `bytes` bytes drawn from a code-like vocabulary.
fn large_source(bytes: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let words = ["if", "else", "return", "x", "count", "(", ")", "{", "}", ";", "=", "==", "+", "42", "\n", "for", "in"];
    let mut out = Vec::with_capacity(bytes + 16);
    while out.len() < bytes {
        out.extend_from_slice(words.choose(rng).unwrap().as_bytes());
        out.push(b' ');
    }
    out.truncate(bytes);
    out
}

/// Random grammar of `size` distinct productions over a small vocabulary,
/// with random weights for 29 languages.
fn stress_model(size: usize, rng: &mut ChaCha8Rng) -> ModelFile {
    let mut vocab: Vec<Symbol> = ["if", "else", "return", "x", "count", "for", "in", "while", "def", "let"]
        .iter()
        .map(|w| Symbol::Alpha((*w).into()))
        .collect();
    vocab.extend(["(", ")", "{", "}", ";", "=", "==", "+"].iter().map(|p| Symbol::Punct((*p).into())));
    for i in 0..40 {
        vocab.push(Symbol::Alpha(format!("w{}", "q".repeat(i))));
    }
    vocab.extend([Symbol::AlphaIdent, Symbol::PunctIdent, Symbol::Number, Symbol::Newline]);
    let mut seen = HashSet::new();
    let mut productions = Vec::with_capacity(size);
    while productions.len() < size {
        let n = rng.random_range(1..=3);
        let p = Pattern::new((0..n).map(|_| vocab.choose(rng).unwrap().clone()).collect()).unwrap();
        if seen.insert(p.clone()) {
            productions.push(Production { pattern: p, mi_score: 0.1 });
        }
    }
    let m = 29;
    let languages = langs(m);
    let weights = (0..size * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let model = MaxentModel::new(
        languages,
        Grammar::new(productions).unwrap(),
        Weights::from_values(size, m, weights).unwrap(),
        10.0,
    )
    .unwrap();
    ModelFile {
        model,
        comment_syntax: Default::default(),
        keywords: BTreeMap::new(),
        metadata: TrainingMetadata {
            keyword_threshold: 0.01,
            mi_threshold: 0.05,
            sigma: 10.0,
            n_max: 3,
            min_bytes: 3,
            max_bytes: 240_000,
            train_fraction: None,
            seed: None,
            tol: 1e-4,
            max_iters: 500,
            corpus_digest: String::new(),
            train_files: 0,
            converged: true,
            iterations: 0,
            grad_max_norm: 0.0,
            final_penalized_ll: 0.0,
            created: None,
        },
    }
}

fn latency(t: &CorpusTraining) -> Outcome {
    let dir = work_dir();
    let model_path = dir.join("fixture-model.json");
    t.trained.model_file.save(&model_path).map_err(|e| e.to_string())?;
    let files: Vec<&Path> = t.split.test.records.iter().map(|r| r.path.as_path()).collect();

    // one CLI process per file, including model load
    let start = Instant::now();
    for f in &files {
        run_cli(cli().arg("classify").arg("-m").arg(&model_path).arg(f))?;
    }
    let per_file = start.elapsed() / files.len() as u32;
    ensure(per_file <= Duration::from_millis(100), || format!("fixture mean {per_file:?} per file"))?;

    // 50,000 productions, 29 languages, 100 KB input
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let stress = stress_model(50_000, &mut rng);
    let stress_path = dir.join("stress-model.json");
    stress.save(&stress_path).map_err(|e| e.to_string())?;
    let input = large_source(100_000, &mut rng);
    let input_path = dir.join("stress-input");
    std::fs::write(&input_path, &input).map_err(|e| e.to_string())?;

    let load_start = Instant::now();
    let loaded = ModelFile::load(&stress_path).map_err(|e| e.to_string())?;
    let load_time = load_start.elapsed();
    let runs = 10;
    let start = Instant::now();
    let mut matched = 0;
    for _ in 0..runs {
        matched = classify(&loaded.model, &input).map_err(|e| e.to_string())?.matched_productions;
    }
    let stress_per_file = start.elapsed() / runs;
    ensure(stress_per_file <= Duration::from_millis(100), || {
        format!("stress classification {stress_per_file:?} per file")
    })?;

    let cli_start = Instant::now();
    run_cli(cli().arg("classify").arg("-m").arg(&stress_path).arg(&input_path))?;
    let cli_stress = cli_start.elapsed();

    Ok(format!(
        "fixture CLI mean {per_file:.2?}/file over {} files; 50k-production grammar on 100 KB: {stress_per_file:.2?}/file \
         with model resident ({matched} matches; model load {load_time:.2?}, one-shot CLI {cli_stress:.2?})",
        files.len()
    ))
}

// 8 ------------------------------------------------------------------------

fn determinism(t: &CorpusTraining) -> Outcome {
    let dir = work_dir();
    let paths = [dir.join("det-a.json"), dir.join("det-b.json")];
    for p in &paths {
        run_cli(cli().arg("train").arg("--corpus").arg(corpus_root()).arg("--seed").arg("3").arg("--out").arg(p))?;
    }
    let a = std::fs::read(&paths[0]).map_err(|e| e.to_string())?;
    let b = std::fs::read(&paths[1]).map_err(|e| e.to_string())?;
    ensure(a == b, || "CLI model files differ".into())?;

    let again = fixture_training()?;
    ensure(
        again.trained.model_file.to_json().unwrap() == t.trained.model_file.to_json().unwrap(),
        || "in-process retraining differs".into(),
    )?;

    let path = dir.join("roundtrip.json");
    t.trained.model_file.save(&path).map_err(|e| e.to_string())?;
    let loaded = ModelFile::load(&path).map_err(|e| e.to_string())?;
    let all = ingest(&[CorpusSource::LanguageTree(corpus_root())], &IngestOptions::default()).map_err(|e| e.to_string())?;
    let samples = load_records(&all).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let picked: Vec<_> = samples.choose_multiple(&mut rng, 100).collect();
    for (_, raw) in &picked {
        let before = classify(t.trained.model(), raw).unwrap();
        let after = classify(&loaded.model, raw).unwrap();
        let bits = |r: &langgram::pipeline::ClassifyResult| {
            r.ranked.iter().map(|x| (x.language.clone(), x.probability.to_bits())).collect::<Vec<_>>()
        };
        ensure(bits(&before) == bits(&after), || "prediction changed after reload".into())?;
    }
    Ok(format!("two CLI runs byte-identical ({} bytes); {} reloaded predictions bit-identical", a.len(), picked.len()))
}

// 9 ------------------------------------------------------------------------

fn check_identities(report: &EvalReport, counts: &[usize]) -> Result<(), String> {
    for (j, m) in report.per_language.iter().enumerate() {
        ensure(report.confusion.row_sum(j) == counts[j], || format!("{}: row sum", m.language))?;
        ensure(f_measure(m.recall, m.precision) == m.f, || format!("{}: F not symmetric", m.language))?;
        let conventional_precision = if m.predicted == 0 { 0.0 } else { m.correct as f64 / m.predicted as f64 };
        let conventional_recall = if m.labeled == 0 { 0.0 } else { m.correct as f64 / m.labeled as f64 };
        ensure(f_measure(conventional_precision, conventional_recall) == m.f, || {
            format!("{}: F changes under conventional definitions", m.language)
        })?;
    }
    ensure(report.confusion.total() == counts.iter().sum::<usize>(), || "grand total".into())
}

fn metric_identities(t: &CorpusTraining, fixture_report: &EvalReport) -> Outcome {
    let samples = load_records(&t.split.test).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = t
        .trained
        .model()
        .languages()
        .iter()
        .map(|l| samples.iter().filter(|(s, _)| s == l).count())
        .collect();
    check_identities(fixture_report, &counts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..500 {
        let m = rng.random_range(1..=6);
        let mut confusion = ConfusionMatrix::new(langs(m));
        let mut counts = vec![0; m];
        for _ in 0..rng.random_range(1..80) {
            let a = rng.random_range(0..m);
            confusion.record(a, rng.random_range(0..m));
            counts[a] += 1;
        }
        check_identities(&EvalReport::from_confusion(confusion).map_err(|e| e.to_string())?, &counts)?;
    }
    Ok("fixture run and 500 random matrices: row sums match, F invariant under the swap".into())
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("worked examples", worked_examples()),
        ("MI oracle equivalence", mi_oracle()),
        ("checker equivalence", checker_equivalence()),
        ("gradient correctness", gradient_check()),
        ("training soundness", training_soundness()),
    ];
    match fixture_training() {
        Ok(t) => {
            let (accuracy, report) = match fixture_accuracy(&t) {
                Ok((msg, report)) => (Ok(msg), Some(report)),
                Err(e) => (Err(e), None),
            };
            results.push(("fixture accuracy", accuracy));
            results.push(("latency", latency(&t)));
            results.push(("determinism and round trip", determinism(&t)));
            results.push((
                "metric identities",
                match report {
                    Some(r) => metric_identities(&t, &r),
                    None => Err("no fixture report".into()),
                },
            ));
        }
        Err(e) => {
            for name in ["fixture accuracy", "latency", "determinism and round trip", "metric identities"] {
                results.push((name, Err(format!("fixture training failed: {e}"))));
            }
        }
    }

    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
