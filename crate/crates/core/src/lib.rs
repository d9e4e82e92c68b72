//! Source-code programming language identification.
//!
//! The pipeline normalizes raw source into token streams, induces per-language
//! keyword tables, derives a single cross-language grammar of informative
//! token n-grams scored by mutual information, and trains a regularized
//! maximum-entropy classifier over the presence of those productions.
//!
//! ```
//! use langgram::preprocess::{preprocess_text, Token};
//!
//! let stream = preprocess_text(br#"FUNCTION("123")"#);
//! assert_eq!(
//!     stream.tokens(),
//!     &[
//!         Token::Bof,
//!         Token::Alpha("function".into()),
//!         Token::Punct("(\"".into()),
//!         Token::Number,
//!         Token::Punct("\")".into()),
//!         Token::Eof,
//!     ]
//! );
//! ```

pub mod comments;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod grammar;
pub mod language;
pub mod maxent;
pub mod model_file;
pub mod pipeline;
pub mod preprocess;
pub mod vocabulary;

pub use error::{Error, Result};
pub use language::Language;

/// Default keyword document-frequency threshold.
pub const DEFAULT_KEYWORD_THRESHOLD: f64 = 0.01;
/// Default mutual information threshold (nats) for grammar selection.
pub const DEFAULT_MI_THRESHOLD: f64 = 0.05;
/// Default Gaussian prior scale for the weights.
pub const DEFAULT_SIGMA: f64 = 10.0;
/// Longest n-gram considered as a production.
pub const MAX_NGRAM: usize = 3;
/// Files smaller than this are skipped at ingestion.
pub const DEFAULT_MIN_BYTES: u64 = 3;
/// Files bigger than this are skipped at ingestion.
pub const DEFAULT_MAX_BYTES: u64 = 240_000;
