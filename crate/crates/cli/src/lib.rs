//! Library side of the `ueq` command: loading grammar files, the
//! equivalence report, and the identity demo. `main.rs` only parses
//! arguments and maps results to exit codes.

pub mod demo;
pub mod report;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;
use ueq_core::cnf::AlphabetError;
use ueq_core::comm::{emit_smt_sentence, CommError};
use ueq_core::grammar::Severity;
use ueq_core::{parse_grammar, to_cnf_or_empty, validate, CnfGrammar, Grammar, ParseError};

pub use report::{check, CheckOptions, EquivalenceReport, Overall};

/// Exit status for each outcome.
pub const EXIT_EQUAL: i32 = 0;
pub const EXIT_DIFFERENT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_PROMISE_VIOLATED: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Comm(#[from] CommError),
    #[error("{0}")]
    Usage(String),
}

/// A grammar file as read from disk.
#[derive(Debug, Clone)]
pub struct LoadedGrammar {
    pub path: PathBuf,
    pub sha256: String,
    pub grammar: Grammar,
    pub cnf: CnfGrammar,
    /// Validation findings, one line each.
    pub diagnostics: Vec<String>,
}

pub fn load_grammar(path: &Path) -> Result<LoadedGrammar, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let grammar = parse_grammar(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let diagnostics = validate(&grammar)
        .iter()
        .map(|d| {
            let level = match d.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            format!(
                "{}: {level}: {} ({})",
                path.display(),
                d.message,
                d.location
            )
        })
        .collect();
    Ok(LoadedGrammar {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        cnf: to_cnf_or_empty(&grammar),
        grammar,
        diagnostics,
    })
}

/// The CNF rendering followed by a size comment, so the output parses back.
pub fn normalize(loaded: &LoadedGrammar) -> String {
    let mut out = loaded.cnf.render();
    let _ = writeln!(out, "# size: {}", loaded.cnf.size());
    if loaded.cnf.generates_empty_word() {
        out.push_str("# generates the empty word\n");
    }
    out
}

pub fn smt_sentence(g1: &LoadedGrammar, g2: &LoadedGrammar) -> Result<String, CliError> {
    Ok(emit_smt_sentence(&g1.cnf, &g2.cnf)?)
}
