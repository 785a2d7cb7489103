//! CoNLL-U ingestion and S/O/V triplet counting.

pub mod conllu;
pub mod counts;
pub mod extract;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::bufread::MultiGzDecoder;
use thiserror::Error;

pub use conllu::{ConlluError, ConlluReader, Sentence, Token};
pub use counts::{read_counts_tsv, write_counts_tsv, CountsError, TripletCounts};
pub use extract::{count_orders, extract_triplets, AnnotationStyle, DepPolicy, Triplet};

/// What to do with malformed sentences in a treebank file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Abort on the first malformed sentence.
    #[default]
    Strict,
    /// Skip malformed sentences, recording each skip.
    Lenient,
}

#[derive(Debug, Error)]
pub enum TreebankError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ConlluError,
    },
}

/// A sentence dropped in lenient mode, for the audit log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedSentence {
    pub path: PathBuf,
    pub line: u64,
    pub reason: String,
}

/// Opens a CoNLL-U file, transparently decompressing `.gz`.
pub fn open_conllu(path: &Path) -> std::io::Result<Box<dyn BufRead + Send>> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(
            BufReader::new(file),
        ))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Extracts and counts triplet orders from one treebank file. In lenient
/// mode malformed sentences are skipped and reported alongside the counts;
/// in strict mode the first one aborts. I/O failures abort either way.
pub fn count_conllu_file(
    path: &Path,
    style: AnnotationStyle,
    policy: DepPolicy,
    mode: ParseMode,
) -> Result<([u64; 6], Vec<SkippedSentence>), TreebankError> {
    let input = open_conllu(path).map_err(|source| TreebankError::Read {
        path: path.to_owned(),
        source,
    })?;
    let mut reader = ConlluReader::new(input);
    let mut counts = [0u64; 6];
    let mut skipped = Vec::new();
    loop {
        match reader.next_sentence() {
            Ok(Some(sentence)) => {
                for t in extract_triplets(&sentence, style, policy) {
                    counts[t.order().index()] += 1;
                }
            }
            Ok(None) => break,
            Err(e) if mode == ParseMode::Lenient && !e.is_io() => {
                skipped.push(SkippedSentence {
                    path: path.to_owned(),
                    line: e.line,
                    reason: e.kind.to_string(),
                });
            }
            Err(source) => {
                return Err(TreebankError::Parse {
                    path: path.to_owned(),
                    source,
                });
            }
        }
    }
    Ok((counts, skipped))
}
