//! Streaming CoNLL-U reader.
//!
//! Yields one [`Sentence`] per blank-line-terminated block. Only the columns
//! the extraction rules consume are kept (id, form, upos, head, deprel);
//! multiword range lines ("3-4") and empty nodes ("3.1") are dropped from the
//! token stream. After a malformed sentence the reader has already consumed
//! input through the terminating blank line, so callers that want to tolerate
//! bad sentences can simply keep iterating.

use std::io::BufRead;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Word index within the sentence, starting at 1.
    pub id: usize,
    pub form: String,
    pub upos: String,
    /// Id of the syntactic head; 0 means root.
    pub head: usize,
    /// Dependency relation, subtype suffixes preserved verbatim.
    pub deprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

#[derive(Debug, Error)]
#[error("line {line}: {kind}")]
pub struct ConlluError {
    pub line: u64,
    pub kind: ConlluErrorKind,
}

#[derive(Debug, Error)]
pub enum ConlluErrorKind {
    #[error("expected 10 tab-separated fields, found {0}")]
    ColumnCount(usize),
    #[error("unparsable token id {0:?}")]
    BadId(String),
    #[error("unparsable head {0:?}")]
    BadHead(String),
    #[error("token ids must run 1, 2, ... (saw {found} after {prev})")]
    NonContiguousIds { prev: usize, found: usize },
    #[error("token {0} heads itself")]
    SelfHead(usize),
    #[error("head {head} of token {id} is not in the sentence")]
    DanglingHead { id: usize, head: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ConlluError {
    /// True when the underlying problem is the byte stream itself, which no
    /// amount of resyncing can recover from.
    pub fn is_io(&self) -> bool {
        matches!(self.kind, ConlluErrorKind::Io(_))
    }
}

pub struct ConlluReader<R> {
    input: R,
    line: u64,
    buf: String,
}

impl<R: BufRead> ConlluReader<R> {
    pub fn new(input: R) -> ConlluReader<R> {
        ConlluReader {
            input,
            line: 0,
            buf: String::new(),
        }
    }

    /// Next sentence, or None at end of input. On a malformed sentence the
    /// error is returned only once the block has been drained to its blank
    /// line, so the reader stays aligned on sentence boundaries.
    pub fn next_sentence(&mut self) -> Result<Option<Sentence>, ConlluError> {
        let mut tokens: Vec<Token> = Vec::new();
        let mut pending: Option<ConlluError> = None;
        loop {
            self.buf.clear();
            let n = self.input.read_line(&mut self.buf).map_err(|e| ConlluError {
                line: self.line + 1,
                kind: e.into(),
            })?;
            if n == 0 {
                // EOF; the last sentence may lack a trailing blank line.
                if let Some(e) = pending {
                    return Err(e);
                }
                if tokens.is_empty() {
                    return Ok(None);
                }
                return self.finish(tokens).map(Some);
            }
            self.line += 1;
            let line = self.buf.trim_end_matches(['\n', '\r']);
            if line.is_empty() {
                if let Some(e) = pending {
                    return Err(e);
                }
                if tokens.is_empty() {
                    continue; // stray blank lines between sentences
                }
                return self.finish(tokens).map(Some);
            }
            if line.starts_with('#') || pending.is_some() {
                continue;
            }
            match parse_token_line(line) {
                Ok(Some(tok)) => {
                    let prev = tokens.last().map_or(0, |t: &Token| t.id);
                    if tok.id != prev + 1 {
                        pending = Some(ConlluError {
                            line: self.line,
                            kind: ConlluErrorKind::NonContiguousIds {
                                prev,
                                found: tok.id,
                            },
                        });
                        continue;
                    }
                    tokens.push(tok);
                }
                Ok(None) => {} // multiword range or empty node
                Err(kind) => {
                    pending = Some(ConlluError {
                        line: self.line,
                        kind,
                    });
                }
            }
        }
    }

    fn finish(&self, tokens: Vec<Token>) -> Result<Sentence, ConlluError> {
        for t in &tokens {
            if t.head > tokens.len() {
                return Err(ConlluError {
                    line: self.line,
                    kind: ConlluErrorKind::DanglingHead {
                        id: t.id,
                        head: t.head,
                    },
                });
            }
        }
        Ok(Sentence { tokens })
    }
}

impl<R: BufRead> Iterator for ConlluReader<R> {
    type Item = Result<Sentence, ConlluError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_sentence().transpose()
    }
}

/// Parses one non-comment, non-blank line. Ok(None) for multiword ranges and
/// empty nodes, which carry no syntactic structure of their own.
fn parse_token_line(line: &str) -> Result<Option<Token>, ConlluErrorKind> {
    let n = line.split('\t').count();
    if n != 10 {
        return Err(ConlluErrorKind::ColumnCount(n));
    }
    let mut fields = [""; 10];
    for (slot, f) in fields.iter_mut().zip(line.split('\t')) {
        *slot = f;
    }
    let id_field = fields[0];
    let id = match id_field.parse::<usize>() {
        Ok(0) | Err(_) => {
            if is_range(id_field) || is_empty_node(id_field) {
                return Ok(None);
            }
            return Err(ConlluErrorKind::BadId(id_field.to_owned()));
        }
        Ok(id) => id,
    };
    let head = fields[6]
        .parse::<usize>()
        .map_err(|_| ConlluErrorKind::BadHead(fields[6].to_owned()))?;
    if head == id {
        return Err(ConlluErrorKind::SelfHead(id));
    }
    Ok(Some(Token {
        id,
        form: fields[1].to_owned(),
        upos: fields[3].to_owned(),
        head,
        deprel: fields[7].to_owned(),
    }))
}

fn is_range(s: &str) -> bool {
    s.split_once('-')
        .is_some_and(|(a, b)| a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok())
}

fn is_empty_node(s: &str) -> bool {
    s.split_once('.')
        .is_some_and(|(a, b)| a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok())
}
