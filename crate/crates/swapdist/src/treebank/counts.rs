//! Per-language order counts and the TSV format that carries them between
//! pipeline stages (`language<TAB>order<TAB>count`).

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::permutohedron::{DistributionError, Order, OrderDistribution, ParseOrderError};

pub const COUNTS_HEADER: &str = "language\torder\tcount";

/// Token counts of the six orders for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletCounts {
    pub language: String,
    counts: [u64; 6],
}

impl TripletCounts {
    pub fn new(language: impl Into<String>) -> TripletCounts {
        TripletCounts {
            language: language.into(),
            counts: [0; 6],
        }
    }

    pub fn with_counts(language: impl Into<String>, counts: [u64; 6]) -> TripletCounts {
        TripletCounts {
            language: language.into(),
            counts,
        }
    }

    pub fn add(&mut self, order: Order) {
        self.counts[order.index()] += 1;
    }

    pub fn add_n(&mut self, order: Order, n: u64) {
        self.counts[order.index()] += n;
    }

    /// Adds another count vector in, e.g. when merging the treebanks of one
    /// language. Count merging is commutative and associative.
    pub fn merge(&mut self, counts: [u64; 6]) {
        for (a, b) in self.counts.iter_mut().zip(counts) {
            *a += b;
        }
    }

    pub fn get(&self, order: Order) -> u64 {
        self.counts[order.index()]
    }

    pub fn counts(&self) -> [u64; 6] {
        self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Relative-frequency distribution; fails when the language has no
    /// triplets at all (such languages are excluded downstream).
    pub fn distribution(&self) -> Result<OrderDistribution, DistributionError> {
        OrderDistribution::from_counts(self.counts)
    }
}

#[derive(Debug, Error)]
pub enum CountsError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("missing or malformed header (expected {COUNTS_HEADER:?})")]
    BadHeader,
    #[error("line {line}: expected 3 tab-separated fields, found {found}")]
    Columns { line: u64, found: usize },
    #[error("line {line}: {source}")]
    BadOrder {
        line: u64,
        source: ParseOrderError,
    },
    #[error("line {line}: invalid count {value:?}")]
    BadCount { line: u64, value: String },
    #[error("line {line}: duplicate row for {language} / {order}")]
    Duplicate {
        line: u64,
        language: String,
        order: Order,
    },
}

/// Reads a counts TSV. Languages come back in first-appearance order; orders
/// missing from the file stay at zero; a repeated (language, order) pair is
/// an error.
pub fn read_counts_tsv(input: impl BufRead) -> Result<Vec<TripletCounts>, CountsError> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.ok_or(CountsError::BadHeader)?;
    if header.trim_end_matches('\r') != COUNTS_HEADER {
        return Err(CountsError::BadHeader);
    }
    let mut order_of: Vec<TripletCounts> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashMap<(String, Order), u64> = HashMap::new();
    for (i, line) in lines.enumerate() {
        let line_no = i as u64 + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(CountsError::Columns {
                line: line_no,
                found: fields.len(),
            });
        }
        let order: Order = fields[1].parse().map_err(|source| CountsError::BadOrder {
            line: line_no,
            source,
        })?;
        let count: u64 = fields[2].parse().map_err(|_| CountsError::BadCount {
            line: line_no,
            value: fields[2].to_owned(),
        })?;
        let language = fields[0].to_owned();
        if seen.insert((language.clone(), order), line_no).is_some() {
            return Err(CountsError::Duplicate {
                line: line_no,
                language,
                order,
            });
        }
        let slot = *index.entry(language.clone()).or_insert_with(|| {
            order_of.push(TripletCounts::new(language));
            order_of.len() - 1
        });
        order_of[slot].add_n(order, count);
    }
    Ok(order_of)
}

/// Writes a counts TSV with all six orders per language, in slice order.
pub fn write_counts_tsv(mut out: impl Write, counts: &[TripletCounts]) -> io::Result<()> {
    writeln!(out, "{COUNTS_HEADER}")?;
    for c in counts {
        for order in Order::ALL {
            writeln!(out, "{}\t{order}\t{}", c.language, c.get(order))?;
        }
    }
    Ok(())
}
