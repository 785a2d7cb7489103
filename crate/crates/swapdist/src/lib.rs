//! Swap-distance analysis of subject/object/verb order.
//!
//! The crate turns dependency treebanks into per-language S/O/V order
//! distributions and asks how far each language sits from the orders it
//! uses most, measured in constituent swaps on the permutohedron:
//!
//! - [`treebank`]: CoNLL-U parsing, triplet extraction under UD or SUD
//!   annotation rules, and the counts table format.
//! - [`permutohedron`]: the six orders, the swap-distance matrix, and the
//!   per-language metrics (mean swap distance, Simpson index, random
//!   baseline, dominant-order classification).
//! - [`taxonomy`]: Glottolog-style family and macroarea metadata, alias
//!   resolution, pseudofamily exclusion and per-language deduplication.
//! - [`stats`]: Wilcoxon signed-rank tests, step-down minP adjustment over
//!   families, and stratified resampling confidence intervals.
//! - [`pipeline`]: the end-to-end commands behind the CLI.

pub mod permutohedron;
pub mod pipeline;
pub mod stats;
pub mod taxonomy;
pub mod treebank;

pub use permutohedron::{DominantOrderClass, Order, OrderDistribution, SwapDistanceMatrix};
pub use treebank::counts::TripletCounts;
pub use treebank::extract::{AnnotationStyle, DepPolicy};
