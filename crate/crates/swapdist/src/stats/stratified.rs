//! Stratified variety sampling: confidence intervals for the Wilcoxon p-value
//! that control for genealogical relatedness.
//!
//! Families act as strata. Each draw picks exactly one language per family,
//! uniformly at random within the family, and runs the one-tailed test on the
//! resulting cross-family sample. The confidence interval is the equal-tail
//! pair of empirical quantiles of the p-values over all draws.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::rng::stream_rng;
use super::wilcoxon::{wilcoxon_one_tailed_less, WilcoxonError};

#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedCI {
    pub n_samples: u64,
    pub confidence: f64,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
    /// Draws whose sample was degenerate (every delta zero); recorded as
    /// p = 1 and included in the quantiles.
    pub n_degenerate: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StratifiedError {
    #[error("stratified sampling needs at least 2 families, got {0}")]
    TooFewFamilies(usize),
    #[error("family at index {0} has no languages")]
    EmptyFamily(usize),
    #[error("n_samples must be at least 100, got {0}")]
    TooFewSamples(u64),
    #[error("confidence must lie strictly between 0 and 1, got {0}")]
    BadConfidence(f64),
    #[error("family at index {family} contains a non-finite delta")]
    NonFiniteDelta { family: usize },
}

/// Raw outcome of the stratified draws, before quantile summarisation.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedDraws {
    /// All per-draw p-values, sorted ascending. Degenerate draws contribute
    /// p = 1 and are included.
    pub p_values: Vec<f64>,
    pub n_degenerate: u64,
}

/// Runs `n_samples` stratified draws over per-family delta lists and returns
/// every per-draw p-value, sorted ascending.
///
/// Draw k consumes one uniform index per family, in family order, from
/// stream k of the seed, so results are bit-identical across thread counts.
pub fn stratified_p_values(
    families: &[Vec<f64>],
    n_samples: u64,
    seed: u64,
) -> Result<StratifiedDraws, StratifiedError> {
    if families.len() < 2 {
        return Err(StratifiedError::TooFewFamilies(families.len()));
    }
    for (i, f) in families.iter().enumerate() {
        if f.is_empty() {
            return Err(StratifiedError::EmptyFamily(i));
        }
        if f.iter().any(|d| !d.is_finite()) {
            return Err(StratifiedError::NonFiniteDelta { family: i });
        }
    }
    if n_samples < 100 {
        return Err(StratifiedError::TooFewSamples(n_samples));
    }

    let results: Vec<(f64, bool)> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let deltas: Vec<f64> = families
                .iter()
                .map(|f| f[rng.random_range(0..f.len())])
                .collect();
            match wilcoxon_one_tailed_less(&deltas) {
                Ok(r) => (r.p, false),
                Err(WilcoxonError::DegenerateSample) => (1.0, true),
                Err(e) => unreachable!("deltas validated finite: {e}"),
            }
        })
        .collect();

    let n_degenerate = results.iter().filter(|(_, d)| *d).count() as u64;
    let mut p_values: Vec<f64> = results.into_iter().map(|(p, _)| p).collect();
    p_values.sort_by(|a, b| a.partial_cmp(b).expect("p-values are finite"));
    Ok(StratifiedDraws {
        p_values,
        n_degenerate,
    })
}

/// Runs `n_samples` stratified draws over per-family delta lists and returns
/// the equal-tail empirical CI of the p-values at the given confidence.
pub fn stratified_ci(
    families: &[Vec<f64>],
    n_samples: u64,
    confidence: f64,
    seed: u64,
) -> Result<StratifiedCI, StratifiedError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StratifiedError::BadConfidence(confidence));
    }
    let draws = stratified_p_values(families, n_samples, seed)?;

    let tail = (1.0 - confidence) / 2.0;
    let lower = empirical_quantile(&draws.p_values, tail);
    let upper = empirical_quantile(&draws.p_values, 1.0 - tail);
    Ok(StratifiedCI {
        n_samples,
        confidence,
        lower,
        upper,
        seed,
        n_degenerate: draws.n_degenerate,
    })
}

/// Nearest-rank quantile of an ascending-sorted slice: the k-th smallest
/// value with k = ceil(q * n), clamped to the data range.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let k = (q * sorted.len() as f64).ceil() as usize;
    sorted[k.clamp(1, sorted.len()) - 1]
}
