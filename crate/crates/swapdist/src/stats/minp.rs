//! Step-down minP multiple-testing adjustment for the per-family battery.
//!
//! The Monte Carlo null flips the sign of every language's delta
//! independently with probability 1/2 (valid under the symmetric null of the
//! signed-rank test) and recomputes every family's p-value per resample. The
//! step-down walk over families sorted by raw p compares each raw p against
//! the minimum resampled p over the families still "alive" at that rank,
//! estimated with the add-one rule (count + 1) / (n_resamples + 1) so no
//! adjusted value can reach exactly zero.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::rng::stream_rng;
use super::wilcoxon::{wilcoxon_one_tailed_less, TestResult, WilcoxonError};

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTest {
    /// One-tailed signed-rank p of the family's own deltas.
    pub raw_p: f64,
    /// Step-down minP adjusted p; never below `raw_p`, never zero.
    pub adjusted_p: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinPError {
    #[error("no testable families given")]
    NoFamilies,
    #[error("n_resamples must be at least 1, got 0")]
    NoResamples,
    #[error("family at index {family}: {source}")]
    Untestable {
        family: usize,
        source: WilcoxonError,
    },
}

/// Adjusts the per-family Wilcoxon p-values for multiplicity. `families`
/// holds each family's language deltas; every family must have at least one
/// nonzero delta (filter untestable families out beforehand).
///
/// Resample b consumes one sign per (family, language), in input order, from
/// stream b of the seed; aggregation is order-independent, so fixed seeds
/// give bit-identical output on any thread count.
pub fn adjust_sd_minp(
    families: &[Vec<f64>],
    n_resamples: u64,
    seed: u64,
) -> Result<Vec<FamilyTest>, MinPError> {
    if families.is_empty() {
        return Err(MinPError::NoFamilies);
    }
    if n_resamples == 0 {
        return Err(MinPError::NoResamples);
    }
    let raw: Vec<f64> = families
        .iter()
        .enumerate()
        .map(|(i, f)| {
            wilcoxon_one_tailed_less(f)
                .map(|r: TestResult| r.p)
                .map_err(|source| MinPError::Untestable { family: i, source })
        })
        .collect::<Result<_, _>>()?;

    // Families sorted by raw p ascending (ties by index, for determinism).
    let mut order: Vec<usize> = (0..families.len()).collect();
    order.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).unwrap().then(a.cmp(&b)));

    // counts[j]: resamples where the minimum resampled p over ranks j.. is
    // at most the raw p at rank j.
    let counts: Vec<u64> = (0..n_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b);
            let mut flipped = Vec::with_capacity(families.iter().map(Vec::len).max().unwrap());
            let resampled: Vec<f64> = families
                .iter()
                .map(|f| {
                    flipped.clear();
                    flipped.extend(f.iter().map(|&d| if rng.random() { -d } else { d }));
                    wilcoxon_one_tailed_less(&flipped)
                        .expect("sign flips preserve nonzero deltas")
                        .p
                })
                .collect();
            let mut hits = vec![0u64; order.len()];
            let mut suffix_min = f64::INFINITY;
            for j in (0..order.len()).rev() {
                suffix_min = suffix_min.min(resampled[order[j]]);
                if suffix_min <= raw[order[j]] {
                    hits[j] = 1;
                }
            }
            hits
        })
        .reduce(
            || vec![0u64; order.len()],
            |mut acc, hits| {
                for (a, h) in acc.iter_mut().zip(&hits) {
                    *a += h;
                }
                acc
            },
        );

    let mut out = vec![
        FamilyTest {
            raw_p: 0.0,
            adjusted_p: 0.0,
        };
        families.len()
    ];
    let mut running_max = 0.0f64;
    for (j, &i) in order.iter().enumerate() {
        let estimate = (counts[j] + 1) as f64 / (n_resamples + 1) as f64;
        running_max = running_max.max(estimate);
        out[i] = FamilyTest {
            raw_p: raw[i],
            // The Monte Carlo estimate can drift below the raw p; the
            // adjustment must never report a value smaller than raw.
            adjusted_p: running_max.max(raw[i]).min(1.0),
        };
    }
    Ok(out)
}
