//! One-tailed Wilcoxon signed-rank test, alternative "less".
//!
//! The alternative hypothesis is that the paired deltas are stochastically
//! negative, so the p-value is P(W+ <= observed) under the symmetric null,
//! where W+ is the sum of the ranks of the positive deltas among the ranked
//! absolute values.
//!
//! Small samples are handled exactly by convolving the signed-rank null
//! distribution (a subset-sum count over the ranks, so p is a rational with
//! denominator 2^n). Ties get mid-ranks; working on doubled ranks keeps the
//! convolution integral. Large samples fall back to the normal approximation
//! with continuity correction, evaluated in log space so extreme tails
//! survive.

use thiserror::Error;

use super::normal::log_phi;

/// What to do with zero deltas before ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroPolicy {
    /// Discard zeros, rank only nonzero deltas (Conover's treatment).
    #[default]
    Drop,
    /// Rank zeros along with everything else, then discard their ranks
    /// (Pratt's treatment); zeros still widen the gap between the others.
    Pratt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Number of deltas actually ranked into the statistic (zeros excluded).
    pub n_used: usize,
    /// The signed-rank sum W+ (sum of ranks of positive deltas).
    pub statistic: f64,
    /// P(W+ <= observed). Underflows to 0.0 below ~1e-308; `log_p` is the
    /// authoritative value out there.
    pub p: f64,
    /// ln p, finite even for extreme tails.
    pub log_p: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WilcoxonError {
    #[error("degenerate sample: every delta is zero")]
    DegenerateSample,
    #[error("non-finite delta {0}")]
    NonFiniteDelta(f64),
}

/// Largest n for the exact path when ranks are the plain integers 1..n.
const EXACT_PLAIN_MAX: usize = 25;
/// Largest n for the exact convolution when ties (or Pratt gaps) give
/// non-trivial ranks; beyond this the normal approximation takes over.
const EXACT_TIED_MAX: usize = 60;

pub fn wilcoxon_one_tailed_less(deltas: &[f64]) -> Result<TestResult, WilcoxonError> {
    wilcoxon_one_tailed_less_with(deltas, ZeroPolicy::Drop)
}

pub fn wilcoxon_one_tailed_less_with(
    deltas: &[f64],
    zeros: ZeroPolicy,
) -> Result<TestResult, WilcoxonError> {
    for &d in deltas {
        if !d.is_finite() {
            return Err(WilcoxonError::NonFiniteDelta(d));
        }
    }
    // The set over which ranks are computed depends on the zero policy; the
    // statistic always uses only nonzero deltas.
    let ranked: Vec<f64> = match zeros {
        ZeroPolicy::Drop => deltas.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroPolicy::Pratt => deltas.to_vec(),
    };
    let doubled = doubled_midranks(&ranked);

    let mut used: Vec<u64> = Vec::new();
    let mut w2: u64 = 0;
    for (&d, &r2) in ranked.iter().zip(&doubled) {
        if d == 0.0 {
            continue;
        }
        used.push(r2);
        if d > 0.0 {
            w2 += r2;
        }
    }
    let n = used.len();
    if n == 0 {
        return Err(WilcoxonError::DegenerateSample);
    }

    let plain = {
        let mut sorted = used.clone();
        sorted.sort_unstable();
        sorted
            .iter()
            .enumerate()
            .all(|(i, &r2)| r2 == 2 * (i as u64 + 1))
    };
    let exact = if plain {
        n <= EXACT_PLAIN_MAX
    } else {
        n <= EXACT_TIED_MAX
    };

    if exact {
        let (p, log_p) = exact_tail(&used, w2);
        return Ok(TestResult {
            n_used: n,
            statistic: w2 as f64 / 2.0,
            p,
            log_p,
            method: Method::Exact,
        });
    }

    // Normal approximation. Under the sign-flip null W+ = sum r_i B_i with
    // B_i ~ Bernoulli(1/2), so mean = sum(r)/2 and var = sum(r^2)/4; with
    // mid-ranks this equals the textbook tie-corrected variance
    // n(n+1)(2n+1)/24 - sum(t^3 - t)/48.
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &r2 in &used {
        let r = r2 as f64 / 2.0;
        sum += r;
        sum_sq += r * r;
    }
    let mean = sum / 2.0;
    let sd = (sum_sq / 4.0).sqrt();
    let w = w2 as f64 / 2.0;
    let z = (w + 0.5 - mean) / sd;
    let log_p = log_phi(z).min(0.0);
    Ok(TestResult {
        n_used: n,
        statistic: w,
        p: log_p.exp(),
        log_p,
        method: Method::NormalApprox,
    })
}

/// Doubled mid-ranks (twice the 1-based rank) of |values|, so tied mid-ranks
/// at .5 stay integral. Ties are exact equality of absolute values.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[a]
            .abs()
            .partial_cmp(&values[b].abs())
            .expect("deltas are finite")
    });
    let mut out = vec![0u64; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]].abs() == values[idx[i]].abs() {
            j += 1;
        }
        // Positions i..=j hold 1-based ranks i+1..=j+1; twice their mean is
        // i + j + 2.
        let r2 = (i + j + 2) as u64;
        for &k in &idx[i..=j] {
            out[k] = r2;
        }
        i = j + 1;
    }
    out
}

/// Exact P(W+ <= w) for the sign-flip null over the given doubled ranks,
/// returned as (p, ln p). Counts qualifying sign assignments with a
/// subset-sum convolution; the count is exact in u128 for n <= 60.
pub(crate) fn exact_tail(doubled_ranks: &[u64], w2: u64) -> (f64, f64) {
    let n = doubled_ranks.len() as u32;
    debug_assert!(n <= 64, "subset count must fit the accumulator");
    let total: u64 = doubled_ranks.iter().sum();
    let cap = total.min(w2) as usize;
    let mut dist = vec![0u128; cap + 1];
    dist[0] = 1;
    for &r2 in doubled_ranks {
        let r = r2 as usize;
        if r > cap {
            // Any assignment giving this delta a positive sign overshoots
            // the cap, so only its negative branch contributes.
            continue;
        }
        for s in (r..=cap).rev() {
            dist[s] += dist[s - r];
        }
    }
    let count: u128 = dist.iter().sum();
    debug_assert!(count >= 1, "the all-negative assignment always qualifies");
    let log_p = (count as f64).ln() - n as f64 * std::f64::consts::LN_2;
    let p = count as f64 / (n as f64).exp2();
    (p.min(1.0), log_p.min(0.0))
}
