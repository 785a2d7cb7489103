//! The permutohedron of the three constituents S, O and V.
//!
//! With three constituents the permutohedron is a hexagon: each vertex is one
//! of the six possible orders and each edge swaps two adjacent constituents.
//! The swap distance between two orders is the minimum number of adjacent
//! transpositions turning one into the other, which for three elements equals
//! both the Kendall tau distance (number of discordant pairs) and the cycle
//! distance along the hexagon.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use itertools::Itertools;
use thiserror::Error;

/// One of the six linear arrangements of subject, object and verb.
///
/// The discriminants walk the hexagon, so two orders are adjacent on the
/// permutohedron exactly when their indices differ by 1 mod 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Order {
    SOV = 0,
    SVO = 1,
    VSO = 2,
    VOS = 3,
    OVS = 4,
    OSV = 5,
}

impl Order {
    pub const ALL: [Order; 6] = [
        Order::SOV,
        Order::SVO,
        Order::VSO,
        Order::VOS,
        Order::OVS,
        Order::OSV,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Order> {
        Order::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Order::SOV => "SOV",
            Order::SVO => "SVO",
            Order::VSO => "VSO",
            Order::VOS => "VOS",
            Order::OVS => "OVS",
            Order::OSV => "OSV",
        }
    }

    /// Constituent sequence as positions 0..3 of S, O and V respectively.
    /// `Order::SVO.ranks()` is `[0, 2, 1]`: S first, O last, V in between.
    fn ranks(self) -> [u8; 3] {
        match self {
            Order::SOV => [0, 1, 2],
            Order::SVO => [0, 2, 1],
            Order::VSO => [1, 2, 0],
            Order::VOS => [2, 1, 0],
            Order::OVS => [2, 0, 1],
            Order::OSV => [1, 0, 2],
        }
    }

    /// Reads the order off the linear positions of the three constituents.
    /// Positions must be pairwise distinct.
    pub fn from_positions(subject: usize, object: usize, verb: usize) -> Order {
        debug_assert!(subject != object && subject != verb && object != verb);
        let rank = |x: usize| (subject < x) as u8 + (object < x) as u8 + (verb < x) as u8;
        let ranks = [rank(subject), rank(object), rank(verb)];
        *Order::ALL
            .iter()
            .find(|o| o.ranks() == ranks)
            .expect("three distinct positions always rank to a permutation")
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unrecognized order label {0:?} (expected one of SOV, SVO, VSO, VOS, OVS, OSV)")]
pub struct ParseOrderError(pub String);

impl FromStr for Order {
    type Err = ParseOrderError;

    fn from_str(s: &str) -> Result<Order, ParseOrderError> {
        Order::ALL
            .iter()
            .find(|o| o.label().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| ParseOrderError(s.to_owned()))
    }
}

/// Number of discordant constituent pairs between two arrangements.
fn inversions(a: Order, b: Order) -> u32 {
    let (ra, rb) = (a.ranks(), b.ranks());
    let mut n = 0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            if (ra[i] < ra[j]) != (rb[i] < rb[j]) {
                n += 1;
            }
        }
    }
    n
}

/// Precomputed 6x6 table of swap distances between orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapDistanceMatrix {
    d: [[u32; 6]; 6],
}

impl SwapDistanceMatrix {
    pub fn new() -> SwapDistanceMatrix {
        let mut d = [[0u32; 6]; 6];
        for a in Order::ALL {
            for b in Order::ALL {
                d[a.index()][b.index()] = inversions(a, b);
            }
        }
        SwapDistanceMatrix { d }
    }

    pub fn distance(&self, a: Order, b: Order) -> u32 {
        self.d[a.index()][b.index()]
    }

    pub fn row(&self, a: Order) -> [u32; 6] {
        self.d[a.index()]
    }
}

impl Default for SwapDistanceMatrix {
    fn default() -> SwapDistanceMatrix {
        SwapDistanceMatrix::new()
    }
}

static MATRIX: LazyLock<SwapDistanceMatrix> = LazyLock::new(SwapDistanceMatrix::new);

/// Swap distance between two orders. Ranges over 0..=3.
pub fn swap_distance(a: Order, b: Order) -> u32 {
    MATRIX.distance(a, b)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("cannot build a distribution from all-zero counts")]
    EmptyCounts,
    #[error("invalid probability weight {0} (must be finite and non-negative)")]
    InvalidWeight(f64),
    #[error("probability weights sum to zero")]
    ZeroMass,
}

/// Probability distribution over the six orders for one language.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderDistribution {
    counts: Option<[u64; 6]>,
    probs: [f64; 6],
}

impl OrderDistribution {
    /// Builds a distribution from raw triplet counts (canonical order of
    /// [`Order::ALL`]). Fails if every count is zero.
    pub fn from_counts(counts: [u64; 6]) -> Result<OrderDistribution, DistributionError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(DistributionError::EmptyCounts);
        }
        let mut probs = [0.0; 6];
        for (p, &c) in probs.iter_mut().zip(&counts) {
            *p = c as f64 / total as f64;
        }
        Ok(OrderDistribution {
            counts: Some(counts),
            probs,
        })
    }

    /// Builds a distribution from non-negative weights, normalizing them to
    /// sum to 1.
    pub fn from_probs(weights: [f64; 6]) -> Result<OrderDistribution, DistributionError> {
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(DistributionError::InvalidWeight(w));
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(DistributionError::ZeroMass);
        }
        let mut probs = weights;
        for p in &mut probs {
            *p /= total;
        }
        Ok(OrderDistribution {
            counts: None,
            probs,
        })
    }

    pub fn counts(&self) -> Option<[u64; 6]> {
        self.counts
    }

    pub fn total_count(&self) -> Option<u64> {
        self.counts.map(|c| c.iter().sum())
    }

    pub fn prob(&self, order: Order) -> f64 {
        self.probs[order.index()]
    }

    pub fn probs(&self) -> [f64; 6] {
        self.probs
    }

    /// Mean swap distance between two orders drawn independently from the
    /// distribution: sum over pairs of d(i,j) p_i p_j. Ranges over [0, 3/2].
    pub fn mean_swap_distance(&self) -> f64 {
        let mut total = 0.0;
        for a in Order::ALL {
            if self.probs[a.index()] == 0.0 {
                continue;
            }
            for b in Order::ALL {
                total += swap_distance(a, b) as f64
                    * self.probs[a.index()]
                    * self.probs[b.index()];
            }
        }
        total
    }

    /// Simpson index: probability that two independent draws agree,
    /// sum of p_i^2. Ranges over [1/6, 1].
    pub fn simpson_index(&self) -> f64 {
        self.probs.iter().map(|p| p * p).sum()
    }

    /// Expected mean swap distance when the probability mass is reassigned to
    /// vertices uniformly at random: (9/5)(1 - S), the average of
    /// `mean_swap_distance` over all 720 relabelings.
    pub fn random_baseline(&self) -> f64 {
        1.8 * (1.0 - self.simpson_index())
    }

    /// All 720 reassignments of the probability mass to vertices (one per
    /// permutation of the six orders). Includes duplicates when weights tie.
    pub fn shuffles(&self) -> impl Iterator<Item = OrderDistribution> + '_ {
        (0..6).permutations(6).map(move |perm| {
            let mut probs = [0.0; 6];
            for (slot, &src) in probs.iter_mut().zip(&perm) {
                *slot = self.probs[src];
            }
            OrderDistribution {
                counts: None,
                probs,
            }
        })
    }

    /// Ratio of the second-largest to the largest probability. Ranges over
    /// [0, 1]; 1 means the top two orders are equally frequent.
    pub fn dominance_ratio(&self) -> f64 {
        let mut sorted = self.probs;
        sorted.sort_by(|a, b| b.partial_cmp(a).expect("probs are finite"));
        sorted[1] / sorted[0]
    }

    /// Classifies the language as having a dominant order or not. The
    /// language lacks a dominant order when the second most frequent order
    /// reaches at least `rho0` times the frequency of the most frequent one.
    pub fn classify(&self, rho0: f64) -> DominantOrderClass {
        if self.dominance_ratio() >= rho0 {
            return DominantOrderClass::NoDominantOrder;
        }
        let top = Order::ALL
            .into_iter()
            .max_by(|a, b| {
                self.prob(*a)
                    .partial_cmp(&self.prob(*b))
                    .expect("probs are finite")
            })
            .expect("six orders");
        DominantOrderClass::Dominant(top)
    }
}

/// Outcome of dominant-order classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DominantOrderClass {
    Dominant(Order),
    NoDominantOrder,
}

impl DominantOrderClass {
    pub fn is_ndo(self) -> bool {
        matches!(self, DominantOrderClass::NoDominantOrder)
    }

    pub fn dominant_order(self) -> Option<Order> {
        match self {
            DominantOrderClass::Dominant(o) => Some(o),
            DominantOrderClass::NoDominantOrder => None,
        }
    }
}

impl fmt::Display for DominantOrderClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DominantOrderClass::Dominant(o) => write!(f, "{o}"),
            DominantOrderClass::NoDominantOrder => f.write_str("NDO"),
        }
    }
}
