use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Progeny values assume each region is inherited whole from one parent,
/// independently and with equal chance. Linked regions on one chromosome
/// break that assumption.
pub const ASSORTMENT_NOTE: &str =
    "regions assort independently with equal chance; regions on one chromosome are linked in reality";

const EXHAUSTIVE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossMode {
    /// Exhaustive when `2^k <= 10^6`, Monte Carlo otherwise.
    #[default]
    Auto,
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSummary {
    pub mean: f64,
    pub variance: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossDistribution {
    /// Progeny values. When `exact`, every one of the `2^k` inheritance
    /// patterns appears once and all are equally likely.
    pub samples: Vec<f64>,
    pub parent_ids: (String, String),
    pub summary: CrossSummary,
    pub exact: bool,
}

impl CrossDistribution {
    pub fn with_parents(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.parent_ids = (a.into(), b.into());
        self
    }
}

fn summarize(samples: &[f64], exact: bool) -> CrossSummary {
    let n = samples.len() as f64;
    let rough = samples.iter().sum::<f64>() / n;
    let mean = rough + samples.iter().map(|v| v - rough).sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
    let variance = if exact || samples.len() < 2 { ss / n } else { ss / (n - 1.0) };
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    CrossSummary {
        mean,
        variance,
        q05: quantile_sorted(&sorted, 0.05),
        q50: quantile_sorted(&sorted, 0.5),
        q95: quantile_sorted(&sorted, 0.95),
    }
}

fn value(g1: &[f64], g2: &[f64], bits: u64) -> f64 {
    g1.iter()
        .zip(g2)
        .enumerate()
        .map(|(j, (a, b))| if bits >> j & 1 == 1 { *a } else { *b })
        .sum()
}

fn monte_carlo(g1: &[f64], g2: &[f64], n_samples: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = g1.len();
    (0..n_samples)
        .map(|_| {
            let mut total = 0.0;
            let mut j = 0;
            while j < k {
                let word: u64 = rng.random();
                let take = (k - j).min(64);
                for b in 0..take {
                    total += if word >> b & 1 == 1 { g1[j + b] } else { g2[j + b] };
                }
                j += take;
            }
            total
        })
        .collect()
}

/// Distribution of `sum_j b_j g1_j + (1 - b_j) g2_j` with independent fair
/// `b_j`.
pub fn cross_distribution(
    g1: &[f64],
    g2: &[f64],
    n_samples: usize,
    seed: u64,
    mode: CrossMode,
) -> Result<CrossDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cross_with(g1, g2, n_samples, &mut rng, mode)
}

fn cross_with(
    g1: &[f64],
    g2: &[f64],
    n_samples: usize,
    rng: &mut ChaCha8Rng,
    mode: CrossMode,
) -> Result<CrossDistribution> {
    if g1.len() != g2.len() {
        return Err(Error::Dimension(format!(
            "parents have {} and {} regions",
            g1.len(),
            g2.len()
        )));
    }
    let k = g1.len();
    let fits = k <= 20 && (1usize << k) <= 1_000_000;
    let exact = match mode {
        CrossMode::Auto => fits,
        CrossMode::Exhaustive if k > 20 || (1usize << k) > EXHAUSTIVE_LIMIT => {
            return Err(Error::Invalid(format!("{k} regions are too many to enumerate")));
        }
        CrossMode::Exhaustive => true,
        CrossMode::MonteCarlo => false,
    };
    let samples = if exact {
        (0..1u64 << k).map(|bits| value(g1, g2, bits)).collect::<Vec<_>>()
    } else {
        if n_samples == 0 {
            return Err(Error::Invalid("at least one sample is needed".into()));
        }
        monte_carlo(g1, g2, n_samples, rng)
    };
    Ok(CrossDistribution {
        summary: summarize(&samples, exact),
        samples,
        parent_ids: (String::new(), String::new()),
        exact,
    })
}

/// Many crosses at once; cross `i` draws from stream `i` of the seed.
pub fn cross_many(
    parents: &[(&[f64], &[f64])],
    n_samples: usize,
    seed: u64,
    mode: CrossMode,
) -> Result<Vec<CrossDistribution>> {
    parents
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            cross_with(a, b, n_samples, &mut rng, mode)
        })
        .collect()
}
