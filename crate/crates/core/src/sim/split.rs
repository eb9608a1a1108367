use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::genome::{MarkerPanel, Phenotype};

#[derive(Debug, Clone)]
pub struct TrainTest {
    /// Sorted line indices into the original panel.
    pub train_lines: Vec<usize>,
    pub test_lines: Vec<usize>,
    pub train_panel: MarkerPanel,
    pub test_panel: MarkerPanel,
    pub train_phenotype: Phenotype,
    pub test_phenotype: Phenotype,
}

/// Random split by line; `round(fraction * n)` lines go to training.
pub fn train_test_split(
    panel: &MarkerPanel,
    phenotype: &Phenotype,
    train_fraction: f64,
    seed: u64,
) -> Result<TrainTest> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Invalid(format!("training fraction must lie in (0, 1), got {train_fraction}")));
    }
    if phenotype.n_lines() != panel.n_lines() {
        return Err(Error::Dimension(format!(
            "phenotype covers {} lines, panel {}",
            phenotype.n_lines(),
            panel.n_lines()
        )));
    }
    let n = panel.n_lines();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Invalid(format!(
            "fraction {train_fraction} of {n} lines leaves an empty set"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train_lines = order[..n_train].to_vec();
    let mut test_lines = order[n_train..].to_vec();
    train_lines.sort_unstable();
    test_lines.sort_unstable();
    Ok(TrainTest {
        train_panel: panel.subset_lines(&train_lines),
        test_panel: panel.subset_lines(&test_lines),
        train_phenotype: phenotype.subset_lines(&train_lines),
        test_phenotype: phenotype.subset_lines(&test_lines),
        train_lines,
        test_lines,
    })
}
