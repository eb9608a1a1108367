//! Simulated breeding populations with known additive QTL, used as ground
//! truth for every estimation step.
//!
//! Two inbred founders (all-0 and all-1 haplotypes) are intermated at
//! constant population size. Each generation pairs individuals at random and
//! every pair leaves two doubled-haploid offspring, each built from one
//! recombinant gamete with a Poisson number of crossovers per chromosome
//! (no interference). Markers are coded -1/+1.

mod split;
mod write;

use nalgebra::{DMatrix, DVector};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{Coding, MarkerPanel, Phenotype};
use crate::stats::variance;

pub use split::{train_test_split, TrainTest};
pub use write::{write_simulation, write_truth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_chromosomes: u32,
    pub chrom_length_cm: f64,
    pub markers_per_chromosome: usize,
    pub n_qtl_per_chromosome: usize,
    pub n_generations: usize,
    pub n_individuals: usize,
    pub target_h2: f64,
    pub seed: u64,
    /// Drop QTL columns from the returned panel.
    pub hide_qtl: bool,
    /// Put QTL only on these chromosomes (`n_qtl_per_chromosome` each).
    pub qtl_chromosomes: Option<Vec<u32>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_chromosomes: 7,
            chrom_length_cm: 100.0,
            markers_per_chromosome: 100,
            n_qtl_per_chromosome: 20,
            n_generations: 20,
            n_individuals: 300,
            target_h2: 0.75,
            seed: 1,
            hide_qtl: false,
            qtl_chromosomes: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Invalid(m));
        if self.n_chromosomes == 0 || self.markers_per_chromosome == 0 || self.n_individuals < 2 {
            return fail("chromosome, marker and individual counts must be positive (at least 2 individuals)".into());
        }
        if !(self.chrom_length_cm > 0.0 && self.chrom_length_cm.is_finite()) {
            return fail(format!("chromosome length must be positive, got {}", self.chrom_length_cm));
        }
        if self.n_qtl_per_chromosome > self.markers_per_chromosome {
            return fail(format!(
                "{} QTL do not fit on {} markers per chromosome",
                self.n_qtl_per_chromosome, self.markers_per_chromosome
            ));
        }
        if self.hide_qtl && self.n_qtl_per_chromosome == self.markers_per_chromosome {
            return fail("hiding QTL would remove every marker".into());
        }
        if !(self.target_h2 > 0.0 && self.target_h2 < 1.0) {
            return fail(format!("target heritability must lie in (0, 1), got {}", self.target_h2));
        }
        if let Some(c) = &self.qtl_chromosomes {
            if c.iter().any(|&x| x == 0 || x > self.n_chromosomes) {
                return fail(format!("QTL chromosomes {c:?} outside 1..={}", self.n_chromosomes));
            }
        }
        Ok(())
    }

    fn qtl_chromosomes(&self) -> Vec<u32> {
        match &self.qtl_chromosomes {
            Some(c) => {
                let mut c = c.clone();
                c.sort_unstable();
                c.dedup();
                c
            }
            None => (1..=self.n_chromosomes).collect(),
        }
    }

    /// Position of marker `i` on its chromosome.
    pub fn marker_position(&self, i: usize) -> f64 {
        if self.markers_per_chromosome == 1 {
            0.0
        } else {
            i as f64 * self.chrom_length_cm / (self.markers_per_chromosome - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Qtl {
    pub chromosome: u32,
    pub position_cm: f64,
    pub marker_id: String,
    /// Column in the returned panel, `None` when hidden.
    pub column: Option<usize>,
    pub effect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub qtl: Vec<Qtl>,
    pub genetic_values: DVector<f64>,
    pub residual_variance: f64,
    pub realized_h2: f64,
}

impl SimTruth {
    pub fn qtl_effects(&self) -> Vec<f64> {
        self.qtl.iter().map(|q| q.effect).collect()
    }
}

fn marker_id(chromosome: u32, i: usize) -> String {
    format!("c{chromosome}m{i:03}")
}

/// Haplotypes after `n_generations` of random mating, as 0/1 alleles.
pub fn simulate_haplotypes(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<u8>>> {
    let n = config.n_individuals;
    let m = config.markers_per_chromosome;
    let total = config.n_chromosomes as usize * m;
    let mut pop: Vec<Vec<u8>> = (0..n).map(|i| vec![(i % 2) as u8; total]).collect();
    let positions: Vec<f64> = (0..m).map(|i| config.marker_position(i)).collect();
    let poisson = Poisson::new(config.chrom_length_cm / 100.0)
        .map_err(|e| Error::Invalid(format!("crossover rate: {e}")))?;
    for _ in 0..config.n_generations {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut next = Vec::with_capacity(n);
        let mut i = 0;
        while next.len() < n {
            let a = order[i % n];
            let b = if i + 1 < n { order[i + 1] } else { order[rng.random_range(0..n - 1)] };
            for _ in 0..2 {
                if next.len() < n {
                    next.push(gamete(&pop[a], &pop[b], config, &positions, &poisson, rng));
                }
            }
            i += 2;
        }
        pop = next;
    }
    Ok(pop)
}

fn gamete(
    a: &[u8],
    b: &[u8],
    config: &SimConfig,
    positions: &[f64],
    poisson: &Poisson<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<u8> {
    let m = positions.len();
    let mut out = Vec::with_capacity(a.len());
    for c in 0..config.n_chromosomes as usize {
        let count = poisson.sample(rng) as usize;
        let mut cuts: Vec<f64> = (0..count).map(|_| rng.random::<f64>() * config.chrom_length_cm).collect();
        cuts.sort_by(|x, y| x.total_cmp(y));
        let mut from_a = rng.random::<bool>();
        let mut next_cut = 0;
        for (i, &pos) in positions.iter().enumerate() {
            while next_cut < cuts.len() && cuts[next_cut] < pos {
                from_a = !from_a;
                next_cut += 1;
            }
            let idx = c * m + i;
            out.push(if from_a { a[idx] } else { b[idx] });
        }
    }
    out
}

/// Simulate markers, additive QTL effects and a phenotype with the target
/// heritability.
pub fn simulate_population(config: &SimConfig) -> Result<(MarkerPanel, Phenotype, SimTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let haps = simulate_haplotypes(config, &mut rng)?;
    let n = config.n_individuals;
    let m = config.markers_per_chromosome;
    let total = config.n_chromosomes as usize * m;
    let full = DMatrix::from_fn(n, total, |i, j| 2.0 * haps[i][j] as f64 - 1.0);

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut qtl_cols = Vec::new();
    let mut effects = Vec::new();
    for c in config.qtl_chromosomes() {
        let mut picks = index::sample(&mut rng, m, config.n_qtl_per_chromosome).into_vec();
        picks.sort_unstable();
        for i in picks {
            qtl_cols.push((c - 1) as usize * m + i);
            effects.push(normal.sample(&mut rng));
        }
    }
    let mut g = DVector::zeros(n);
    for (&col, &e) in qtl_cols.iter().zip(&effects) {
        g.axpy(e, &full.column(col), 1.0);
    }
    let vg = variance(g.as_slice());
    let ve = if vg > 0.0 {
        vg * (1.0 - config.target_h2) / config.target_h2
    } else {
        log::warn!("simulated genetic values do not vary; residual variance set to 1");
        1.0
    };
    let noise = Normal::new(0.0, ve.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
    let y = DVector::from_fn(n, |i, _| g[i] + noise.sample(&mut rng));
    let realized_h2 = if vg > 0.0 { vg / variance(y.as_slice()) } else { 0.0 };

    let hidden: Vec<usize> = if config.hide_qtl { qtl_cols.clone() } else { Vec::new() };
    let keep: Vec<usize> = (0..total).filter(|j| !hidden.contains(j)).collect();
    let ids_all: Vec<String> = (0..total)
        .map(|j| marker_id(j as u32 / m as u32 + 1, j % m))
        .collect();
    let map: Vec<(String, u32, f64)> = keep
        .iter()
        .map(|&j| (ids_all[j].clone(), (j / m) as u32 + 1, config.marker_position(j % m)))
        .collect();
    let width = n.to_string().len().max(4);
    let line_ids: Vec<String> = (1..=n).map(|i| format!("L{i:0width$}")).collect();
    let panel = MarkerPanel::new(
        line_ids,
        keep.iter().map(|&j| ids_all[j].clone()).collect(),
        full.select_columns(&keep),
        &map,
        Coding::MinusOneZeroOne,
    )?;
    let qtl = qtl_cols
        .iter()
        .zip(&effects)
        .map(|(&col, &effect)| Qtl {
            chromosome: (col / m) as u32 + 1,
            position_cm: config.marker_position(col % m),
            marker_id: ids_all[col].clone(),
            column: keep.iter().position(|&k| k == col),
            effect,
        })
        .collect();
    let truth = SimTruth {
        qtl,
        genetic_values: g,
        residual_variance: ve,
        realized_h2,
    };
    Ok((panel, Phenotype::from_line_values(y), truth))
}
