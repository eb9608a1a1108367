use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats::variance;

/// Region EBLUPs and allele densities for `N` candidates over `k` regions.
#[derive(Debug, Clone)]
pub struct SelectionInput {
    pub eblups: DMatrix<f64>,
    pub densities: DMatrix<f64>,
    pub kernel_weights: Vec<f64>,
    pub h1: f64,
    pub h2: f64,
}

impl SelectionInput {
    pub fn new(
        eblups: DMatrix<f64>,
        densities: DMatrix<f64>,
        kernel_weights: Vec<f64>,
        h1: f64,
        h2: f64,
    ) -> Result<Self> {
        if eblups.shape() != densities.shape() {
            return Err(Error::Dimension(format!(
                "EBLUPs are {:?} but densities {:?}",
                eblups.shape(),
                densities.shape()
            )));
        }
        if kernel_weights.len() != eblups.ncols() {
            return Err(Error::Dimension(format!(
                "{} kernel weights for {} regions",
                kernel_weights.len(),
                eblups.ncols()
            )));
        }
        if densities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Invalid("densities must lie in [0, 1]".into()));
        }
        if !(h1 > 0.0 && h2 > 0.0) || !h1.is_finite() || !h2.is_finite() {
            return Err(Error::Invalid(format!("h1 and h2 must be positive, got {h1} and {h2}")));
        }
        Ok(SelectionInput {
            eblups,
            densities,
            kernel_weights,
            h1,
            h2,
        })
    }

    pub fn n_candidates(&self) -> usize {
        self.eblups.nrows()
    }

    pub fn n_regions(&self) -> usize {
        self.eblups.ncols()
    }
}

/// `c_i = sum_j g_ji / (1 + sqrt(p_ji))`: rare favourable alleles count more.
pub fn jannink_index(input: &SelectionInput) -> Vec<f64> {
    (0..input.n_candidates())
        .map(|i| {
            (0..input.n_regions())
                .map(|j| input.eblups[(i, j)] / (1.0 + input.densities[(i, j)].sqrt()))
                .sum()
        })
        .collect()
}

/// Bivariate Gaussian preference centred on the best EBLUP of each region
/// and on zero density, weighted by kernel weight.
///
/// Regions where the EBLUPs or densities do not vary are skipped.
pub fn preference_index(input: &SelectionInput) -> Result<Vec<f64>> {
    let n = input.n_candidates();
    let mut out = vec![0.0; n];
    let mut used = 0;
    for j in 0..input.n_regions() {
        let g: Vec<f64> = input.eblups.column(j).iter().copied().collect();
        let p: Vec<f64> = input.densities.column(j).iter().copied().collect();
        let vg = variance(&g);
        let vp = variance(&p);
        if !(vg > 0.0 && vp > 0.0) {
            log::warn!("region {j} skipped in the preference index: zero variance");
            continue;
        }
        used += 1;
        let top = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let h1 = input.h1;
        let h2 = input.h2;
        let c = input.kernel_weights[j] / (2.0 * PI * h1 * vg.sqrt() * h2 * vp.sqrt());
        for i in 0..n {
            let e = (g[i] - top).powi(2) / (h1 * h1 * vg) + p[i] * p[i] / (h2 * h2 * vp);
            out[i] += c * (-0.5 * e).exp();
        }
    }
    if used == 0 {
        return Err(Error::Invalid("every region has zero EBLUP or density variance".into()));
    }
    Ok(out)
}
