//! Region-level model fitting shared by the command line and the examples:
//! one kernel per region, fitted alone, against the rest of the genome, or
//! all together, and the resulting per-region EBLUPs for training and new
//! lines.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::genome::{MarkerPanel, Phenotype, Region};
use crate::kernel::{complement_kernel, region_kernel, KernelFunction, KernelMatrix};
use crate::spmm::{fit_joint, fit_marginal, fit_single, FitResult, Method, MixedModelSpec, Structure};

/// A region with its kernel and fitted model.
#[derive(Debug, Clone)]
pub struct RegionFit {
    pub region: Region,
    pub kernel: KernelMatrix,
    pub fit: FitResult,
    /// Column of `fit` that belongs to this region.
    pub column: usize,
}

impl RegionFit {
    pub fn h2(&self) -> f64 {
        self.fit.heritabilities[self.column]
    }
}

/// Fit every region under `structure`.
///
/// `Marginal` pairs each region with a kernel on all other markers (a region
/// covering every marker is fitted alone); `PerKernel` fits regions alone,
/// with `pcs` appended to the fixed effects when given; `Joint` fits all
/// region kernels in one model.
pub fn fit_regions(
    panel: &MarkerPanel,
    phenotype: &Phenotype,
    regions: &[Region],
    function: KernelFunction,
    structure: Structure,
    method: Method,
    pcs: Option<&DMatrix<f64>>,
) -> Result<Vec<RegionFit>> {
    if regions.is_empty() {
        return Err(Error::Invalid("no regions to fit".into()));
    }
    let kernels: Vec<KernelMatrix> = regions
        .par_iter()
        .map(|r| region_kernel(panel, r, function))
        .collect::<Result<_>>()?;
    let design = {
        let base = MixedModelSpec::new(phenotype, vec![&kernels[0]])?;
        match pcs {
            Some(p) if p.ncols() > 0 => base.with_extra_fixed(p)?.design().clone(),
            _ => base.design().clone(),
        }
    };
    match structure {
        Structure::Joint => {
            let refs: Vec<&KernelMatrix> = kernels.iter().collect();
            let spec = MixedModelSpec::with_design(phenotype, refs, design)?;
            let fit = fit_joint(&spec, method)?;
            Ok(regions
                .iter()
                .zip(kernels)
                .enumerate()
                .map(|(j, (r, k))| RegionFit {
                    region: r.clone(),
                    kernel: k,
                    fit: fit.clone(),
                    column: j,
                })
                .collect())
        }
        Structure::PerKernel | Structure::Marginal => regions
            .par_iter()
            .zip(kernels.into_par_iter())
            .map(|(r, k)| {
                let fit = if structure == Structure::Marginal && r.len() < panel.n_markers() {
                    let bg = complement_kernel(panel, r, function)?;
                    let spec = MixedModelSpec::with_design(phenotype, vec![&k, &bg], design.clone())?;
                    fit_marginal(&spec, method)?
                } else {
                    let spec = MixedModelSpec::with_design(phenotype, vec![&k], design.clone())?;
                    fit_single(&spec, method)?
                };
                Ok(RegionFit {
                    region: r.clone(),
                    kernel: k,
                    fit,
                    column: 0,
                })
            })
            .collect(),
    }
}

/// Lines by regions matrix of fitted region EBLUPs.
pub fn eblup_matrix(fits: &[RegionFit]) -> DMatrix<f64> {
    let q = fits.first().map(|f| f.fit.eblups.nrows()).unwrap_or(0);
    let mut out = DMatrix::zeros(q, fits.len());
    for (j, f) in fits.iter().enumerate() {
        out.set_column(j, &f.fit.eblups.column(f.column));
    }
    out
}

/// Region EBLUPs for new lines from the cross-kernel between new and
/// training markers. Both matrices use the panel's full column set.
pub fn predict_eblups(
    fits: &[RegionFit],
    train_markers: &DMatrix<f64>,
    new_markers: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    if train_markers.ncols() != new_markers.ncols() {
        return Err(Error::Dimension(format!(
            "new lines have {} markers, training lines {}",
            new_markers.ncols(),
            train_markers.ncols()
        )));
    }
    let cols: Vec<_> = fits
        .par_iter()
        .map(|f| {
            let cross = f.kernel.recipe().cross(train_markers, new_markers)?;
            Ok(cross * f.fit.blup_weights.column(f.column))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = DMatrix::zeros(new_markers.nrows(), fits.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    Ok(out)
}
