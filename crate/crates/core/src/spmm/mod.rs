//! Semi-parametric mixed models `y = X beta + sum_j Z g_j + e` with
//! `g_j ~ N(0, sigma_gj^2 K_j)`, fitted by ML or REML.
//!
//! Variance components are parameterized by ratios `lambda_j = sigma_gj^2 /
//! sigma_e^2`, so that `Var(y) = sigma_e^2 V` with `V = I + sum_j lambda_j Z K_j
//! Z'`. Likelihood values are reported on the "twice log-likelihood, constants
//! dropped" scale, which makes an LRT statistic a plain difference.

mod fit;
mod optimize;
mod report;
mod spectral;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::Phenotype;
use crate::kernel::KernelMatrix;

pub use fit::{
    fit_fixed, fit_joint, fit_joint_from, fit_marginal, fit_per_kernel, fit_single, heritability_weights,
    loglik, objective_at, optimality_gap, predict, reml_loglik,
};
pub use report::{write_eblups, write_fit_report};
pub use spectral::{Profile, SpectralModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ml,
    #[default]
    Reml,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ml => "ML",
            Method::Reml => "REML",
        })
    }
}

/// How several kernels enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// All kernels in one model.
    Joint,
    /// A target kernel plus a background kernel from the remaining markers.
    #[default]
    Marginal,
    /// One single-kernel model per kernel.
    PerKernel,
}

/// Phenotype, kernels and fixed-effect design of one model.
#[derive(Debug, Clone)]
pub struct MixedModelSpec<'a> {
    phenotype: &'a Phenotype,
    kernels: Vec<&'a KernelMatrix>,
    design: DMatrix<f64>,
}

impl<'a> MixedModelSpec<'a> {
    /// Uses the phenotype's intercept-plus-covariates design.
    pub fn new(phenotype: &'a Phenotype, kernels: Vec<&'a KernelMatrix>) -> Result<Self> {
        Self::with_design(phenotype, kernels, phenotype.design())
    }

    pub fn with_design(
        phenotype: &'a Phenotype,
        kernels: Vec<&'a KernelMatrix>,
        design: DMatrix<f64>,
    ) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::Invalid("a mixed model needs at least one kernel".into()));
        }
        for k in &kernels {
            if k.dim() != phenotype.n_lines() {
                return Err(Error::Dimension(format!(
                    "kernel {} is {}x{} but the phenotype has {} lines",
                    k.source(),
                    k.dim(),
                    k.dim(),
                    phenotype.n_lines()
                )));
            }
        }
        if design.nrows() != phenotype.n_obs() {
            return Err(Error::Dimension(format!(
                "design has {} rows for {} observations",
                design.nrows(),
                phenotype.n_obs()
            )));
        }
        Ok(MixedModelSpec {
            phenotype,
            kernels,
            design,
        })
    }

    /// Appends per-line columns (for example principal components) to the
    /// design.
    pub fn with_extra_fixed(mut self, per_line: &DMatrix<f64>) -> Result<Self> {
        if per_line.nrows() != self.phenotype.n_lines() {
            return Err(Error::Dimension(format!(
                "extra fixed effects have {} rows for {} lines",
                per_line.nrows(),
                self.phenotype.n_lines()
            )));
        }
        let extra = self.phenotype.expand_lines(per_line);
        let p = self.design.ncols();
        let mut d = self.design.clone().resize_horizontally(p + extra.ncols(), 0.0);
        d.columns_mut(p, extra.ncols()).copy_from(&extra);
        self.design = d;
        Ok(self)
    }

    pub fn phenotype(&self) -> &'a Phenotype {
        self.phenotype
    }

    pub fn kernels(&self) -> &[&'a KernelMatrix] {
        &self.kernels
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn y(&self) -> &DVector<f64> {
        self.phenotype.values()
    }

    pub fn n_obs(&self) -> usize {
        self.phenotype.n_obs()
    }

    /// A spec with the same phenotype and design but other kernels.
    pub fn with_kernels<'b>(&self, kernels: Vec<&'b KernelMatrix>) -> Result<MixedModelSpec<'b>>
    where
        'a: 'b,
    {
        MixedModelSpec::with_design(self.phenotype, kernels, self.design.clone())
    }

    /// `Z K_j Z'` on the observation scale.
    pub(crate) fn expanded(&self, j: usize) -> DMatrix<f64> {
        let k = self.kernels[j].values();
        if self.phenotype.is_identity_incidence() {
            return k.clone();
        }
        let idx = self.phenotype.line_index();
        let n = idx.len();
        DMatrix::from_fn(n, n, |a, b| k[(idx[a], idx[b])])
    }

    /// `Z' v`: sums observation values per line.
    pub(crate) fn to_lines(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.phenotype.n_lines());
        for (o, &l) in self.phenotype.line_index().iter().enumerate() {
            out[l] += v[o];
        }
        out
    }

    pub(crate) fn check_design(&self) -> Result<()> {
        let n = self.n_obs();
        let p = self.design.ncols();
        if n < p + 2 {
            return Err(Error::Invalid(format!(
                "{n} observations are too few for {p} fixed effects"
            )));
        }
        let bad = crate::linalg::collinear_columns(&self.design);
        if !bad.is_empty() {
            return Err(Error::RankDeficient { columns: bad });
        }
        Ok(())
    }
}

/// Estimates from one fitted model. Vectors indexed by kernel follow the
/// order of [`MixedModelSpec::kernels`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub method: Method,
    pub structure: Structure,
    pub sources: Vec<String>,
    pub sigma_g2: Vec<f64>,
    pub sigma_e2: f64,
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    /// Lines by kernels.
    pub eblups: DMatrix<f64>,
    /// `lambda_j Z' V^{-1} (y - X beta)` per kernel, so that `eblups = K_j *
    /// blup_weights`.
    pub blup_weights: DMatrix<f64>,
    pub loglik: f64,
    pub reml_loglik: f64,
    pub heritabilities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    /// The maximized criterion.
    pub fn objective(&self) -> f64 {
        match self.method {
            Method::Ml => self.loglik,
            Method::Reml => self.reml_loglik,
        }
    }

    /// Share of variance left to the residual, `1 - sum h^2`.
    pub fn residual_share(&self) -> f64 {
        1.0 / (1.0 + self.lambda.iter().sum::<f64>())
    }

    /// Total genetic value per line.
    pub fn total_eblup(&self) -> DVector<f64> {
        DVector::from_iterator(self.eblups.nrows(), self.eblups.row_iter().map(|r| r.sum()))
    }
}
