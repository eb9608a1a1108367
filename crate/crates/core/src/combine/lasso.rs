use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::{orthonormal_basis, residualize, residualize_vec, DesignBundle};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100_000;
const TOLERANCE: f64 = 1e-12;

/// Sparse linear predictor `b0 + X beta + G alpha` over region EBLUPs.
///
/// `alpha` is on the raw EBLUP scale and `alpha_std` on the standardized
/// scale the penalty acts on. Both are indexed by kept bundle column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedModel {
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub alpha_std: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub active_set: Vec<usize>,
    pub region_ids: Vec<String>,
    pub levels: Vec<usize>,
    /// Positions of the kept columns in the EBLUP matrix given at fit time.
    pub columns: Vec<usize>,
    pub input_columns: usize,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub sweeps: usize,
}

/// Standardized EBLUPs and phenotype with the unpenalized effects projected
/// out, so the remaining problem is a plain elastic net.
pub(crate) struct Prepared {
    pub g: DMatrix<f64>,
    pub y: DVector<f64>,
    norms: Vec<f64>,
}

impl Prepared {
    pub fn new(bundle: &DesignBundle, y: &DVector<f64>) -> Result<Prepared> {
        if y.len() != bundle.n_rows() {
            return Err(Error::Dimension(format!(
                "{} responses for {} design rows",
                y.len(),
                bundle.n_rows()
            )));
        }
        let q = orthonormal_basis(&bundle.unpenalized())?;
        let g = residualize(&q, &bundle.standardized());
        let yr = residualize_vec(&q, y);
        let norms = g.column_iter().map(|c| c.norm_squared()).collect();
        Ok(Prepared { g, y: yr, norms })
    }

    /// Smallest `lambda1` with an all-zero solution.
    pub fn lambda_max(&self) -> f64 {
        self.g
            .column_iter()
            .map(|c| (2.0 * c.dot(&self.y)).abs())
            .fold(0.0, f64::max)
    }

    fn objective(&self, r: &DVector<f64>, a: &[f64], l1: f64, l2: f64) -> f64 {
        let s1: f64 = a.iter().map(|v| v.abs()).sum();
        let pen1 = if s1 == 0.0 { 0.0 } else { l1 * s1 };
        r.norm_squared() + pen1 + l2 * a.iter().map(|v| v * v).sum::<f64>()
    }

    /// Cyclic coordinate descent; returns coefficients, sweeps and the
    /// objective after every sweep.
    pub fn solve(&self, l1: f64, l2: f64, warm: Option<&[f64]>) -> Result<(Vec<f64>, usize, Vec<f64>)> {
        let k = self.g.ncols();
        let n = self.g.nrows() as f64;
        let mut a = match warm {
            Some(w) if w.len() == k => w.to_vec(),
            _ => vec![0.0; k],
        };
        let mut r = self.y.clone();
        for (j, &aj) in a.iter().enumerate() {
            if aj != 0.0 {
                r.axpy(-aj, &self.g.column(j), 1.0);
            }
        }
        let mut trace = Vec::new();
        for sweep in 1..=MAX_SWEEPS {
            let mut max_change: f64 = 0.0;
            for j in 0..k {
                let nj = self.norms[j];
                let denom = nj + l2;
                let new = if nj <= 1e-10 * n && l2 == 0.0 {
                    0.0
                } else {
                    let z = self.g.column(j).dot(&r) + nj * a[j];
                    soft_threshold(z, 0.5 * l1) / denom
                };
                let delta = new - a[j];
                if delta != 0.0 {
                    r.axpy(-delta, &self.g.column(j), 1.0);
                    a[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            trace.push(self.objective(&r, &a, l1, l2));
            if max_change < TOLERANCE {
                return Ok((a, sweep, trace));
            }
        }
        Err(Error::NonConvergence {
            what: "lasso coordinate descent",
            iterations: MAX_SWEEPS,
            best_objective: trace.last().copied().unwrap_or(f64::NAN),
            best_params: a,
        })
    }

    pub fn residual(&self, a: &[f64]) -> DVector<f64> {
        let mut r = self.y.clone();
        for (j, &aj) in a.iter().enumerate() {
            if aj != 0.0 {
                r.axpy(-aj, &self.g.column(j), 1.0);
            }
        }
        r
    }
}

/// `sign(z) max(|z| - t, 0)`.
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_penalties(l1: f64, l2: f64) -> Result<()> {
    if l1.is_nan() || l1 < 0.0 || !(l2.is_finite() && l2 >= 0.0) {
        return Err(Error::Invalid(format!("penalties must be >= 0, got {l1} and {l2}")));
    }
    Ok(())
}

pub(crate) fn finish(
    bundle: &DesignBundle,
    y: &DVector<f64>,
    alpha_std: Vec<f64>,
    l1: f64,
    l2: f64,
    sweeps: usize,
) -> Result<CombinedModel> {
    let alpha: Vec<f64> = alpha_std
        .iter()
        .zip(&bundle.scales)
        .map(|(a, s)| a / s)
        .collect();
    let mut rest = y.clone();
    for (j, &aj) in alpha.iter().enumerate() {
        if aj != 0.0 {
            rest.axpy(-aj, &bundle.raw.column(j), 1.0);
        }
    }
    let u = bundle.unpenalized();
    let qr = u.clone().qr();
    let coef = qr
        .r()
        .solve_upper_triangular(&qr.q().tr_mul(&rest))
        .ok_or_else(|| Error::Numerical("fixed-effect design is singular".into()))?;
    Ok(CombinedModel {
        intercept: coef[0],
        beta: coef.iter().skip(1).copied().collect(),
        active_set: alpha_std
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, _)| j)
            .collect(),
        alpha,
        alpha_std,
        lambda1: l1,
        lambda2: l2,
        region_ids: bundle.region_ids.clone(),
        levels: bundle.levels.clone(),
        columns: bundle.columns.clone(),
        input_columns: bundle.input_columns,
        means: bundle.means.clone(),
        scales: bundle.scales.clone(),
        sweeps,
    })
}

/// Minimize `|y - b0 - X beta - G alpha|^2 + lambda1 |alpha|_1 + lambda2
/// |alpha|^2` with the penalty on standardized EBLUP coefficients only.
pub fn fit_lasso(bundle: &DesignBundle, y: &DVector<f64>, lambda1: f64, lambda2: f64) -> Result<CombinedModel> {
    fit_lasso_traced(bundle, y, lambda1, lambda2).map(|(m, _)| m)
}

/// As [`fit_lasso`], also returning the objective after every sweep.
pub fn fit_lasso_traced(
    bundle: &DesignBundle,
    y: &DVector<f64>,
    lambda1: f64,
    lambda2: f64,
) -> Result<(CombinedModel, Vec<f64>)> {
    check_penalties(lambda1, lambda2)?;
    let prep = Prepared::new(bundle, y)?;
    let (a, sweeps, trace) = prep.solve(lambda1, lambda2, None)?;
    Ok((finish(bundle, y, a, lambda1, lambda2, sweeps)?, trace))
}

/// Smallest `lambda1` whose solution is all zero.
pub fn lambda_max(bundle: &DesignBundle, y: &DVector<f64>) -> Result<f64> {
    Ok(Prepared::new(bundle, y)?.lambda_max())
}

/// Largest violation of the optimality conditions on the standardized
/// scale: `|2 g_j'r| <= lambda1` for inactive and `2 g_j'r - 2 lambda2 a_j =
/// lambda1 sign(a_j)` for active coefficients.
pub fn kkt_violation(bundle: &DesignBundle, y: &DVector<f64>, model: &CombinedModel) -> Result<f64> {
    let prep = Prepared::new(bundle, y)?;
    if model.alpha_std.len() != prep.g.ncols() {
        return Err(Error::Dimension("model does not match the bundle".into()));
    }
    let r = prep.residual(&model.alpha_std);
    let mut worst: f64 = 0.0;
    for (j, &a) in model.alpha_std.iter().enumerate() {
        let grad = 2.0 * prep.g.column(j).dot(&r);
        let v = if a == 0.0 {
            (grad.abs() - model.lambda1).max(0.0)
        } else {
            (grad - 2.0 * model.lambda2 * a - model.lambda1 * a.signum()).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

/// Full predictions `b0 + X beta + G alpha` and genotypic values `G alpha`.
///
/// `eblups` has the same columns as the matrix the model was fitted on.
pub fn predict_combined(
    model: &CombinedModel,
    eblups: &DMatrix<f64>,
    fixed: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if eblups.ncols() != model.input_columns {
        return Err(Error::Dimension(format!(
            "{} EBLUP columns, model expects {}",
            eblups.ncols(),
            model.input_columns
        )));
    }
    if fixed.ncols() != model.beta.len() || fixed.nrows() != eblups.nrows() {
        return Err(Error::Dimension(format!(
            "fixed effects are {}x{}, expected {}x{}",
            fixed.nrows(),
            fixed.ncols(),
            eblups.nrows(),
            model.beta.len()
        )));
    }
    let n = eblups.nrows();
    let mut genotypic = DVector::zeros(n);
    for (k, &c) in model.columns.iter().enumerate() {
        if model.alpha[k] != 0.0 {
            genotypic.axpy(model.alpha[k], &eblups.column(c), 1.0);
        }
    }
    let full = fixed * DVector::from_column_slice(&model.beta) + &genotypic + DVector::from_element(n, model.intercept);
    Ok((full, genotypic))
}
