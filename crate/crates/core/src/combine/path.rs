use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::design::DesignBundle;
use super::lasso::{finish, predict_combined, CombinedModel, Prepared};
use crate::error::{Error, Result};

/// Cross-validated regularization path.
#[derive(Debug, Clone)]
pub struct PathReport {
    /// Decreasing `lambda1` values, starting at the all-zero `lambda_max`.
    pub lambdas: Vec<f64>,
    /// Mean held-out squared error per `lambda1`.
    pub cv_error: Vec<f64>,
    pub chosen: usize,
    /// Standardized coefficients of the full-data fit at every `lambda1`.
    pub coefficients: Vec<Vec<f64>>,
    /// Full-data model at the chosen `lambda1`.
    pub model: CombinedModel,
}

impl PathReport {
    pub fn chosen_lambda(&self) -> f64 {
        self.lambdas[self.chosen]
    }
}

/// Geometric grid from `lambda_max` down to `1e-3 lambda_max`.
pub fn lambda_grid(lambda_max: f64, n_lambda: usize) -> Vec<f64> {
    let lo = (1e-3f64).ln();
    (0..n_lambda)
        .map(|i| lambda_max * (lo * i as f64 / (n_lambda - 1) as f64).exp())
        .collect()
}

fn warm_path(prep: &Prepared, lambdas: &[f64], l2: f64) -> Result<Vec<(Vec<f64>, usize)>> {
    let mut out: Vec<(Vec<f64>, usize)> = Vec::with_capacity(lambdas.len());
    for &l1 in lambdas {
        let warm = out.last().map(|(a, _)| a.as_slice());
        let (a, sweeps, _) = prep.solve(l1, l2, warm)?;
        out.push((a, sweeps));
    }
    Ok(out)
}

/// Choose `lambda1` by `folds`-fold cross-validation with the minimum-error
/// rule. Folds come from a seeded shuffle of the rows.
pub fn lambda_path(
    bundle: &DesignBundle,
    y: &DVector<f64>,
    n_lambda: usize,
    folds: usize,
    lambda2: f64,
    seed: u64,
) -> Result<PathReport> {
    if n_lambda < 2 {
        return Err(Error::Invalid("a path needs at least two lambda values".into()));
    }
    if folds < 2 {
        return Err(Error::Invalid("cross-validation needs at least two folds".into()));
    }
    let n = bundle.n_rows();
    if n < folds {
        return Err(Error::Invalid(format!("{n} rows are fewer than {folds} folds")));
    }
    if !(lambda2.is_finite() && lambda2 >= 0.0) {
        return Err(Error::Invalid(format!("lambda2 must be >= 0, got {lambda2}")));
    }
    let prep = Prepared::new(bundle, y)?;
    let lmax = prep.lambda_max();
    if bundle.n_columns() == 0 || lmax == 0.0 {
        let model = finish(bundle, y, vec![0.0; bundle.n_columns()], lmax, lambda2, 0)?;
        return Ok(PathReport {
            lambdas: vec![lmax],
            cv_error: vec![f64::NAN],
            chosen: 0,
            coefficients: vec![model.alpha_std.clone()],
            model,
        });
    }
    let lambdas = lambda_grid(lmax, n_lambda);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let errors: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| -> Result<Vec<f64>> {
            let test: Vec<usize> = order.iter().copied().skip(f).step_by(folds).collect();
            let mut train: Vec<usize> = order.iter().copied().filter(|i| !test.contains(i)).collect();
            train.sort_unstable();
            let tb = bundle.subset(&train)?;
            let ty = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
            let tp = Prepared::new(&tb, &ty)?;
            let path = warm_path(&tp, &lambdas, lambda2)?;
            let full_g = {
                let mut m = nalgebra::DMatrix::zeros(test.len(), bundle.input_columns);
                for (k, &c) in bundle.columns.iter().enumerate() {
                    for (r, &i) in test.iter().enumerate() {
                        m[(r, c)] = bundle.raw[(i, k)];
                    }
                }
                m
            };
            let test_fixed = bundle.fixed.select_rows(&test);
            path.into_iter()
                .zip(&lambdas)
                .map(|((a, s), &l1)| {
                    let model = finish(&tb, &ty, a, l1, lambda2, s)?;
                    let (pred, _) = predict_combined(&model, &full_g, &test_fixed)?;
                    Ok(test
                        .iter()
                        .enumerate()
                        .map(|(r, &i)| (y[i] - pred[r]).powi(2))
                        .sum::<f64>())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let cv_error: Vec<f64> = (0..lambdas.len())
        .map(|l| errors.iter().map(|e| e[l]).sum::<f64>() / n as f64)
        .collect();
    let chosen = cv_error
        .iter()
        .enumerate()
        .fold(0, |best, (i, e)| if *e < cv_error[best] { i } else { best });
    let path = warm_path(&prep, &lambdas, lambda2)?;
    let (a, sweeps) = path[chosen].clone();
    let model = finish(bundle, y, a, lambdas[chosen], lambda2, sweeps)?;
    Ok(PathReport {
        coefficients: path.into_iter().map(|(a, _)| a).collect(),
        lambdas,
        cv_error,
        chosen,
        model,
    })
}
