use nalgebra::{DMatrix, DVector};

use super::matrix::{KernelMatrix, Recipe};
use super::weights::{KernelWeights, WeightMethod};
use crate::error::{Error, Result};

fn same_dims(kernels: &[&KernelMatrix]) -> Result<usize> {
    let q = kernels
        .first()
        .ok_or_else(|| Error::Invalid("no kernels given".into()))?
        .dim();
    if let Some(bad) = kernels.iter().find(|k| k.dim() != q) {
        return Err(Error::Dimension(format!(
            "kernel {} is {}x{}, expected {q}x{q}",
            bad.source(),
            bad.dim(),
            bad.dim()
        )));
    }
    Ok(q)
}

/// Weighted sum `sum_m eta_m K_m`.
///
/// Each entry sums its terms in sorted order, so permuting `(kernels,
/// weights)` together gives a bit-identical result.
pub fn combine_kernels(kernels: &[&KernelMatrix], weights: &KernelWeights) -> Result<KernelMatrix> {
    let q = same_dims(kernels)?;
    if weights.len() != kernels.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} kernels",
            weights.len(),
            kernels.len()
        )));
    }
    let w = weights.weights();
    let mut terms = vec![0.0; kernels.len()];
    let mut values = DMatrix::zeros(q, q);
    for j in 0..q {
        for i in 0..=j {
            for (t, (k, eta)) in terms.iter_mut().zip(kernels.iter().zip(w)) {
                *t = eta * k.values()[(i, j)];
            }
            terms.sort_by(|a, b| a.total_cmp(b));
            let s: f64 = terms.iter().sum();
            values[(i, j)] = s;
            values[(j, i)] = s;
        }
    }
    let recipe = Recipe::Weighted(
        w.iter()
            .zip(kernels)
            .map(|(eta, k)| (*eta, k.recipe().clone()))
            .collect(),
    );
    let source = kernels
        .iter()
        .map(|k| k.source())
        .collect::<Vec<_>>()
        .join("+");
    Ok(KernelMatrix::from_parts(values, recipe, source))
}

/// Entrywise product; PSD whenever both factors are (Schur product theorem).
pub fn hadamard(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<KernelMatrix> {
    same_dims(&[k1, k2])?;
    let values = k1.values().component_mul(k2.values());
    Ok(KernelMatrix::from_parts(
        values,
        Recipe::Hadamard(Box::new(k1.recipe().clone()), Box::new(k2.recipe().clone())),
        format!("{}*{}", k1.source(), k2.source()),
    ))
}

fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `<K1, K2>_F / sqrt(<K1, K1>_F <K2, K2>_F)`.
pub fn kernel_alignment(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<f64> {
    same_dims(&[k1, k2])?;
    alignment_values(k1.values(), k2.values())
}

fn alignment_values(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let na = frobenius(a, a);
    let nb = frobenius(b, b);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Invalid("alignment undefined for a zero-norm kernel".into()));
    }
    Ok(frobenius(a, b) / (na * nb).sqrt())
}

/// Weights proportional to each kernel's alignment with `y y'`, where `y` is
/// indexed by line.
pub fn alignment_weights(kernels: &[&KernelMatrix], y: &DVector<f64>) -> Result<KernelWeights> {
    let q = same_dims(kernels)?;
    if y.len() != q {
        return Err(Error::Dimension(format!("response has {} entries for {q} lines", y.len())));
    }
    let target = y * y.transpose();
    let scores = kernels
        .iter()
        .map(|k| alignment_values(k.values(), &target).map(|a| a.max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    KernelWeights::from_scores(&scores, WeightMethod::Alignment)
}
