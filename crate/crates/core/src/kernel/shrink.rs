use nalgebra::DMatrix;

use super::matrix::{KernelMatrix, Recipe};
use crate::error::{Error, Result};
use crate::linalg;

const MIN_EIGENVALUE: f64 = 1e-8;

/// A retained off-diagonal relationship between two lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Zero every off-diagonal entry with `|K_ij| < threshold`, then restore
/// positive definiteness by adding the smallest `eps * I` that lifts the least
/// eigenvalue to 1e-8. A matrix left untouched by the threshold is returned
/// as is. Also returns the surviving off-diagonal pairs.
pub fn shrink_kernel(kernel: &KernelMatrix, threshold: f64) -> Result<(KernelMatrix, Vec<Edge>)> {
    if !(threshold >= 0.0) {
        return Err(Error::Invalid(format!("threshold must be >= 0, got {threshold}")));
    }
    let q = kernel.dim();
    let mut values: DMatrix<f64> = kernel.values().clone();
    let mut zeroed = false;
    let mut edges = Vec::new();
    for j in 0..q {
        for i in 0..j {
            let v = values[(i, j)];
            if v.abs() < threshold {
                if v != 0.0 {
                    zeroed = true;
                }
                values[(i, j)] = 0.0;
                values[(j, i)] = 0.0;
            } else if v != 0.0 {
                edges.push(Edge { a: i, b: j, value: v });
            }
        }
    }
    if !zeroed {
        return Ok((kernel.clone(), edges));
    }
    let min = linalg::min_eigenvalue(&values);
    if min < MIN_EIGENVALUE {
        let eps = MIN_EIGENVALUE - min;
        for i in 0..q {
            values[(i, i)] += eps;
        }
    }
    edges.sort_by(|x, y| (x.a, x.b).cmp(&(y.a, y.b)));
    Ok((
        KernelMatrix::from_parts(values, Recipe::Opaque, format!("shrunk:{}", kernel.source())),
        edges,
    ))
}
