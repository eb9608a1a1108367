use nalgebra::DMatrix;

use super::matrix::{KernelMatrix, Recipe};
use crate::error::{Error, Result};
use crate::genome::{MarkerPanel, Region};
use crate::linalg;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Median of the nonzero pairwise squared distances.
    Median,
    Fixed(f64),
}

/// Kernel function over marker rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFunction {
    /// `x'y / m`
    Linear,
    /// `(x'y / m + c)^degree`
    Polynomial { c: f64, degree: u32 },
    /// `exp(-|x - y|^2 / h)`
    Gaussian { bandwidth: Bandwidth },
}

impl KernelFunction {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFunction::Linear => "linear",
            KernelFunction::Polynomial { .. } => "polynomial",
            KernelFunction::Gaussian { .. } => "gaussian",
        }
    }
}

/// A kernel function with every data-dependent parameter fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedKernel {
    Linear,
    Polynomial { c: f64, degree: u32 },
    Gaussian { h: f64 },
}

fn squared_distances(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), b.nrows());
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                let t = a[(i, k)] - b[(j, k)];
                s += t * t;
            }
            d[(i, j)] = s;
        }
    }
    d
}

fn self_squared_distances(a: &DMatrix<f64>) -> DMatrix<f64> {
    let q = a.nrows();
    let mut d = DMatrix::zeros(q, q);
    for i in 0..q {
        for j in (i + 1)..q {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                let t = a[(i, k)] - a[(j, k)];
                s += t * t;
            }
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

/// Kernel between rows of `a` and rows of `b`.
pub(crate) fn evaluate_cross(f: &ResolvedKernel, a: &DMatrix<f64>, b: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    match *f {
        ResolvedKernel::Linear => (a * b.transpose()) / scale,
        ResolvedKernel::Polynomial { c, degree } => {
            ((a * b.transpose()) / scale).map(|g| (g + c).powi(degree as i32))
        }
        ResolvedKernel::Gaussian { h } => squared_distances(a, b).map(|d| (-d / h).exp()),
    }
}

fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = a * a.transpose();
    linalg::mirror_upper(&mut g);
    g
}

fn resolve_bandwidth(bandwidth: Bandwidth, dist: &DMatrix<f64>) -> Result<f64> {
    match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => Ok(h),
        Bandwidth::Fixed(h) => Err(Error::Invalid(format!("gaussian bandwidth must be > 0, got {h}"))),
        Bandwidth::Median => {
            let q = dist.nrows();
            let mut nonzero: Vec<f64> = (0..q)
                .flat_map(|i| ((i + 1)..q).map(move |j| (i, j)))
                .map(|(i, j)| dist[(i, j)])
                .filter(|&d| d > 0.0)
                .collect();
            if nonzero.is_empty() {
                return Err(Error::Invalid(
                    "median bandwidth undefined: all pairwise distances are zero".into(),
                ));
            }
            Ok(stats::median(&mut nonzero))
        }
    }
}

/// Gram-type kernel of already weighted rows; returns the values and the
/// resolved function.
fn evaluate_gram(f: KernelFunction, a: &DMatrix<f64>, scale: f64) -> Result<(DMatrix<f64>, ResolvedKernel)> {
    if a.ncols() == 0 {
        return Err(Error::Invalid("kernel needs at least one marker column".into()));
    }
    if a.nrows() > 1 && a.row_iter().all(|r| r == a.row(0)) {
        log::warn!("all lines identical over these markers; kernel carries no contrast");
    }
    Ok(match f {
        KernelFunction::Linear => (gram(a) / scale, ResolvedKernel::Linear),
        KernelFunction::Polynomial { c, degree } => {
            if degree == 0 {
                return Err(Error::Invalid("polynomial kernel degree must be >= 1".into()));
            }
            let k = (gram(a) / scale).map(|g| (g + c).powi(degree as i32));
            (k, ResolvedKernel::Polynomial { c, degree })
        }
        KernelFunction::Gaussian { bandwidth } => {
            let d = self_squared_distances(a);
            let h = resolve_bandwidth(bandwidth, &d)?;
            (d.map(|v| (-v / h).exp()), ResolvedKernel::Gaussian { h })
        }
    })
}

/// Kernel from selected columns of `markers`, optionally multiplied by
/// per-column weights, with inner products divided by `scale`.
pub fn marker_kernel(
    markers: &DMatrix<f64>,
    columns: &[usize],
    column_weights: Option<&[f64]>,
    scale: f64,
    function: KernelFunction,
    source: impl Into<String>,
) -> Result<KernelMatrix> {
    if columns.iter().any(|&j| j >= markers.ncols()) {
        return Err(Error::Dimension("kernel column index out of range".into()));
    }
    let mut a = markers.select_columns(columns.iter());
    if let Some(w) = column_weights {
        if w.len() != columns.len() {
            return Err(Error::Dimension("one weight per kernel column required".into()));
        }
        for (k, mut col) in a.column_iter_mut().enumerate() {
            col *= w[k];
        }
    }
    let (values, function) = evaluate_gram(function, &a, scale)?;
    Ok(KernelMatrix::from_parts(
        values,
        Recipe::Markers {
            columns: columns.to_vec(),
            column_weights: column_weights.map(<[f64]>::to_vec),
            function,
            scale,
        },
        source.into(),
    ))
}

fn all_columns(a: &DMatrix<f64>) -> Vec<usize> {
    (0..a.ncols()).collect()
}

/// `A A' / m` for a lines x m matrix.
pub fn linear_kernel(a: &DMatrix<f64>) -> Result<KernelMatrix> {
    marker_kernel(a, &all_columns(a), None, a.ncols() as f64, KernelFunction::Linear, "matrix")
}

/// `(x_i'x_j / m + c)^d`.
pub fn polynomial_kernel(a: &DMatrix<f64>, c: f64, degree: u32) -> Result<KernelMatrix> {
    marker_kernel(
        a,
        &all_columns(a),
        None,
        a.ncols() as f64,
        KernelFunction::Polynomial { c, degree },
        "matrix",
    )
}

/// `exp(-|x_i - x_j|^2 / h)`.
pub fn gaussian_kernel(a: &DMatrix<f64>, bandwidth: Bandwidth) -> Result<KernelMatrix> {
    marker_kernel(
        a,
        &all_columns(a),
        None,
        a.ncols() as f64,
        KernelFunction::Gaussian { bandwidth },
        "matrix",
    )
}

/// Kernel over the markers of `region`.
pub fn region_kernel(panel: &MarkerPanel, region: &Region, function: KernelFunction) -> Result<KernelMatrix> {
    marker_kernel(
        panel.markers(),
        &region.marker_indices,
        None,
        region.len() as f64,
        function,
        region.id.clone(),
    )
}

/// Kernel over every panel column outside `region`, unmapped markers
/// included. Errors when the complement is empty.
pub fn complement_kernel(panel: &MarkerPanel, region: &Region, function: KernelFunction) -> Result<KernelMatrix> {
    let cols = region.complement(panel.n_markers());
    if cols.is_empty() {
        return Err(Error::Invalid(format!(
            "region {} covers the whole panel; its complement is empty",
            region.id
        )));
    }
    let scale = cols.len() as f64;
    marker_kernel(panel.markers(), &cols, None, scale, function, format!("not:{}", region.id))
}
