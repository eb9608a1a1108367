use nalgebra::DMatrix;

use super::functions::{evaluate_cross, ResolvedKernel};
use crate::error::{Error, Result};
use crate::linalg;

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
pub const PSD_TOLERANCE: f64 = 1e-8;

/// How a kernel was built, detailed enough to evaluate it between new lines
/// and the lines it was built on.
#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    /// A kernel function applied to a column subset of a marker matrix.
    Markers {
        columns: Vec<usize>,
        /// Multiplies each selected column (square roots of scan weights).
        column_weights: Option<Vec<f64>>,
        function: ResolvedKernel,
        scale: f64,
    },
    Weighted(Vec<(f64, Recipe)>),
    Hadamard(Box<Recipe>, Box<Recipe>),
    /// Supplied or post-processed values with no out-of-sample form.
    Opaque,
}

impl Recipe {
    /// Kernel values between rows of `new` and rows of `train`
    /// (`new.nrows() x train.nrows()`). Both are full marker matrices with
    /// the same columns.
    pub fn cross(&self, train: &DMatrix<f64>, new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if train.ncols() != new.ncols() {
            return Err(Error::Dimension(format!(
                "new lines have {} markers, training lines {}",
                new.ncols(),
                train.ncols()
            )));
        }
        match self {
            Recipe::Markers {
                columns,
                column_weights,
                function,
                scale,
            } => {
                if columns.iter().any(|&j| j >= train.ncols()) {
                    return Err(Error::Dimension("kernel columns exceed marker matrix".into()));
                }
                let weigh = |m: &DMatrix<f64>| {
                    let mut s = m.select_columns(columns.iter());
                    if let Some(w) = column_weights {
                        for (k, mut col) in s.column_iter_mut().enumerate() {
                            col *= w[k];
                        }
                    }
                    s
                };
                Ok(evaluate_cross(function, &weigh(new), &weigh(train), *scale))
            }
            Recipe::Weighted(parts) => {
                let mut out = DMatrix::zeros(new.nrows(), train.nrows());
                for (w, r) in parts {
                    out += r.cross(train, new)? * *w;
                }
                Ok(out)
            }
            Recipe::Hadamard(a, b) => Ok(a.cross(train, new)?.component_mul(&b.cross(train, new)?)),
            Recipe::Opaque => Err(Error::Invalid(
                "kernel has no out-of-sample form (opaque recipe)".into(),
            )),
        }
    }
}

/// Symmetric positive semi-definite relationship matrix over lines.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    values: DMatrix<f64>,
    recipe: Recipe,
    source: String,
    normalized: bool,
}

impl KernelMatrix {
    pub(crate) fn from_parts(values: DMatrix<f64>, recipe: Recipe, source: String) -> Self {
        debug_assert!(values.is_square());
        KernelMatrix {
            values,
            recipe,
            source,
            normalized: false,
        }
    }

    /// Wrap a precomputed matrix. It must be square and symmetric.
    pub fn from_matrix(values: DMatrix<f64>, source: impl Into<String>) -> Result<Self> {
        if !values.is_square() {
            return Err(Error::Dimension(format!(
                "kernel must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        let asym = linalg::max_asymmetry(&values);
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::Invalid(format!("kernel is not symmetric (max |K - K'| = {asym})")));
        }
        Ok(KernelMatrix::from_parts(values, Recipe::Opaque, source.into()))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn recipe(&self) -> &Recipe {
        &self.recipe
    }

    /// Region id, `scan@<marker>` or a description of the combination.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn mean_diagonal(&self) -> f64 {
        self.values.diagonal().mean()
    }

    /// Rescale so the diagonal averages to one.
    pub fn normalized(self) -> Result<Self> {
        let md = self.mean_diagonal();
        if !(md > 0.0) {
            return Err(Error::Invalid(format!(
                "cannot normalize kernel {} with mean diagonal {md}",
                self.source
            )));
        }
        let factor = 1.0 / md;
        Ok(KernelMatrix {
            values: self.values * factor,
            recipe: Recipe::Weighted(vec![(factor, self.recipe)]),
            source: self.source,
            normalized: true,
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.values)
    }

    /// Symmetry to 1e-10 and smallest eigenvalue at least -1e-8.
    pub fn check(&self) -> Result<()> {
        let asym = linalg::max_asymmetry(&self.values);
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::Numerical(format!("kernel {} asymmetric by {asym}", self.source)));
        }
        let min = self.min_eigenvalue();
        if min < -PSD_TOLERANCE {
            return Err(Error::Numerical(format!(
                "kernel {} has eigenvalue {min} below -{PSD_TOLERANCE}",
                self.source
            )));
        }
        if self.normalized && (self.mean_diagonal() - 1.0).abs() > SYMMETRY_TOLERANCE {
            return Err(Error::Numerical(format!(
                "normalized kernel {} has mean diagonal {}",
                self.source,
                self.mean_diagonal()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_sets_mean_diagonal() {
        let k = KernelMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 4.0]), "k")
            .unwrap()
            .normalized()
            .unwrap();
        assert!((k.mean_diagonal() - 1.0).abs() < 1e-12);
        k.check().unwrap();
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(KernelMatrix::from_matrix(m, "bad").is_err());
    }

    #[test]
    fn opaque_has_no_cross_form() {
        let k = KernelMatrix::from_matrix(DMatrix::identity(2, 2), "i").unwrap();
        let m = DMatrix::zeros(2, 3);
        assert!(k.recipe().cross(&m, &m).is_err());
    }
}
