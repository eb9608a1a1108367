use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Phenotype records, their incidence onto panel lines, and fixed-effect
/// covariates.
///
/// The fixed-effect design used by the mixed models is `[1 | covariates]`;
/// the intercept is implicit and never stored among the covariates.
#[derive(Debug, Clone)]
pub struct Phenotype {
    values: DVector<f64>,
    line_index: Vec<usize>,
    n_lines: usize,
    covariates: DMatrix<f64>,
    covariate_names: Vec<String>,
}

impl Phenotype {
    pub fn new(
        values: DVector<f64>,
        line_index: Vec<usize>,
        n_lines: usize,
        covariates: DMatrix<f64>,
        covariate_names: Vec<String>,
    ) -> Result<Self> {
        let n = values.len();
        if line_index.len() != n {
            return Err(Error::Dimension(format!(
                "{n} phenotype values but {} line indices",
                line_index.len()
            )));
        }
        if covariates.nrows() != n || covariates.ncols() != covariate_names.len() {
            return Err(Error::Dimension(format!(
                "covariates are {}x{}, expected {n}x{}",
                covariates.nrows(),
                covariates.ncols(),
                covariate_names.len()
            )));
        }
        if let Some(&bad) = line_index.iter().find(|&&l| l >= n_lines) {
            return Err(Error::Invalid(format!(
                "observation maps to line {bad} but the panel has {n_lines} lines"
            )));
        }
        if values.iter().chain(covariates.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("phenotype data must be finite".into()));
        }
        Ok(Phenotype {
            values,
            line_index,
            n_lines,
            covariates,
            covariate_names,
        })
    }

    /// One observation per line, in line order, intercept only.
    pub fn from_line_values(values: DVector<f64>) -> Self {
        let n = values.len();
        Phenotype {
            values,
            line_index: (0..n).collect(),
            n_lines: n,
            covariates: DMatrix::zeros(n, 0),
            covariate_names: Vec::new(),
        }
    }

    pub fn n_obs(&self) -> usize {
        self.values.len()
    }

    pub fn n_lines(&self) -> usize {
        self.n_lines
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn line_index(&self) -> &[usize] {
        &self.line_index
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    /// True when observation `i` is line `i` for every line.
    pub fn is_identity_incidence(&self) -> bool {
        self.values.len() == self.n_lines && self.line_index.iter().enumerate().all(|(i, &l)| i == l)
    }

    /// Fixed-effect design `[1 | covariates]`.
    pub fn design(&self) -> DMatrix<f64> {
        let n = self.n_obs();
        let mut x = DMatrix::zeros(n, 1 + self.covariates.ncols());
        x.column_mut(0).fill(1.0);
        x.view_mut((0, 1), (n, self.covariates.ncols()))
            .copy_from(&self.covariates);
        x
    }

    /// Same records with a different response vector.
    pub fn with_values(&self, values: DVector<f64>) -> Result<Self> {
        if values.len() != self.n_obs() {
            return Err(Error::Dimension(format!(
                "{} new values for {} observations",
                values.len(),
                self.n_obs()
            )));
        }
        Ok(Phenotype {
            values,
            ..self.clone()
        })
    }

    /// Per-line lift of observation-level rows: `Z * m` for an `n_lines x k`
    /// matrix.
    pub fn expand_lines(&self, per_line: &DMatrix<f64>) -> DMatrix<f64> {
        per_line.select_rows(self.line_index.iter())
    }

    /// Records restricted to `lines` (indices into the current panel), with
    /// line indices remapped to positions in `lines`.
    pub fn subset_lines(&self, lines: &[usize]) -> Phenotype {
        let mut remap = vec![usize::MAX; self.n_lines];
        for (new, &old) in lines.iter().enumerate() {
            remap[old] = new;
        }
        let keep: Vec<usize> = (0..self.n_obs())
            .filter(|&i| remap[self.line_index[i]] != usize::MAX)
            .collect();
        Phenotype {
            values: DVector::from_iterator(keep.len(), keep.iter().map(|&i| self.values[i])),
            line_index: keep.iter().map(|&i| remap[self.line_index[i]]).collect(),
            n_lines: lines.len(),
            covariates: self.covariates.select_rows(keep.iter()),
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Mean phenotype per line; `None` for lines without records.
    pub fn line_means(&self) -> Vec<Option<f64>> {
        let mut sum = vec![0.0; self.n_lines];
        let mut count = vec![0usize; self.n_lines];
        for (i, &l) in self.line_index.iter().enumerate() {
            sum[l] += self.values[i];
            count[l] += 1;
        }
        sum.into_iter()
            .zip(count)
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect()
    }
}
