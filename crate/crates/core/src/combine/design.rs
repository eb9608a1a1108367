use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// EBLUP columns and fixed effects prepared for the lasso.
///
/// EBLUP columns are standardized to mean 0 and unit (population) variance;
/// fixed effects stay on their raw scale. Columns with zero variance are
/// dropped.
#[derive(Debug, Clone)]
pub struct DesignBundle {
    pub(crate) region_ids: Vec<String>,
    pub(crate) levels: Vec<usize>,
    /// Indices of the kept columns in the input EBLUP matrix.
    pub(crate) columns: Vec<usize>,
    pub(crate) input_columns: usize,
    pub(crate) raw: DMatrix<f64>,
    pub(crate) means: Vec<f64>,
    pub(crate) scales: Vec<f64>,
    pub(crate) fixed: DMatrix<f64>,
}

impl DesignBundle {
    pub fn n_rows(&self) -> usize {
        self.raw.nrows()
    }

    /// Number of kept EBLUP columns.
    pub fn n_columns(&self) -> usize {
        self.raw.ncols()
    }

    pub fn region_ids(&self) -> &[String] {
        &self.region_ids
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn kept_columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn fixed(&self) -> &DMatrix<f64> {
        &self.fixed
    }

    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    /// Standardized EBLUP columns.
    pub fn standardized(&self) -> DMatrix<f64> {
        let mut s = self.raw.clone();
        for (j, mut c) in s.column_iter_mut().enumerate() {
            c.apply(|v| *v = (*v - self.means[j]) / self.scales[j]);
        }
        s
    }

    /// The bundle restricted to `rows`, re-standardized on those rows.
    pub fn subset(&self, rows: &[usize]) -> Result<DesignBundle> {
        let g = self.raw.select_rows(rows);
        let f = self.fixed.select_rows(rows);
        let mut full = DMatrix::zeros(rows.len(), self.input_columns);
        for (k, &c) in self.columns.iter().enumerate() {
            full.set_column(c, &g.column(k));
        }
        let mut ids = vec![String::new(); self.input_columns];
        let mut levels = vec![0; self.input_columns];
        for (k, &c) in self.columns.iter().enumerate() {
            ids[c] = self.region_ids[k].clone();
            levels[c] = self.levels[k];
        }
        let mut b = assemble_design(&full, &ids, &levels, &f)?;
        b.input_columns = self.input_columns;
        Ok(b)
    }

    /// `[1 | fixed]`.
    pub(crate) fn unpenalized(&self) -> DMatrix<f64> {
        let n = self.n_rows();
        let p = self.fixed.ncols();
        let mut x = DMatrix::from_element(n, p + 1, 1.0);
        if p > 0 {
            x.columns_mut(1, p).copy_from(&self.fixed);
        }
        x
    }
}

/// Stack EBLUP columns (any number of tree levels) with fixed effects.
///
/// `fixed` excludes the intercept, which is always added.
pub fn assemble_design(
    eblups: &DMatrix<f64>,
    region_ids: &[String],
    levels: &[usize],
    fixed: &DMatrix<f64>,
) -> Result<DesignBundle> {
    let n = eblups.nrows();
    let k = eblups.ncols();
    if region_ids.len() != k || levels.len() != k {
        return Err(Error::Dimension(format!(
            "{} EBLUP columns with {} ids and {} levels",
            k,
            region_ids.len(),
            levels.len()
        )));
    }
    if fixed.nrows() != n {
        return Err(Error::Dimension(format!(
            "fixed effects have {} rows, EBLUPs {}",
            fixed.nrows(),
            n
        )));
    }
    if n < 2 {
        return Err(Error::Invalid("at least two rows are needed".into()));
    }
    let mut kept = Vec::new();
    let mut means = Vec::new();
    let mut scales = Vec::new();
    for j in 0..k {
        let c = eblups.column(j);
        let m = c.mean();
        let var = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        if !(sd > 1e-12 * (1.0 + m.abs())) {
            log::warn!("EBLUP column {} has zero variance and is dropped", region_ids[j]);
            continue;
        }
        kept.push(j);
        means.push(m);
        scales.push(sd);
    }
    Ok(DesignBundle {
        region_ids: kept.iter().map(|&j| region_ids[j].clone()).collect(),
        levels: kept.iter().map(|&j| levels[j]).collect(),
        raw: eblups.select_columns(&kept),
        columns: kept,
        input_columns: k,
        means,
        scales,
        fixed: fixed.clone(),
    })
}

/// Orthonormal basis of the column space of `x`; errors on rank deficiency.
pub(crate) fn orthonormal_basis(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let bad = crate::linalg::collinear_columns(x);
    if !bad.is_empty() {
        return Err(Error::RankDeficient { columns: bad });
    }
    let qr = x.clone().qr();
    Ok(qr.q())
}

/// `v - Q Q' v` column by column.
pub(crate) fn residualize(q: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    m - q * q.tr_mul(m)
}

pub(crate) fn residualize_vec(q: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    v - q * q.tr_mul(v)
}
