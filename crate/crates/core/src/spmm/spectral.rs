//! Likelihood evaluation in the eigenbasis of a (whitened) kernel, where
//! `V = C^{1/2} (I + lambda D) C^{1/2}'` and each evaluation costs `O(n p^2)`.

use nalgebra::{DMatrix, DVector};

use super::Method;
use crate::error::{Error, Result};

/// Profiled likelihood terms at one value of the variance ratio.
#[derive(Debug, Clone)]
pub struct Profile {
    pub beta: DVector<f64>,
    pub sigma_e2: f64,
    /// Twice the log-likelihood at `(beta, sigma_e2, lambda)`.
    pub loglik: f64,
    /// Twice the restricted log-likelihood at `(sigma_e2, lambda)`.
    pub reml_loglik: f64,
    /// Residuals `y - X beta` in rotated coordinates.
    pub rotated_residual: DVector<f64>,
}

impl Profile {
    pub fn objective(&self, method: Method) -> f64 {
        match method {
            Method::Ml => self.loglik,
            Method::Reml => self.reml_loglik,
        }
    }
}

pub struct SpectralModel {
    d: DVector<f64>,
    y: DVector<f64>,
    x: DMatrix<f64>,
    logdet_base: f64,
    /// Maps rotated vectors back: `V^{-1} r = back * (w .* r_rot)`.
    back: DMatrix<f64>,
}

struct Weighted {
    xtwx: DMatrix<f64>,
    xtwy: DVector<f64>,
    logdet_v: f64,
    w: DVector<f64>,
}

impl SpectralModel {
    /// Eigenbasis of `h` itself (`C = I`).
    pub fn single(h: &DMatrix<f64>, y: &DVector<f64>, x: &DMatrix<f64>) -> SpectralModel {
        let eig = h.clone().symmetric_eigen();
        let u = eig.eigenvectors;
        SpectralModel {
            d: eig.eigenvalues.map(|v| v.max(0.0)),
            y: u.tr_mul(y),
            x: u.tr_mul(x),
            logdet_base: 0.0,
            back: u,
        }
    }

    /// Eigenbasis of `L^{-1} h L^{-T}` where `base = L L'`.
    pub fn whitened(base: &DMatrix<f64>, h: &DMatrix<f64>, y: &DVector<f64>, x: &DMatrix<f64>) -> Result<SpectralModel> {
        let chol = base
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("covariance of fixed components is not positive definite".into()))?;
        let l = chol.l();
        let logdet_base = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let linv_h = l
            .solve_lower_triangular(h)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let mut hw = l
            .solve_lower_triangular(&linv_h.transpose())
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        crate::linalg::mirror_upper(&mut hw);
        let eig = hw.symmetric_eigen();
        let u = eig.eigenvectors;
        let ly = l
            .solve_lower_triangular(y)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let lx = l
            .solve_lower_triangular(x)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        let back = l
            .transpose()
            .solve_upper_triangular(&u)
            .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
        Ok(SpectralModel {
            d: eig.eigenvalues.map(|v| v.max(0.0)),
            y: u.tr_mul(&ly),
            x: u.tr_mul(&lx),
            logdet_base,
            back,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn weighted(&self, lambda: f64) -> Weighted {
        let n = self.n();
        let p = self.p();
        let w = self.d.map(|d| 1.0 / (1.0 + lambda * d));
        let mut xtwx = DMatrix::zeros(p, p);
        let mut xtwy = DVector::zeros(p);
        for i in 0..n {
            let wi = w[i];
            for a in 0..p {
                let xa = self.x[(i, a)] * wi;
                xtwy[a] += xa * self.y[i];
                for b in 0..=a {
                    xtwx[(a, b)] += xa * self.x[(i, b)];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                xtwx[(b, a)] = xtwx[(a, b)];
            }
        }
        let logdet_v = self.logdet_base + self.d.iter().map(|d| (lambda * d).ln_1p()).sum::<f64>();
        Weighted { xtwx, xtwy, logdet_v, w }
    }

    /// Terms with `beta` profiled by GLS and `sigma_e2` by its closed form for
    /// `method`.
    pub fn profile(&self, lambda: f64, method: Method) -> Result<Profile> {
        let n = self.n() as f64;
        let p = self.p() as f64;
        let wt = self.weighted(lambda);
        let chol = wt
            .xtwx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("X' V^-1 X is not positive definite".into()))?;
        let beta = chol.solve(&wt.xtwy);
        let logdet_a = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let resid = &self.y - &self.x * &beta;
        let rss: f64 = resid.iter().zip(wt.w.iter()).map(|(r, w)| w * r * r).sum();
        let dof = match method {
            Method::Ml => n,
            Method::Reml => n - p,
        };
        let sigma_e2 = (rss / dof).max(f64::MIN_POSITIVE);
        let loglik = -n * sigma_e2.ln() - wt.logdet_v - rss / sigma_e2;
        let reml_loglik = -(n - p) * sigma_e2.ln() - wt.logdet_v - logdet_a - rss / sigma_e2;
        Ok(Profile {
            beta,
            sigma_e2,
            loglik,
            reml_loglik,
            rotated_residual: resid,
        })
    }

    /// Twice the log-likelihood at arbitrary `(beta, sigma_e2, lambda)`.
    pub fn loglik_at(&self, beta: &DVector<f64>, sigma_e2: f64, lambda: f64) -> f64 {
        let n = self.n() as f64;
        let resid = &self.y - &self.x * beta;
        let logdet_v = self.logdet_base + self.d.iter().map(|d| (lambda * d).ln_1p()).sum::<f64>();
        let quad: f64 = resid
            .iter()
            .zip(self.d.iter())
            .map(|(r, d)| r * r / (1.0 + lambda * d))
            .sum();
        -n * sigma_e2.ln() - logdet_v - quad / sigma_e2
    }

    /// Twice the restricted log-likelihood at `(sigma_e2, lambda)` with the
    /// GLS estimate of `beta`.
    pub fn reml_at(&self, sigma_e2: f64, lambda: f64) -> Result<f64> {
        let n = self.n() as f64;
        let p = self.p() as f64;
        let wt = self.weighted(lambda);
        let chol = wt
            .xtwx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("X' V^-1 X is not positive definite".into()))?;
        let beta = chol.solve(&wt.xtwy);
        let logdet_a = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let resid = &self.y - &self.x * &beta;
        let rss: f64 = resid.iter().zip(wt.w.iter()).map(|(r, w)| w * r * r).sum();
        Ok(-(n - p) * sigma_e2.ln() - wt.logdet_v - logdet_a - rss / sigma_e2)
    }

    /// `V^{-1} (y - X beta)` in the original observation coordinates.
    pub fn vinv_residual(&self, profile: &Profile, lambda: f64) -> DVector<f64> {
        let scaled = DVector::from_iterator(
            self.n(),
            profile
                .rotated_residual
                .iter()
                .zip(self.d.iter())
                .map(|(r, d)| r / (1.0 + lambda * d)),
        );
        &self.back * scaled
    }
}
