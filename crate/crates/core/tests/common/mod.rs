#![allow(dead_code)]

use locepi::genome::Phenotype;
use locepi::kernel::{linear_kernel, KernelMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Random -1/+1 markers.
pub fn markers(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// Additive trait on random markers with roughly the given heritability.
pub struct Instance {
    pub markers: DMatrix<f64>,
    pub kernel: KernelMatrix,
    pub phenotype: Phenotype,
}

pub fn instance(seed: u64, n: usize, m: usize, h2: f64, covariates: usize) -> Instance {
    let mut r = rng(seed);
    let x = markers(&mut r, n, m);
    let b = DVector::from_fn(m, |_, _| normal(&mut r) / (m as f64).sqrt());
    let g = &x * b;
    let vg = g.variance().max(1e-12);
    let ve = vg * (1.0 - h2) / h2;
    let cov = DMatrix::from_fn(n, covariates, |_, _| normal(&mut r));
    let y = DVector::from_fn(n, |i, _| {
        3.0 + g[i] + ve.sqrt() * normal(&mut r) + (0..covariates).map(|c| 0.5 * cov[(i, c)]).sum::<f64>()
    });
    let names = (0..covariates).map(|c| format!("cov{c}")).collect();
    let phenotype = Phenotype::new(y, (0..n).collect(), n, cov, names).unwrap();
    Instance {
        kernel: linear_kernel(&x).unwrap(),
        markers: x,
        phenotype,
    }
}

/// `Z K Z'` by explicit incidence.
pub fn expand(k: &DMatrix<f64>, line_index: &[usize]) -> DMatrix<f64> {
    let n = line_index.len();
    let z = DMatrix::from_fn(n, k.nrows(), |i, j| if line_index[i] == j { 1.0 } else { 0.0 });
    &z * k * z.transpose()
}

pub fn dense_v(hs: &[DMatrix<f64>], lambdas: &[f64]) -> DMatrix<f64> {
    let n = hs[0].nrows();
    let mut v = DMatrix::identity(n, n);
    for (h, l) in hs.iter().zip(lambdas) {
        v += h * *l;
    }
    v
}

/// Twice the log-likelihood with an explicit determinant and inverse.
pub fn naive_loglik(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    hs: &[DMatrix<f64>],
    beta: &DVector<f64>,
    s2: f64,
    lambdas: &[f64],
) -> f64 {
    let n = y.len() as f64;
    let v = dense_v(hs, lambdas);
    let det = v.clone().lu().determinant();
    let vinv = v.try_inverse().unwrap();
    let r = y - x * beta;
    -n * s2.ln() - det.ln() - (r.transpose() * vinv * &r)[0] / s2
}

/// GLS estimate and twice the restricted log-likelihood.
pub fn naive_reml(y: &DVector<f64>, x: &DMatrix<f64>, hs: &[DMatrix<f64>], s2: f64, lambdas: &[f64]) -> f64 {
    let n = y.len() as f64;
    let p = x.ncols() as f64;
    let v = dense_v(hs, lambdas);
    let det = v.clone().lu().determinant();
    let vinv = v.try_inverse().unwrap();
    let a = x.transpose() * &vinv * x;
    let beta = a.clone().try_inverse().unwrap() * x.transpose() * &vinv * y;
    let r = y - x * beta;
    -(n - p) * s2.ln() - det.ln() - a.determinant().ln() - (r.transpose() * vinv * &r)[0] / s2
}

/// REML criterion with `sigma_e2` profiled, by dense algebra.
pub fn naive_profiled_reml(y: &DVector<f64>, x: &DMatrix<f64>, h: &DMatrix<f64>, lambda: f64) -> f64 {
    let n = y.len() as f64;
    let p = x.ncols() as f64;
    let v = dense_v(std::slice::from_ref(h), &[lambda]);
    let vinv = v.try_inverse().unwrap();
    let a = x.transpose() * &vinv * x;
    let beta = a.try_inverse().unwrap() * x.transpose() * &vinv * y;
    let r = y - x * beta;
    let s2 = (r.transpose() * &vinv * &r)[0] / (n - p);
    naive_reml(y, x, std::slice::from_ref(h), s2, &[lambda])
}

/// Golden-section maximization on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Brute-force maximizer of the profiled REML criterion: grid over
/// `{0, 0.01, ..., 10}` (extended to 100 when the best point is 10), then
/// golden section between the neighbours of the best grid point.
pub fn brute_force_lambda(y: &DVector<f64>, x: &DMatrix<f64>, h: &DMatrix<f64>) -> (f64, f64) {
    let f = |l: f64| naive_profiled_reml(y, x, h, l);
    let mut grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
    let mut best = argmax(&grid, &f);
    if best == grid.len() - 1 {
        grid = (0..=1000).map(|i| 10.0 + i as f64 * 0.09).collect();
        best = argmax(&grid, &f);
    }
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let l = golden_max(f, lo, hi, 1e-9);
    let candidates = [l, grid[best], 0.0];
    let top = candidates
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |acc, c| {
            let v = f(c);
            if v > acc.1 {
                (c, v)
            } else {
                acc
            }
        });
    top
}

fn argmax(grid: &[f64], f: &impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    let mut bv = f64::NEG_INFINITY;
    for (i, &g) in grid.iter().enumerate() {
        let v = f(g);
        if v > bv {
            bv = v;
            best = i;
        }
    }
    best
}

/// Panel over `x` with `chromosomes` equal blocks of markers spaced 1 cM apart.
pub fn panel(x: &DMatrix<f64>, chromosomes: usize) -> locepi::genome::MarkerPanel {
    let (n, m) = x.shape();
    let per = m / chromosomes;
    let ids: Vec<String> = (0..m).map(|j| format!("m{j:04}")).collect();
    let map: Vec<(String, u32, f64)> = ids
        .iter()
        .enumerate()
        .map(|(j, id)| (id.clone(), (j / per).min(chromosomes - 1) as u32 + 1, (j % per) as f64))
        .collect();
    locepi::genome::MarkerPanel::new(
        (0..n).map(|i| format!("L{i:04}")).collect(),
        ids,
        x.clone(),
        &map,
        Default::default(),
    )
    .unwrap()
}

/// Kendall rank correlation (tau-a) by counting pairs.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += ((a[i] - a[j]) * (b[i] - b[j])).signum();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

pub fn pearson(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let (ma, mb) = (a.mean(), b.mean());
    let ca = a.add_scalar(-ma);
    let cb = b.add_scalar(-mb);
    ca.dot(&cb) / (ca.norm() * cb.norm())
}
