use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::optimize::maximize_ratio;
use super::spectral::{Profile, SpectralModel};
use super::{FitResult, Method, MixedModelSpec, Structure};
use crate::error::{Error, Result};
use crate::kernel::{KernelMatrix, KernelWeights, WeightMethod};

const MAX_SWEEPS: usize = 200;
const SWEEP_TOL: f64 = 1e-8;

/// Spectral model for kernel `j` with every other kernel held at `lambdas`.
fn model_for(
    spec: &MixedModelSpec<'_>,
    h: &[DMatrix<f64>],
    lambdas: &[f64],
    j: usize,
) -> Result<SpectralModel> {
    let y = spec.y();
    let x = spec.design();
    if h.len() == 1 {
        return Ok(SpectralModel::single(&h[0], y, x));
    }
    let n = spec.n_obs();
    let mut base = DMatrix::identity(n, n);
    for (l, hl) in h.iter().enumerate() {
        if l != j && lambdas[l] > 0.0 {
            base += hl * lambdas[l];
        }
    }
    SpectralModel::whitened(&base, &h[j], y, x)
}

fn expanded_all(spec: &MixedModelSpec<'_>) -> Vec<DMatrix<f64>> {
    (0..spec.kernels().len()).map(|j| spec.expanded(j)).collect()
}

fn check_lambdas(spec: &MixedModelSpec<'_>, lambdas: &[f64]) -> Result<()> {
    if lambdas.len() != spec.kernels().len() {
        return Err(Error::Dimension(format!(
            "{} variance ratios for {} kernels",
            lambdas.len(),
            spec.kernels().len()
        )));
    }
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::Invalid(format!("variance ratios must be >= 0: {lambdas:?}")));
    }
    Ok(())
}

/// Twice the log-likelihood at the given parameters, constants dropped.
pub fn loglik(spec: &MixedModelSpec<'_>, beta: &[f64], sigma_e2: f64, lambdas: &[f64]) -> Result<f64> {
    check_lambdas(spec, lambdas)?;
    if !(sigma_e2 > 0.0) {
        return Err(Error::Invalid(format!("residual variance must be > 0, got {sigma_e2}")));
    }
    if beta.len() != spec.design().ncols() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} design columns",
            beta.len(),
            spec.design().ncols()
        )));
    }
    let h = expanded_all(spec);
    let model = model_for(spec, &h, lambdas, 0)?;
    Ok(model.loglik_at(&DVector::from_column_slice(beta), sigma_e2, lambdas[0]))
}

/// Twice the restricted log-likelihood at the given variance parameters, with
/// `beta` replaced by its GLS estimate.
pub fn reml_loglik(spec: &MixedModelSpec<'_>, sigma_e2: f64, lambdas: &[f64]) -> Result<f64> {
    check_lambdas(spec, lambdas)?;
    if !(sigma_e2 > 0.0) {
        return Err(Error::Invalid(format!("residual variance must be > 0, got {sigma_e2}")));
    }
    spec.check_design()?;
    let h = expanded_all(spec);
    let model = model_for(spec, &h, lambdas, 0)?;
    model.reml_at(sigma_e2, lambdas[0])
}

/// The profiled criterion (`beta` and `sigma_e2` at their optima) at fixed
/// variance ratios.
pub fn objective_at(spec: &MixedModelSpec<'_>, lambdas: &[f64], method: Method) -> Result<f64> {
    check_lambdas(spec, lambdas)?;
    spec.check_design()?;
    let h = expanded_all(spec);
    let model = model_for(spec, &h, lambdas, 0)?;
    Ok(model.profile(lambdas[0], method)?.objective(method))
}

fn degenerate(model: &SpectralModel, y: &DVector<f64>) -> Result<Option<Profile>> {
    let p0 = model.profile(0.0, Method::Ml)?;
    let rss = p0.sigma_e2 * model.n() as f64;
    if rss <= 1e-20 * y.norm_squared().max(f64::MIN_POSITIVE) {
        log::warn!("phenotype is fitted exactly by the fixed effects; variance ratios set to 0");
        Ok(Some(p0))
    } else {
        Ok(None)
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    spec: &MixedModelSpec<'_>,
    method: Method,
    structure: Structure,
    lambdas: Vec<f64>,
    model: &SpectralModel,
    profile: &Profile,
    lambda_model: f64,
    iterations: usize,
    converged: bool,
) -> FitResult {
    let vinv_r = model.vinv_residual(profile, lambda_model);
    let zt = spec.to_lines(&vinv_r);
    let q = spec.phenotype().n_lines();
    let k = lambdas.len();
    let mut weights = DMatrix::zeros(q, k);
    let mut eblups = DMatrix::zeros(q, k);
    for j in 0..k {
        let a = &zt * lambdas[j];
        let g = spec.kernels()[j].values() * &a;
        weights.set_column(j, &a);
        eblups.set_column(j, &g);
    }
    let total: f64 = lambdas.iter().sum();
    FitResult {
        method,
        structure,
        sources: spec.kernels().iter().map(|k| k.source().to_string()).collect(),
        sigma_g2: lambdas.iter().map(|l| l * profile.sigma_e2).collect(),
        sigma_e2: profile.sigma_e2,
        heritabilities: lambdas.iter().map(|l| l / (1.0 + total)).collect(),
        lambda: lambdas,
        beta: profile.beta.iter().copied().collect(),
        eblups,
        blup_weights: weights,
        loglik: profile.loglik,
        reml_loglik: profile.reml_loglik,
        iterations,
        converged,
    }
}

/// Estimates with the variance ratios held at `lambdas`; `beta` and
/// `sigma_e2` are profiled and EBLUPs computed as for a fitted model.
pub fn fit_fixed(spec: &MixedModelSpec<'_>, lambdas: &[f64], method: Method) -> Result<FitResult> {
    check_lambdas(spec, lambdas)?;
    spec.check_design()?;
    let h = expanded_all(spec);
    let model = model_for(spec, &h, lambdas, 0)?;
    let profile = model.profile(lambdas[0], method)?;
    let structure = if lambdas.len() == 1 { Structure::PerKernel } else { Structure::Joint };
    Ok(assemble(spec, method, structure, lambdas.to_vec(), &model, &profile, lambdas[0], 0, true))
}

/// Fit a single-kernel model through one eigendecomposition of `Z K Z'`.
pub fn fit_single(spec: &MixedModelSpec<'_>, method: Method) -> Result<FitResult> {
    if spec.kernels().len() != 1 {
        return Err(Error::Invalid(format!(
            "fit_single needs exactly one kernel, got {}",
            spec.kernels().len()
        )));
    }
    spec.check_design()?;
    let h = spec.expanded(0);
    let model = SpectralModel::single(&h, spec.y(), spec.design());
    if let Some(p0) = degenerate(&model, spec.y())? {
        let p = model.profile(0.0, method).unwrap_or(p0);
        return Ok(assemble(spec, method, Structure::PerKernel, vec![0.0], &model, &p, 0.0, 0, true));
    }
    let opt = maximize_ratio(|l| model.profile(l, method).map(|p| p.objective(method)))?;
    let profile = model.profile(opt.x, method)?;
    Ok(assemble(spec, method, Structure::PerKernel, vec![opt.x], &model, &profile, opt.x, 1, true))
}

/// Fit all kernels jointly, starting from zero variance ratios.
pub fn fit_joint(spec: &MixedModelSpec<'_>, method: Method) -> Result<FitResult> {
    fit_joint_from(spec, method, &vec![0.0; spec.kernels().len()])
}

/// Coordinate-wise maximization over the variance ratios, starting at `init`.
///
/// Each coordinate update is an exact one-dimensional search with the other
/// kernels absorbed into a fixed covariance, so the objective never
/// decreases. Sweeps stop when the objective changes by less than `1e-8`
/// relative, or after 200 sweeps with `converged = false`.
pub fn fit_joint_from(spec: &MixedModelSpec<'_>, method: Method, init: &[f64]) -> Result<FitResult> {
    let k = spec.kernels().len();
    if k == 1 {
        let mut fit = fit_single(spec, method)?;
        fit.structure = Structure::Joint;
        return Ok(fit);
    }
    check_lambdas(spec, init)?;
    spec.check_design()?;
    let n = spec.n_obs();
    if k > n / 2 {
        log::warn!("{k} kernels for {n} observations; consider separate per-kernel fits");
    }
    let h = expanded_all(spec);
    let mut lambdas = init.to_vec();
    {
        let model = model_for(spec, &h, &lambdas, 0)?;
        if let Some(p0) = degenerate(&model, spec.y())? {
            let zero = vec![0.0; k];
            let p = model.profile(0.0, method).unwrap_or(p0);
            return Ok(assemble(spec, method, Structure::Joint, zero, &model, &p, 0.0, 0, true));
        }
    }
    let mut current = {
        let model = model_for(spec, &h, &lambdas, 0)?;
        model.profile(lambdas[0], method)?.objective(method)
    };
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let start = current;
        for j in 0..k {
            let model = model_for(spec, &h, &lambdas, j)?;
            let here = model.profile(lambdas[j], method)?.objective(method);
            let opt = maximize_ratio(|l| model.profile(l, method).map(|p| p.objective(method)))?;
            if opt.value > here {
                lambdas[j] = opt.x;
                current = opt.value;
            } else {
                current = here;
            }
        }
        if (current - start).abs() <= SWEEP_TOL * start.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("joint fit stopped after {MAX_SWEEPS} sweeps without converging");
    }
    let model = model_for(spec, &h, &lambdas, 0)?;
    let profile = model.profile(lambdas[0], method)?;
    let l0 = lambdas[0];
    Ok(assemble(spec, method, Structure::Joint, lambdas, &model, &profile, l0, sweeps, converged))
}

/// Fit a target kernel against a background kernel built from the markers
/// outside the target region. The spec must hold `[target, background]`.
pub fn fit_marginal(spec: &MixedModelSpec<'_>, method: Method) -> Result<FitResult> {
    if spec.kernels().len() != 2 {
        return Err(Error::Invalid(format!(
            "a marginal fit takes a target and a background kernel, got {} kernels",
            spec.kernels().len()
        )));
    }
    let mut fit = fit_joint(spec, method)?;
    fit.structure = Structure::Marginal;
    Ok(fit)
}

/// One single-kernel fit per kernel, optionally with per-line principal
/// components appended to the fixed effects.
pub fn fit_per_kernel(
    spec: &MixedModelSpec<'_>,
    method: Method,
    pcs: Option<&DMatrix<f64>>,
) -> Result<Vec<FitResult>> {
    let base = match pcs {
        Some(pc) if pc.ncols() > 0 => {
            let p = spec.design().ncols();
            if pc.ncols() + p >= spec.n_obs() {
                return Err(Error::Invalid(format!(
                    "{} principal components are too many for {} observations",
                    pc.ncols(),
                    spec.n_obs()
                )));
            }
            spec.clone().with_extra_fixed(pc)?
        }
        _ => spec.clone(),
    };
    spec.kernels()
        .par_iter()
        .map(|k| {
            let single = base.with_kernels(vec![*k])?;
            fit_single(&single, method)
        })
        .collect()
}

/// Kernel weights proportional to heritability. Each fit contributes its
/// first heritability, which for a marginal fit is the target kernel's.
pub fn heritability_weights(fits: &[FitResult]) -> Result<KernelWeights> {
    if fits.is_empty() {
        return Err(Error::Invalid("no fits to weight".into()));
    }
    let h: Vec<f64> = fits.iter().map(|f| f.heritabilities[0]).collect();
    if h.iter().all(|v| *v <= 0.0) {
        return Err(Error::NoGeneticSignal);
    }
    KernelWeights::from_scores(&h, WeightMethod::Heritability)
}

/// Largest gain in the objective from moving any single variance ratio by
/// `step` (clamped at zero). A value at or below zero certifies a
/// coordinate-wise local optimum.
pub fn optimality_gap(spec: &MixedModelSpec<'_>, fit: &FitResult, step: f64) -> Result<f64> {
    check_lambdas(spec, &fit.lambda)?;
    let h = expanded_all(spec);
    let objective = |lambdas: &[f64]| -> Result<f64> {
        let model = model_for(spec, &h, lambdas, 0)?;
        Ok(model.profile(lambdas[0], fit.method)?.objective(fit.method))
    };
    let base = objective(&fit.lambda)?;
    let mut gap = f64::NEG_INFINITY;
    for j in 0..fit.lambda.len() {
        for delta in [-step, step] {
            let mut l = fit.lambda.clone();
            l[j] = (l[j] + delta).max(0.0);
            if l[j] == fit.lambda[j] {
                continue;
            }
            gap = gap.max(objective(&l)? - base);
        }
    }
    Ok(gap)
}

/// Predictions for new lines: `X_new beta + sum_j K_j(new, train) a_j`.
///
/// `kernels` must be the fitted kernels in order; `train_markers` is the full
/// marker matrix they were built from and `new_markers` uses the same columns.
pub fn predict(
    fit: &FitResult,
    kernels: &[&KernelMatrix],
    train_markers: &DMatrix<f64>,
    new_markers: &DMatrix<f64>,
    new_design: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    if kernels.len() != fit.lambda.len() {
        return Err(Error::Dimension(format!(
            "{} kernels for a fit with {}",
            kernels.len(),
            fit.lambda.len()
        )));
    }
    if new_markers.ncols() != train_markers.ncols() {
        return Err(Error::Dimension(format!(
            "new lines have {} markers, training lines {}",
            new_markers.ncols(),
            train_markers.ncols()
        )));
    }
    if new_design.ncols() != fit.beta.len() || new_design.nrows() != new_markers.nrows() {
        return Err(Error::Dimension(format!(
            "design is {}x{}, expected {}x{}",
            new_design.nrows(),
            new_design.ncols(),
            new_markers.nrows(),
            fit.beta.len()
        )));
    }
    let mut out = new_design * DVector::from_column_slice(&fit.beta);
    for (j, k) in kernels.iter().enumerate() {
        if fit.lambda[j] == 0.0 {
            continue;
        }
        let cross = k.recipe().cross(train_markers, new_markers)?;
        out += cross * fit.blup_weights.column(j);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::Phenotype;
    use crate::kernel::linear_kernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, m: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, m, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        let b = DVector::from_fn(m, |_, _| rng.random::<f64>() - 0.5);
        let y = &x * b + DVector::from_fn(n, |_, _| 6.0 * (rng.random::<f64>() - 0.5));
        (x, y)
    }

    #[test]
    fn exact_fixed_effect_fit_gives_zero_ratio() {
        let (x, _) = toy(20, 10, 1);
        let k = linear_kernel(&x).unwrap();
        let ph = Phenotype::from_line_values(DVector::from_element(20, 3.0));
        let spec = MixedModelSpec::new(&ph, vec![&k]).unwrap();
        let fit = fit_single(&spec, Method::Reml).unwrap();
        assert_eq!(fit.lambda, vec![0.0]);
        assert_eq!(fit.heritabilities, vec![0.0]);
    }

    #[test]
    fn joint_with_one_kernel_is_single() {
        let (x, y) = toy(30, 40, 2);
        let k = linear_kernel(&x).unwrap();
        let ph = Phenotype::from_line_values(y);
        let spec = MixedModelSpec::new(&ph, vec![&k]).unwrap();
        let a = fit_single(&spec, Method::Reml).unwrap();
        let b = fit_joint(&spec, Method::Reml).unwrap();
        assert!((a.lambda[0] - b.lambda[0]).abs() < 1e-8);
        assert!((a.reml_loglik - b.reml_loglik).abs() < 1e-8);
    }

    #[test]
    fn identical_kernels_share_the_variance() {
        let (x, y) = toy(40, 60, 3);
        let k = linear_kernel(&x).unwrap();
        let ph = Phenotype::from_line_values(y);
        let one = MixedModelSpec::new(&ph, vec![&k]).unwrap();
        let two = MixedModelSpec::new(&ph, vec![&k, &k]).unwrap();
        let a = fit_single(&one, Method::Reml).unwrap();
        let b = fit_joint(&two, Method::Reml).unwrap();
        let sum: f64 = b.sigma_g2.iter().sum();
        assert!((sum - a.sigma_g2[0]).abs() < 1e-4, "{sum} vs {}", a.sigma_g2[0]);
    }

    #[test]
    fn heritability_weight_normalization() {
        let mk = |h: f64| FitResult {
            method: Method::Reml,
            structure: Structure::PerKernel,
            sources: vec![],
            sigma_g2: vec![],
            sigma_e2: 1.0,
            lambda: vec![],
            beta: vec![],
            eblups: DMatrix::zeros(0, 0),
            blup_weights: DMatrix::zeros(0, 0),
            loglik: 0.0,
            reml_loglik: 0.0,
            heritabilities: vec![h],
            iterations: 0,
            converged: true,
        };
        let w = heritability_weights(&[mk(0.1), mk(0.3)]).unwrap();
        assert!((w.weights()[0] - 0.25).abs() < 1e-12);
        assert!((w.weights()[1] - 0.75).abs() < 1e-12);
        assert_eq!(heritability_weights(&[mk(0.75)]).unwrap().weights(), &[1.0]);
        assert!(matches!(heritability_weights(&[mk(0.0)]), Err(Error::NoGeneticSignal)));
    }
}
