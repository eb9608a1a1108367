use serde::Serialize;

use crate::error::{Error, Result};
use crate::spmm::{fit_joint_from, fit_single, objective_at, FitResult, Method, MixedModelSpec};

/// Outcome of a likelihood-ratio test for one variance component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrtResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Weights on chi-square(0) and chi-square(1).
    pub mixture: (f64, f64),
    pub method: Method,
}

/// Null mixture weights: equal for REML, 0.65/0.35 for ML.
pub fn mixture_weights(method: Method) -> (f64, f64) {
    match method {
        Method::Reml => (0.5, 0.5),
        Method::Ml => (0.65, 0.35),
    }
}

/// Upper-tail probability of `statistic` under the boundary mixture.
pub fn mixture_p_value(statistic: f64, mixture: (f64, f64)) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    (mixture.1 * crate::stats::chi2_1_sf(statistic)).clamp(0.0, 1.0)
}

/// Test `lambda_target = 0` against `lambda_target > 0`.
///
/// `spec` holds the target kernel first, optionally followed by one
/// background kernel that is present under both hypotheses. Returns the test
/// together with the fit under the alternative.
pub fn lrt_variance(spec: &MixedModelSpec<'_>, method: Method) -> Result<(LrtResult, FitResult)> {
    let k = spec.kernels().len();
    let (null, alt) = match k {
        1 => {
            let null = objective_at(spec, &[0.0], method)?;
            (null, fit_single(spec, method)?)
        }
        2 => {
            let background = spec.with_kernels(vec![spec.kernels()[1]])?;
            let null_fit = fit_single(&background, method)?;
            let alt = fit_joint_from(spec, method, &[0.0, null_fit.lambda[0]])?;
            (null_fit.objective(), alt)
        }
        _ => {
            return Err(Error::Invalid(format!(
                "a variance test takes a target and at most one background kernel, got {k} kernels"
            )))
        }
    };
    let diff = alt.objective() - null;
    if diff < -1e-6 {
        return Err(Error::Numerical(format!(
            "alternative likelihood {} is below the null {null}",
            alt.objective()
        )));
    }
    let statistic = diff.max(0.0);
    let mixture = mixture_weights(method);
    Ok((
        LrtResult {
            statistic,
            p_value: mixture_p_value(statistic, mixture),
            mixture,
            method,
        },
        alt,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_and_critical_value() {
        assert_eq!(mixture_p_value(0.0, (0.5, 0.5)), 1.0);
        assert!((mixture_p_value(2.705543454095404, (0.5, 0.5)) - 0.05).abs() < 1e-9);
        assert!(mixture_p_value(3.0, (0.65, 0.35)) < mixture_p_value(2.0, (0.65, 0.35)));
    }
}
