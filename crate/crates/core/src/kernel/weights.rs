use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMethod {
    Heritability,
    Marginal,
    PerKernel,
    QiuR2,
    QiuMse,
    Alignment,
    Fixed,
}

/// Non-negative kernel weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    weights: Vec<f64>,
    method: WeightMethod,
}

impl KernelWeights {
    /// Validate weights that are already normalized.
    pub fn new(weights: Vec<f64>, method: WeightMethod) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid("at least one kernel weight required".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Invalid(format!("kernel weights must be >= 0: {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("kernel weights sum to {sum}, not 1")));
        }
        Ok(KernelWeights { weights, method })
    }

    /// Normalize non-negative scores into weights.
    pub fn from_scores(scores: &[f64], method: WeightMethod) -> Result<Self> {
        if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Invalid(format!("scores must be finite and >= 0: {scores:?}")));
        }
        let sum: f64 = scores.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Invalid("scores are all zero".into()));
        }
        KernelWeights::new(scores.iter().map(|s| s / sum).collect(), method)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn method(&self) -> WeightMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Squared correlations between response and per-kernel predictions.
    R2,
    /// Per-kernel mean squared errors.
    Mse,
}

/// Heuristic weights from per-kernel prediction scores.
///
/// `R2`: `r2_m / sum(r2)`. `Mse`: `(sum(M) - M_m) / ((p - 1) sum(M))`, which
/// gives lower-error kernels more weight and sums to one.
pub fn qiu_weights(scores: &[f64], kind: ScoreKind) -> Result<KernelWeights> {
    match kind {
        ScoreKind::R2 => {
            if scores.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(Error::Invalid(format!("r^2 scores must lie in [0, 1]: {scores:?}")));
            }
            KernelWeights::from_scores(scores, WeightMethod::QiuR2)
        }
        ScoreKind::Mse => {
            let p = scores.len();
            if p < 2 {
                return Err(Error::Invalid("MSE weights need at least two kernels".into()));
            }
            if scores.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                return Err(Error::Invalid(format!("MSE scores must be > 0: {scores:?}")));
            }
            let total: f64 = scores.iter().sum();
            let denom = (p - 1) as f64 * total;
            let w: Vec<f64> = scores.iter().map(|m| (total - m) / denom).collect();
            let sum: f64 = w.iter().sum();
            // renormalize away rounding so the sum-to-one check holds exactly
            KernelWeights::new(w.into_iter().map(|v| v / sum).collect(), WeightMethod::QiuMse)
        }
    }
}
