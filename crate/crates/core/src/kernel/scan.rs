use super::functions::{marker_kernel, KernelFunction};
use super::matrix::KernelMatrix;
use crate::error::{Error, Result};
use crate::genome::MarkerPanel;

/// Locality weights `s_k` for every panel column: `exp(-d^2 / bandwidth)` with
/// `d` the cM distance to `center` on the same chromosome, and zero for
/// markers on other chromosomes or unmapped.
pub fn scan_weights(panel: &MarkerPanel, center: usize, bandwidth: f64) -> Result<Vec<f64>> {
    if center >= panel.n_markers() {
        return Err(Error::Invalid(format!("scan center {center} out of range")));
    }
    let c = panel.map().entry(center);
    if !c.mapped {
        return Err(Error::Invalid(format!("scan center {} is unmapped", c.marker_id)));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::Invalid(format!("scan bandwidth must be > 0, got {bandwidth}")));
    }
    Ok(panel
        .map()
        .entries()
        .iter()
        .map(|e| {
            if e.mapped && e.chromosome == c.chromosome {
                let d = e.position - c.position;
                (-d * d / bandwidth).exp()
            } else {
                0.0
            }
        })
        .collect())
}

/// Local kernel at marker `center` built from `diag(s_k)^{1/2} M`.
///
/// Columns with zero weight are dropped, and inner products are divided by the
/// total weight `sum(s_k)` (the effective marker count).
pub fn kernel_scan(
    panel: &MarkerPanel,
    center: usize,
    bandwidth: f64,
    function: KernelFunction,
) -> Result<KernelMatrix> {
    let s = scan_weights(panel, center, bandwidth)?;
    let columns: Vec<usize> = (0..s.len()).filter(|&j| s[j] > 0.0).collect();
    if columns.len() == 1 {
        log::warn!(
            "scan at {}: bandwidth {bandwidth} leaves a single weighted marker",
            panel.marker_id(center)
        );
    }
    let root_weights: Vec<f64> = columns.iter().map(|&j| s[j].sqrt()).collect();
    let total: f64 = columns.iter().map(|&j| s[j]).sum();
    marker_kernel(
        panel.markers(),
        &columns,
        Some(&root_weights),
        total,
        function,
        format!("scan@{}", panel.marker_id(center)),
    )
}
