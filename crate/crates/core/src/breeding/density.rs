use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::genome::{MarkerPanel, Region};

/// Mean, over the region's markers, of the population frequency of the
/// allele each line carries. Values near 1 mean the line carries common
/// alleles; rare alleles pull the value down.
pub fn region_density(panel: &MarkerPanel, region: &Region) -> Result<Vec<f64>> {
    if let Some(&bad) = region.marker_indices.iter().find(|&&c| c >= panel.n_markers()) {
        return Err(Error::Invalid(format!(
            "region {} refers to marker column {bad} of {}",
            region.id,
            panel.n_markers()
        )));
    }
    let m = panel.markers();
    let n = panel.n_lines();
    let mut out = vec![0.0; n];
    let mut polymorphic = false;
    for &c in &region.marker_indices {
        let dose: Vec<f64> = m.column(c).iter().map(|x| ((x + 1.0) / 2.0).clamp(0.0, 1.0)).collect();
        let f = dose.iter().sum::<f64>() / n as f64;
        if f > 0.0 && f < 1.0 {
            polymorphic = true;
        }
        for (o, t) in out.iter_mut().zip(&dose) {
            *o += t * f + (1.0 - t) * (1.0 - f);
        }
    }
    if !polymorphic {
        log::warn!("region {} is monomorphic; densities set to 1", region.id);
    }
    let k = region.len() as f64;
    Ok(out.into_iter().map(|v| (v / k).clamp(0.0, 1.0)).collect())
}

/// Lines by regions matrix of [`region_density`].
pub fn region_densities(panel: &MarkerPanel, regions: &[&Region]) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(panel.n_lines(), regions.len());
    for (j, r) in regions.iter().enumerate() {
        let d = region_density(panel, r)?;
        out.set_column(j, &nalgebra::DVector::from_vec(d));
    }
    Ok(out)
}
