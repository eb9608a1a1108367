use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::FitResult;
use crate::error::{Error, Result};

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Key-value report, one `[fit.<label>]` section per fit.
pub fn write_fit_report(path: impl AsRef<Path>, fits: &[(String, FitResult)]) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for (label, fit) in fits {
        writeln!(w, "[fit.{label}]").map_err(io)?;
        writeln!(w, "method = {}", fit.method).map_err(io)?;
        writeln!(w, "structure = {:?}", fit.structure).map_err(io)?;
        writeln!(w, "kernels = {}", fit.sources.join(",")).map_err(io)?;
        writeln!(w, "sigma_g2 = {}", join(&fit.sigma_g2)).map_err(io)?;
        writeln!(w, "sigma_e2 = {}", fit.sigma_e2).map_err(io)?;
        writeln!(w, "lambda = {}", join(&fit.lambda)).map_err(io)?;
        writeln!(w, "h2 = {}", join(&fit.heritabilities)).map_err(io)?;
        writeln!(w, "residual_share = {}", fit.residual_share()).map_err(io)?;
        writeln!(w, "beta = {}", join(&fit.beta)).map_err(io)?;
        writeln!(w, "loglik = {}", fit.loglik).map_err(io)?;
        writeln!(w, "reml_loglik = {}", fit.reml_loglik).map_err(io)?;
        writeln!(w, "iterations = {}", fit.iterations).map_err(io)?;
        writeln!(w, "converged = {}", fit.converged).map_err(io)?;
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Delimited EBLUP matrix: one row per line, one column per region.
pub fn write_eblups(
    path: impl AsRef<Path>,
    line_ids: &[String],
    region_ids: &[String],
    eblups: &DMatrix<f64>,
) -> Result<()> {
    let path = path.as_ref();
    if eblups.nrows() != line_ids.len() || eblups.ncols() != region_ids.len() {
        return Err(Error::Dimension(format!(
            "EBLUP matrix is {}x{} for {} lines and {} regions",
            eblups.nrows(),
            eblups.ncols(),
            line_ids.len(),
            region_ids.len()
        )));
    }
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write!(w, "line_id").map_err(io)?;
    for r in region_ids {
        write!(w, ",{r}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, id) in line_ids.iter().enumerate() {
        write!(w, "{id}").map_err(io)?;
        for j in 0..eblups.ncols() {
            write!(w, ",{}", eblups[(i, j)]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
