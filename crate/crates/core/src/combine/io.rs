use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::lasso::CombinedModel;
use crate::error::{Error, Result};

/// Per-region summary of lasso coefficients across replicate fits.
#[derive(Debug, Clone, PartialEq)]
pub struct Importance {
    pub region_id: String,
    pub level: usize,
    /// Mean `|alpha|` on the standardized scale, counting absent fits as 0.
    pub mean_abs_alpha: f64,
    pub selection_frequency: f64,
}

/// Aggregate replicate models by region id.
pub fn importance_scores(models: &[CombinedModel]) -> Vec<Importance> {
    let mut acc: BTreeMap<(usize, String), (f64, usize)> = BTreeMap::new();
    for m in models {
        for (k, id) in m.region_ids.iter().enumerate() {
            let e = acc.entry((m.levels[k], id.clone())).or_insert((0.0, 0));
            e.0 += m.alpha_std[k].abs();
            if m.alpha_std[k] != 0.0 {
                e.1 += 1;
            }
        }
    }
    let r = models.len().max(1) as f64;
    acc.into_iter()
        .map(|((level, region_id), (sum, hits))| Importance {
            region_id,
            level,
            mean_abs_alpha: sum / r,
            selection_frequency: hits as f64 / r,
        })
        .collect()
}

/// `region_id,level,mean_abs_alpha,selection_frequency` rows.
pub fn write_importance(path: impl AsRef<Path>, rows: &[Importance]) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "region_id,level,mean_abs_alpha,selection_frequency").map_err(io)?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.region_id, r.level, r.mean_abs_alpha, r.selection_frequency).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Model file as TOML; floats are written in shortest round-trip form.
pub fn save_model(path: impl AsRef<Path>, model: &CombinedModel) -> Result<()> {
    let path = path.as_ref();
    let text = toml::to_string(model).map_err(|e| Error::Invalid(format!("cannot serialize model: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CombinedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.span().map(|s| text[..s.start].lines().count()).unwrap_or(0),
        msg: e.message().to_string(),
    })
}
