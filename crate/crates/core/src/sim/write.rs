use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::SimTruth;
use crate::error::{Error, Result};
use crate::genome::{write_map, write_markers, write_phenotype, MarkerPanel, Phenotype};

/// `chromosome,cM,marker_id,effect` rows.
pub fn write_truth(path: impl AsRef<Path>, truth: &SimTruth) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "chromosome,cM,marker_id,effect").map_err(io)?;
    for q in &truth.qtl {
        writeln!(w, "{},{},{},{}", q.chromosome, q.position_cm, q.marker_id, q.effect).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `markers.csv`, `map.csv`, `phenotype.csv` and `truth.csv` in `dir`.
pub fn write_simulation(dir: impl AsRef<Path>, panel: &MarkerPanel, phenotype: &Phenotype, truth: &SimTruth) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_markers(dir.join("markers.csv"), panel)?;
    write_map(dir.join("map.csv"), panel)?;
    write_phenotype(dir.join("phenotype.csv"), panel, phenotype)?;
    write_truth(dir.join("truth.csv"), truth)
}
