use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::cross::CrossDistribution;
use crate::error::{Error, Result};

/// `line_id,jannink_index,preference_index,rank` rows; rank 1 is the
/// highest preference index.
pub fn write_selection(
    path: impl AsRef<Path>,
    line_ids: &[String],
    jannink: &[f64],
    preference: &[f64],
) -> Result<()> {
    let path = path.as_ref();
    if jannink.len() != line_ids.len() || preference.len() != line_ids.len() {
        return Err(Error::Dimension("index lengths differ from line count".into()));
    }
    let mut order: Vec<usize> = (0..line_ids.len()).collect();
    order.sort_by(|&a, &b| preference[b].total_cmp(&preference[a]).then(a.cmp(&b)));
    let mut rank = vec![0; line_ids.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "line_id,jannink_index,preference_index,rank").map_err(io)?;
    for i in 0..line_ids.len() {
        writeln!(w, "{},{:?},{:?},{}", line_ids[i], jannink[i], preference[i], rank[i]).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `parent_a,parent_b,mean,var,q05,q50,q95` rows.
pub fn write_crosses(path: impl AsRef<Path>, crosses: &[CrossDistribution]) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "parent_a,parent_b,mean,var,q05,q50,q95").map_err(io)?;
    for c in crosses {
        let s = c.summary;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.parent_ids.0, c.parent_ids.1, s.mean, s.variance, s.q05, s.q50, s.q95
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Raw progeny values, `parent_a,parent_b,value` rows.
pub fn write_cross_samples(path: impl AsRef<Path>, crosses: &[CrossDistribution]) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "parent_a,parent_b,value").map_err(io)?;
    for c in crosses {
        for v in &c.samples {
            writeln!(w, "{},{},{}", c.parent_ids.0, c.parent_ids.1, v).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
