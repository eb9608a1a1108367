use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::matrix::KernelMatrix;
use super::shrink::Edge;
use crate::error::{Error, Result};

/// Square delimited matrix with a line-id header row and column.
pub fn write_kernel(path: impl AsRef<Path>, kernel: &KernelMatrix, line_ids: &[String]) -> Result<()> {
    let path = path.as_ref();
    if line_ids.len() != kernel.dim() {
        return Err(Error::Dimension(format!(
            "{} line ids for a {}-line kernel",
            line_ids.len(),
            kernel.dim()
        )));
    }
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write!(w, "line_id").map_err(io)?;
    for id in line_ids {
        write!(w, ",{id}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, id) in line_ids.iter().enumerate() {
        write!(w, "{id}").map_err(io)?;
        for j in 0..kernel.dim() {
            write!(w, ",{}", kernel.values()[(i, j)]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `line_a,line_b,value` rows for a shrunk kernel's graph.
pub fn write_edges(path: impl AsRef<Path>, edges: &[Edge], line_ids: &[String]) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "line_a,line_b,value").map_err(io)?;
    for e in edges {
        let (a, b) = match (line_ids.get(e.a), line_ids.get(e.b)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Dimension("edge refers to an unknown line".into())),
        };
        writeln!(w, "{a},{b},{}", e.value).map_err(io)?;
    }
    w.flush().map_err(io)
}
