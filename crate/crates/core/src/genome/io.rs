use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::panel::{Coding, MarkerPanel};
use super::phenotype::Phenotype;
use crate::error::{Error, Result};

/// Tab if the first line contains one, comma otherwise.
fn sniff_delimiter(path: &Path) -> Result<u8> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    Ok(if first.contains('\t') { b'\t' } else { b',' })
}

fn read_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let delimiter = sniff_delimiter(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.into(),
            line: 0,
            msg: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path.into(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            msg: "file is empty".into(),
        });
    }
    Ok(rows)
}

fn parse_number(path: &Path, line: usize, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| Error::Parse {
        path: path.into(),
        line,
        msg: format!("non-numeric cell {cell:?}"),
    })
}

fn read_map(path: &Path) -> Result<Vec<(String, u32, f64)>> {
    let rows = read_rows(path)?;
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() != 3 {
            return Err(Error::Parse {
                path: path.into(),
                line: i + 1,
                msg: format!("expected 3 columns, found {}", row.len()),
            });
        }
        let chrom = row[1].parse::<u32>().map_err(|_| Error::Parse {
            path: path.into(),
            line: i + 1,
            msg: format!("chromosome {:?} is not a positive integer", row[1]),
        })?;
        let pos = parse_number(path, i + 1, &row[2])?;
        out.push((row[0].clone(), chrom, pos));
    }
    Ok(out)
}

/// Read a marker matrix and its map.
///
/// Marker file: first row holds marker ids (its first cell is ignored), first
/// column holds line ids, empty cells are missing genotypes. Map file: header
/// plus `marker_id, chromosome, position_cM` rows.
pub fn load_marker_panel(
    markers_path: impl AsRef<Path>,
    map_path: impl AsRef<Path>,
    coding: Coding,
) -> Result<MarkerPanel> {
    let markers_path = markers_path.as_ref();
    let rows = read_rows(markers_path)?;
    let header = &rows[0];
    if header.len() < 2 {
        return Err(Error::Parse {
            path: markers_path.into(),
            line: 1,
            msg: "header needs a line-id column and at least one marker".into(),
        });
    }
    let marker_ids: Vec<String> = header[1..].to_vec();
    let p = marker_ids.len();
    let q = rows.len() - 1;
    let mut values = DMatrix::zeros(q, p);
    let mut line_ids = Vec::with_capacity(q);
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() != p + 1 {
            return Err(Error::Dimension(format!(
                "{}:{}: row has {} cells but header lists {p} markers",
                markers_path.display(),
                i + 1,
                row.len() - 1
            )));
        }
        line_ids.push(row[0].clone());
        for (j, cell) in row[1..].iter().enumerate() {
            values[(i - 1, j)] = if cell.is_empty() {
                f64::NAN
            } else {
                parse_number(markers_path, i + 1, cell)?
            };
        }
    }
    let map = read_map(map_path.as_ref())?;
    MarkerPanel::new(line_ids, marker_ids, values, &map, coding)
}

/// Read `line_id, value, [covariates...]` records for lines of `panel`.
///
/// Rows with an empty value are lines without a record and are skipped.
pub fn load_phenotype(path: impl AsRef<Path>, panel: &MarkerPanel) -> Result<Phenotype> {
    let path = path.as_ref();
    let rows = read_rows(path)?;
    let header = &rows[0];
    if header.len() < 2 {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            msg: "header needs line_id and value columns".into(),
        });
    }
    let names: Vec<String> = header[2..].to_vec();
    let mut values = Vec::new();
    let mut lines = Vec::new();
    let mut cov = Vec::new();
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() != header.len() {
            return Err(Error::Dimension(format!(
                "{}:{}: row has {} cells, header has {}",
                path.display(),
                i + 1,
                row.len(),
                header.len()
            )));
        }
        if row[1].is_empty() {
            continue;
        }
        let line = panel.line_index(&row[0]).ok_or_else(|| Error::Parse {
            path: path.into(),
            line: i + 1,
            msg: format!("line {:?} is not in the marker panel", row[0]),
        })?;
        lines.push(line);
        values.push(parse_number(path, i + 1, &row[1])?);
        for cell in &row[2..] {
            cov.push(parse_number(path, i + 1, cell)?);
        }
    }
    let n = values.len();
    Phenotype::new(
        DVector::from_vec(values),
        lines,
        panel.n_lines(),
        DMatrix::from_row_slice(n, names.len(), &cov),
        names,
    )
}

fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write the panel's coded values (columns in map order).
pub fn write_markers(path: impl AsRef<Path>, panel: &MarkerPanel) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    write!(w, "line_id").map_err(io)?;
    for j in 0..panel.n_markers() {
        write!(w, ",{}", panel.marker_id(j)).map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (i, id) in panel.line_ids().iter().enumerate() {
        write!(w, "{id}").map_err(io)?;
        for j in 0..panel.n_markers() {
            write!(w, ",{}", panel.markers()[(i, j)]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Write mapped markers as `marker_id,chromosome,position_cM`.
pub fn write_map(path: impl AsRef<Path>, panel: &MarkerPanel) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "marker_id,chromosome,position_cM").map_err(io)?;
    for e in panel.map().entries().iter().filter(|e| e.mapped) {
        writeln!(w, "{},{},{}", e.marker_id, e.chromosome, e.position).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_phenotype(path: impl AsRef<Path>, panel: &MarkerPanel, pheno: &Phenotype) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    write!(w, "line_id,value").map_err(io)?;
    for name in pheno.covariate_names() {
        write!(w, ",{name}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for i in 0..pheno.n_obs() {
        write!(w, "{},{}", panel.line_ids()[pheno.line_index()[i]], pheno.values()[i]).map_err(io)?;
        for c in 0..pheno.covariates().ncols() {
            write!(w, ",{}", pheno.covariates()[(i, c)]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
