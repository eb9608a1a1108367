use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How genotypes are coded in the input.
///
/// Internally every panel holds values in `[-1, 1]`; `ZeroOneTwo` data is
/// shifted by `-1` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coding {
    #[default]
    MinusOneZeroOne,
    ZeroOneTwo,
}

impl Coding {
    fn shift(self) -> f64 {
        match self {
            Coding::MinusOneZeroOne => 0.0,
            Coding::ZeroOneTwo => -1.0,
        }
    }

    /// Inclusive range of raw input values accepted for this coding.
    pub fn input_range(self) -> (f64, f64) {
        match self {
            Coding::MinusOneZeroOne => (-1.0, 1.0),
            Coding::ZeroOneTwo => (0.0, 2.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEntry {
    pub marker_id: String,
    pub chromosome: u32,
    /// Position in centimorgans.
    pub position: f64,
    /// False for markers absent from the map file; those sit on the sentinel
    /// chromosome.
    pub mapped: bool,
}

/// One entry per panel column, in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneticMap {
    entries: Vec<MapEntry>,
    chromosome_count: u32,
}

impl GeneticMap {
    pub fn entries(&self) -> &[MapEntry] {
        &self.entries
    }

    pub fn entry(&self, column: usize) -> &MapEntry {
        &self.entries[column]
    }

    /// Number of real chromosomes (`c`); unmapped markers use `c + 1`.
    pub fn chromosome_count(&self) -> u32 {
        self.chromosome_count
    }

    pub fn sentinel_chromosome(&self) -> u32 {
        self.chromosome_count + 1
    }

    /// Distinct chromosomes carrying mapped markers, ascending.
    pub fn chromosomes(&self) -> Vec<u32> {
        let mut c: Vec<u32> = self
            .entries
            .iter()
            .filter(|e| e.mapped)
            .map(|e| e.chromosome)
            .collect();
        c.dedup();
        c
    }

    /// Columns of mapped markers on `chromosome`, in position order.
    pub fn columns_on(&self, chromosome: u32) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.mapped && e.chromosome == chromosome)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Coded marker matrix (lines x markers) together with its genetic map.
#[derive(Debug, Clone)]
pub struct MarkerPanel {
    line_ids: Vec<String>,
    line_lookup: HashMap<String, usize>,
    markers: DMatrix<f64>,
    map: GeneticMap,
    coding: Coding,
    imputed: usize,
    unmapped: Vec<String>,
}

impl MarkerPanel {
    /// Build a panel from raw coded values.
    ///
    /// `values` is lines x markers in the order of `marker_ids`; `NaN` marks a
    /// missing cell and is replaced by the column mean of observed entries.
    /// `map` lists `(marker_id, chromosome, position_cm)`; markers missing from
    /// it go to chromosome `c + 1` with a warning. Columns are reordered into
    /// map order.
    pub fn new(
        line_ids: Vec<String>,
        marker_ids: Vec<String>,
        values: DMatrix<f64>,
        map: &[(String, u32, f64)],
        coding: Coding,
    ) -> Result<Self> {
        let q = line_ids.len();
        let p = marker_ids.len();
        if values.nrows() != q || values.ncols() != p {
            return Err(Error::Dimension(format!(
                "marker matrix is {}x{}, expected {q}x{p} from ids",
                values.nrows(),
                values.ncols()
            )));
        }
        if q == 0 || p == 0 {
            return Err(Error::Invalid("marker panel must have lines and markers".into()));
        }
        let mut seen = HashSet::new();
        for id in &line_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate line id {id}")));
            }
        }
        let mut seen = HashSet::new();
        for id in &marker_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate marker id {id}")));
            }
        }

        let mut map_lookup: HashMap<&str, (u32, f64)> = HashMap::new();
        let mut chromosome_count = 0;
        for (id, chrom, pos) in map {
            if *chrom < 1 {
                return Err(Error::Invalid(format!("marker {id}: chromosome must be >= 1")));
            }
            if !(pos.is_finite() && *pos >= 0.0) {
                return Err(Error::Invalid(format!("marker {id}: position must be >= 0 cM")));
            }
            if map_lookup.insert(id.as_str(), (*chrom, *pos)).is_some() {
                return Err(Error::Invalid(format!("marker {id} listed twice in map")));
            }
            chromosome_count = chromosome_count.max(*chrom);
        }

        let (lo, hi) = coding.input_range();
        let shift = coding.shift();
        let mut coded = values;
        let mut imputed = 0;
        for j in 0..p {
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in 0..q {
                let v = coded[(i, j)];
                if v.is_nan() {
                    continue;
                }
                if !(v >= lo && v <= hi) {
                    return Err(Error::Invalid(format!(
                        "marker {} line {}: value {v} outside coding range [{lo}, {hi}]",
                        marker_ids[j], line_ids[i]
                    )));
                }
                sum += v;
                count += 1;
            }
            if count == 0 {
                return Err(Error::Invalid(format!(
                    "marker {} has no observed genotypes",
                    marker_ids[j]
                )));
            }
            let col_mean = sum / count as f64;
            for i in 0..q {
                if coded[(i, j)].is_nan() {
                    coded[(i, j)] = col_mean;
                    imputed += 1;
                }
                coded[(i, j)] += shift;
            }
        }

        let sentinel = chromosome_count + 1;
        let mut unmapped = Vec::new();
        let mut entries: Vec<(usize, MapEntry)> = marker_ids
            .iter()
            .enumerate()
            .map(|(j, id)| match map_lookup.get(id.as_str()) {
                Some(&(chromosome, position)) => (
                    j,
                    MapEntry {
                        marker_id: id.clone(),
                        chromosome,
                        position,
                        mapped: true,
                    },
                ),
                None => {
                    log::warn!("marker {id} not in map; assigned to chromosome {sentinel}");
                    unmapped.push(id.clone());
                    (
                        j,
                        MapEntry {
                            marker_id: id.clone(),
                            chromosome: sentinel,
                            position: 0.0,
                            mapped: false,
                        },
                    )
                }
            })
            .collect();
        // unmapped entries keep input order at the end: their positions tie at 0
        // and the original index breaks the tie
        entries.sort_by(|(ia, a), (ib, b)| {
            a.chromosome
                .cmp(&b.chromosome)
                .then(a.position.total_cmp(&b.position))
                .then(ia.cmp(ib))
        });
        let order: Vec<usize> = entries.iter().map(|(j, _)| *j).collect();
        let markers = coded.select_columns(order.iter());
        let mut map_entries: Vec<MapEntry> = entries.into_iter().map(|(_, e)| e).collect();
        let mut next_unmapped = 0.0;
        for e in map_entries.iter_mut().filter(|e| !e.mapped) {
            e.position = next_unmapped;
            next_unmapped += 1.0;
        }

        let line_lookup = line_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(MarkerPanel {
            line_ids,
            line_lookup,
            markers,
            map: GeneticMap {
                entries: map_entries,
                chromosome_count,
            },
            coding,
            imputed,
            unmapped,
        })
    }

    pub fn n_lines(&self) -> usize {
        self.markers.nrows()
    }

    pub fn n_markers(&self) -> usize {
        self.markers.ncols()
    }

    pub fn line_ids(&self) -> &[String] {
        &self.line_ids
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.line_lookup.get(id).copied()
    }

    pub fn marker_id(&self, column: usize) -> &str {
        &self.map.entries[column].marker_id
    }

    /// Coded values in `[-1, 1]`, columns in map order.
    pub fn markers(&self) -> &DMatrix<f64> {
        &self.markers
    }

    pub fn map(&self) -> &GeneticMap {
        &self.map
    }

    pub fn coding(&self) -> Coding {
        self.coding
    }

    /// Number of cells filled by mean imputation.
    pub fn imputed_count(&self) -> usize {
        self.imputed
    }

    /// Ids of markers that were absent from the map.
    pub fn unmapped(&self) -> &[String] {
        &self.unmapped
    }

    pub fn mapped_columns(&self) -> Vec<usize> {
        (0..self.n_markers())
            .filter(|&j| self.map.entries[j].mapped)
            .collect()
    }

    /// Column subset for `columns`, kept in the given order.
    pub fn columns(&self, columns: &[usize]) -> DMatrix<f64> {
        self.markers.select_columns(columns.iter())
    }

    /// A panel restricted to the given lines (same columns and map).
    pub fn subset_lines(&self, lines: &[usize]) -> MarkerPanel {
        let line_ids: Vec<String> = lines.iter().map(|&i| self.line_ids[i].clone()).collect();
        let line_lookup = line_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        MarkerPanel {
            line_ids,
            line_lookup,
            markers: self.markers.select_rows(lines.iter()),
            map: self.map.clone(),
            coding: self.coding,
            imputed: self.imputed,
            unmapped: self.unmapped.clone(),
        }
    }

    /// Drop marker columns, keeping everything else aligned.
    pub fn without_columns(&self, drop: &[usize]) -> MarkerPanel {
        let drop: HashSet<usize> = drop.iter().copied().collect();
        let keep: Vec<usize> = (0..self.n_markers()).filter(|j| !drop.contains(j)).collect();
        MarkerPanel {
            line_ids: self.line_ids.clone(),
            line_lookup: self.line_lookup.clone(),
            markers: self.markers.select_columns(keep.iter()),
            map: GeneticMap {
                entries: keep.iter().map(|&j| self.map.entries[j].clone()).collect(),
                chromosome_count: self.map.chromosome_count,
            },
            coding: self.coding,
            imputed: self.imputed,
            unmapped: self.unmapped.clone(),
        }
    }

    /// First `count` principal-component scores of the column-centred marker
    /// matrix (lines x count).
    pub fn principal_components(&self, count: usize) -> Result<DMatrix<f64>> {
        let q = self.n_lines();
        if count > q {
            return Err(Error::Invalid(format!(
                "asked for {count} principal components from {q} lines"
            )));
        }
        let mut centred = self.markers.clone();
        for mut col in centred.column_iter_mut() {
            let m = col.mean();
            col.add_scalar_mut(-m);
        }
        let gram = &centred * centred.transpose();
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut scores = DMatrix::zeros(q, count);
        for (k, &idx) in order.iter().take(count).enumerate() {
            let sv = eig.eigenvalues[idx].max(0.0).sqrt();
            for i in 0..q {
                scores[(i, k)] = eig.eigenvectors[(i, idx)] * sv;
            }
        }
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn missing_cell_is_column_mean() {
        let values = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, f64::NAN, 1.0, 2.0, 1.0]);
        let map = vec![("m0".to_string(), 1, 0.0), ("m1".to_string(), 1, 1.0)];
        let panel =
            MarkerPanel::new(ids("l", 3), ids("m", 2), values, &map, Coding::ZeroOneTwo).unwrap();
        // observed {0, 2} -> 1.0, then shifted by -1
        assert_eq!(panel.markers()[(1, 0)], 0.0);
        assert_eq!(panel.imputed_count(), 1);
    }

    #[test]
    fn unmapped_marker_goes_to_sentinel() {
        let values = DMatrix::from_element(2, 3, 1.0);
        let markers = vec!["mX".to_string(), "m1".to_string(), "m2".to_string()];
        let map = vec![("m1".to_string(), 1, 5.0), ("m2".to_string(), 2, 0.0)];
        let panel = MarkerPanel::new(ids("l", 2), markers, values, &map, Coding::default()).unwrap();
        assert_eq!(panel.unmapped(), &["mX".to_string()]);
        let last = panel.map().entry(2);
        assert_eq!(last.marker_id, "mX");
        assert_eq!(last.chromosome, 3);
        assert!(!last.mapped);
        assert_eq!(panel.mapped_columns(), vec![0, 1]);
    }

    #[test]
    fn out_of_range_value_rejected() {
        let values = DMatrix::from_element(1, 1, 3.0);
        let map = vec![("m0".to_string(), 1, 0.0)];
        let err = MarkerPanel::new(ids("l", 1), ids("m", 1), values, &map, Coding::ZeroOneTwo);
        assert!(matches!(err, Err(Error::Invalid(_))));
    }

    #[test]
    fn columns_reordered_by_map() {
        let values = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, -1.0]);
        let map = vec![
            ("m0".to_string(), 2, 0.0),
            ("m1".to_string(), 1, 9.0),
            ("m2".to_string(), 1, 3.0),
        ];
        let panel = MarkerPanel::new(ids("l", 1), ids("m", 3), values, &map, Coding::default()).unwrap();
        let order: Vec<&str> = (0..3).map(|j| panel.marker_id(j)).collect();
        assert_eq!(order, vec!["m2", "m1", "m0"]);
        assert_eq!(panel.markers()[(0, 0)], -1.0);
    }
}
