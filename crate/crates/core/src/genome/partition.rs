use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::panel::MarkerPanel;
use crate::error::{Error, Result};

/// A set of marker columns treated as one unit for kernels and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    /// `None` for regions spanning several chromosomes.
    pub chromosome: Option<u32>,
    /// Column indices into the panel, ascending (map order).
    pub marker_indices: Vec<usize>,
}

impl Region {
    pub fn new(id: impl Into<String>, chromosome: Option<u32>, mut marker_indices: Vec<usize>) -> Result<Self> {
        let id = id.into();
        marker_indices.sort_unstable();
        marker_indices.dedup();
        if marker_indices.is_empty() {
            return Err(Error::Invalid(format!("region {id} has no markers")));
        }
        Ok(Region {
            id,
            chromosome,
            marker_indices,
        })
    }

    pub fn len(&self) -> usize {
        self.marker_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marker_indices.is_empty()
    }

    /// Panel columns outside this region.
    pub fn complement(&self, n_markers: usize) -> Vec<usize> {
        let mut inside = vec![false; n_markers];
        for &j in &self.marker_indices {
            inside[j] = true;
        }
        (0..n_markers).filter(|&j| !inside[j]).collect()
    }
}

/// Nested genome regions: the whole genome at level 1, chromosomes at level 2,
/// and equal-centimorgan subdivisions below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTree {
    pub region: Region,
    /// 1 for the root.
    pub level: usize,
    pub children: Vec<RegionTree>,
}

impl RegionTree {
    /// Number of levels below and including this node.
    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Every node in breadth-first order.
    pub fn nodes(&self) -> Vec<&RegionTree> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([self]);
        while let Some(node) = queue.pop_front() {
            out.push(node);
            queue.extend(node.children.iter());
        }
        out
    }

    pub fn leaves(&self) -> Vec<&RegionTree> {
        self.nodes().into_iter().filter(|n| n.children.is_empty()).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    pub fn find(&self, id: &str) -> Option<&RegionTree> {
        self.nodes().into_iter().find(|n| n.region.id == id)
    }

    /// Nodes at exactly `level`.
    pub fn level_nodes(&self, level: usize) -> Vec<&RegionTree> {
        self.nodes().into_iter().filter(|n| n.level == level).collect()
    }
}

/// Split map-ordered `columns` into `splits` intervals of equal centimorgan
/// span. A marker exactly on a boundary belongs to the left interval; empty
/// intervals are dropped (merged into a neighbour).
pub fn split_by_cm(columns: &[usize], positions: &[f64], splits: usize) -> Vec<Vec<usize>> {
    debug_assert_eq!(columns.len(), positions.len());
    if columns.is_empty() {
        return Vec::new();
    }
    let lo = positions.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / splits as f64;
    let mut groups = vec![Vec::new(); splits];
    for (&col, &pos) in columns.iter().zip(positions) {
        let slot = if width <= 0.0 {
            0
        } else {
            let t = (pos - lo) / width;
            (t.ceil() as usize).saturating_sub(1).min(splits - 1)
        };
        groups[slot].push(col);
    }
    let before = groups.len();
    groups.retain(|g| !g.is_empty());
    if groups.len() < before {
        log::warn!(
            "{} of {before} equal-cM intervals were empty and merged into neighbours",
            before - groups.len()
        );
    }
    groups
}

/// Build the region hierarchy over mapped markers.
///
/// Level 1 is the whole (mapped) genome, level 2 the chromosomes, and every
/// deeper level splits each node of the previous one into `splits_per_level`
/// contiguous intervals of equal centimorgan span. A node that cannot be split
/// into at least two non-empty parts stays a leaf.
pub fn partition_genome(
    panel: &MarkerPanel,
    levels: usize,
    splits_per_level: usize,
) -> Result<RegionTree> {
    if levels < 1 {
        return Err(Error::Invalid("levels must be >= 1".into()));
    }
    if splits_per_level < 2 {
        return Err(Error::Invalid("splits_per_level must be >= 2".into()));
    }
    let mapped = panel.mapped_columns();
    if mapped.is_empty() {
        return Err(Error::Invalid("no mapped markers to partition".into()));
    }
    let mut root = RegionTree {
        region: Region::new("genome", None, mapped)?,
        level: 1,
        children: Vec::new(),
    };
    if levels >= 2 {
        for chrom in panel.map().chromosomes() {
            let cols = panel.map().columns_on(chrom);
            let mut node = RegionTree {
                region: Region::new(format!("chr{chrom}"), Some(chrom), cols)?,
                level: 2,
                children: Vec::new(),
            };
            subdivide(panel, &mut node, levels, splits_per_level)?;
            root.children.push(node);
        }
    }
    Ok(root)
}

fn subdivide(panel: &MarkerPanel, node: &mut RegionTree, levels: usize, splits: usize) -> Result<()> {
    if node.level >= levels {
        return Ok(());
    }
    let cols = &node.region.marker_indices;
    let positions: Vec<f64> = cols.iter().map(|&j| panel.map().entry(j).position).collect();
    let groups = split_by_cm(cols, &positions, splits);
    if groups.len() < 2 {
        log::warn!("region {} cannot be split further; kept as a leaf", node.region.id);
        return Ok(());
    }
    for (i, group) in groups.into_iter().enumerate() {
        let mut child = RegionTree {
            region: Region::new(
                format!("{}.{}", node.region.id, i + 1),
                node.region.chromosome,
                group,
            )?,
            level: node.level + 1,
            children: Vec::new(),
        };
        subdivide(panel, &mut child, levels, splits)?;
        node.children.push(child);
    }
    Ok(())
}
