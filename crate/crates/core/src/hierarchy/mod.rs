//! Variance-component likelihood-ratio tests and tree-structured testing of
//! genomic regions.
//!
//! A walk starts at the root and descends only below rejected nodes. Under
//! the Meinshausen procedure a node with `|H|` markers is tested at level
//! `alpha |H| / |H_0|`.

mod export;
mod lrt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::genome::{MarkerPanel, Phenotype, RegionTree};
use crate::kernel::{complement_kernel, region_kernel, KernelFunction};
use crate::spmm::{Method, MixedModelSpec};

pub use export::{write_hierarchy_csv, write_hierarchy_tree};
pub use lrt::{lrt_variance, mixture_p_value, mixture_weights, LrtResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Rejected,
    Accepted,
    NotTested,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Rejected => "rejected",
            Decision::Accepted => "accepted",
            Decision::NotTested => "not_tested",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    Meinshausen,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeReport {
    pub region_id: String,
    pub level: usize,
    pub n_markers: usize,
    pub alpha_h: Option<f64>,
    pub lrt: Option<LrtResult>,
    /// Heritability of the region under the fitted alternative.
    pub h2: Option<f64>,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyReport {
    pub procedure: Procedure,
    pub method: Method,
    pub alpha: Option<f64>,
    pub h2_floor: Option<f64>,
    /// Nodes in breadth-first order.
    pub nodes: Vec<NodeReport>,
}

impl HierarchyReport {
    pub fn node(&self, id: &str) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.region_id == id)
    }

    pub fn tested(&self) -> impl Iterator<Item = &NodeReport> {
        self.nodes.iter().filter(|n| n.decision != Decision::NotTested)
    }

    pub fn rejected(&self) -> impl Iterator<Item = &NodeReport> {
        self.nodes.iter().filter(|n| n.decision == Decision::Rejected)
    }
}

/// Kernel choice and model options shared by both walks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    pub function: KernelFunction,
    pub method: Method,
    /// Fit nodes below the root against a background kernel from the
    /// remaining markers.
    pub marginal: bool,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            function: KernelFunction::Linear,
            method: Method::Reml,
            marginal: true,
        }
    }
}

struct NodeTest {
    lrt: LrtResult,
    h2: f64,
}

fn test_node(
    node: &RegionTree,
    panel: &MarkerPanel,
    phenotype: &Phenotype,
    settings: &ScanSettings,
) -> Result<NodeTest> {
    let target = region_kernel(panel, &node.region, settings.function)?;
    let background = if settings.marginal && node.level > 1 && node.region.len() < panel.n_markers() {
        Some(complement_kernel(panel, &node.region, settings.function)?)
    } else {
        None
    };
    let kernels = match &background {
        Some(b) => vec![&target, b],
        None => vec![&target],
    };
    let spec = MixedModelSpec::new(phenotype, kernels)?;
    let (lrt, fit) = lrt_variance(&spec, settings.method)?;
    Ok(NodeTest {
        lrt,
        h2: fit.heritabilities[0],
    })
}

fn walk(
    tree: &RegionTree,
    panel: &MarkerPanel,
    phenotype: &Phenotype,
    settings: &ScanSettings,
    decide: impl Fn(&RegionTree, &NodeTest) -> (Option<f64>, Decision) + Sync,
) -> Result<Vec<NodeReport>> {
    let mut reports = Vec::with_capacity(tree.node_count());
    let mut frontier: Vec<&RegionTree> = vec![tree];
    let mut untested: Vec<&RegionTree> = Vec::new();
    while !frontier.is_empty() {
        let results: Vec<Result<NodeTest>> = frontier
            .par_iter()
            .map(|node| test_node(node, panel, phenotype, settings))
            .collect();
        let mut next = Vec::new();
        for (node, result) in frontier.iter().zip(results) {
            let t = result?;
            let (alpha_h, decision) = decide(node, &t);
            reports.push(NodeReport {
                region_id: node.region.id.clone(),
                level: node.level,
                n_markers: node.region.len(),
                alpha_h,
                lrt: Some(t.lrt),
                h2: Some(t.h2),
                decision,
            });
            if decision == Decision::Rejected {
                next.extend(node.children.iter());
            } else {
                untested.extend(node.children.iter());
            }
        }
        frontier = next;
    }
    while let Some(node) = untested.pop() {
        reports.push(NodeReport {
            region_id: node.region.id.clone(),
            level: node.level,
            n_markers: node.region.len(),
            alpha_h: None,
            lrt: None,
            h2: None,
            decision: Decision::NotTested,
        });
        untested.extend(node.children.iter());
    }
    let order: Vec<&str> = tree.nodes().iter().map(|n| n.region.id.as_str()).collect();
    reports.sort_by_key(|r| order.iter().position(|id| *id == r.region_id));
    Ok(reports)
}

/// Meinshausen hierarchical testing at family-wise level `alpha`.
pub fn hierarchical_scan(
    tree: &RegionTree,
    panel: &MarkerPanel,
    phenotype: &Phenotype,
    alpha: f64,
    settings: &ScanSettings,
) -> Result<HierarchyReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let root = tree.region.len() as f64;
    let nodes = walk(tree, panel, phenotype, settings, |node, t| {
        let alpha_h = alpha * node.region.len() as f64 / root;
        let decision = if t.lrt.p_value <= alpha_h {
            Decision::Rejected
        } else {
            Decision::Accepted
        };
        (Some(alpha_h), decision)
    })?;
    Ok(HierarchyReport {
        procedure: Procedure::Meinshausen,
        method: settings.method,
        alpha: Some(alpha),
        h2_floor: None,
        nodes,
    })
}

/// Walk that descends below every node whose heritability reaches
/// `h2_floor`. P-values are reported but not used.
pub fn threshold_scan(
    tree: &RegionTree,
    panel: &MarkerPanel,
    phenotype: &Phenotype,
    h2_floor: f64,
    settings: &ScanSettings,
) -> Result<HierarchyReport> {
    if !(0.0..=1.0).contains(&h2_floor) {
        return Err(Error::Invalid(format!("h2 floor must lie in [0, 1], got {h2_floor}")));
    }
    let nodes = walk(tree, panel, phenotype, settings, |_, t| {
        let decision = if t.h2 >= h2_floor {
            Decision::Rejected
        } else {
            Decision::Accepted
        };
        (None, decision)
    })?;
    Ok(HierarchyReport {
        procedure: Procedure::Threshold,
        method: settings.method,
        alpha: None,
        h2_floor: Some(h2_floor),
        nodes,
    })
}
