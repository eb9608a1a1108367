use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use super::HierarchyReport;
use crate::error::{Error, Result};
use crate::genome::RegionTree;

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// `region_id,level,n_markers,alpha_H,statistic,p_value,decision` rows.
pub fn write_hierarchy_csv(path: impl AsRef<Path>, report: &HierarchyReport) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "region_id,level,n_markers,alpha_H,statistic,p_value,h2,decision").map_err(io)?;
    for n in &report.nodes {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            n.region_id,
            n.level,
            n.n_markers,
            opt(n.alpha_h),
            opt(n.lrt.map(|l| l.statistic)),
            opt(n.lrt.map(|l| l.p_value)),
            opt(n.h2),
            n.decision.as_str()
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

fn node_json(tree: &RegionTree, report: &HierarchyReport) -> Value {
    let r = report.node(&tree.region.id);
    json!({
        "id": tree.region.id,
        "level": tree.level,
        "n_markers": tree.region.len(),
        "decision": r.map(|n| n.decision.as_str()),
        "p_value": r.and_then(|n| n.lrt.map(|l| l.p_value)),
        "h2": r.and_then(|n| n.h2),
        "children": tree.children.iter().map(|c| node_json(c, report)).collect::<Vec<_>>(),
    })
}

/// Nested JSON tree with each node's decision.
pub fn write_hierarchy_tree(path: impl AsRef<Path>, tree: &RegionTree, report: &HierarchyReport) -> Result<()> {
    let path = path.as_ref();
    let value = json!({
        "procedure": report.procedure,
        "method": report.method,
        "alpha": report.alpha,
        "h2_floor": report.h2_floor,
        "root": node_json(tree, report),
    });
    let text = serde_json::to_string_pretty(&value).map_err(|e| Error::Numerical(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
