mod common;

use common::*;
use locepi::genome::{partition_genome, MarkerPanel, Phenotype, RegionTree};
use locepi::hierarchy::{
    hierarchical_scan, lrt_variance, mixture_p_value, mixture_weights, threshold_scan,
    write_hierarchy_csv, write_hierarchy_tree, Decision, HierarchyReport, ScanSettings,
};
use locepi::kernel::linear_kernel;
use locepi::spmm::{Method, MixedModelSpec};
use nalgebra::DVector;
use std::collections::HashSet;

/// 80 lines, 3 chromosomes of 20 markers, signal on chromosome 1 only.
fn setup(seed: u64) -> (MarkerPanel, Phenotype, RegionTree) {
    let mut r = rng(seed);
    let x = markers(&mut r, 80, 60);
    let y = DVector::from_fn(80, |i, _| {
        (0..20).map(|j| 0.5 * x[(i, j)]).sum::<f64>() / 20f64.sqrt() + 0.6 * normal(&mut r)
    });
    let p = panel(&x, 3);
    let tree = partition_genome(&p, 3, 2).unwrap();
    (p, Phenotype::from_line_values(y), tree)
}

fn check_closure(tree: &RegionTree, report: &HierarchyReport) {
    assert_eq!(report.nodes.len(), tree.node_count());
    let root = report.node("genome").unwrap();
    assert_ne!(root.decision, Decision::NotTested);
    for node in tree.nodes() {
        let parent = report.node(&node.region.id).unwrap();
        for child in &node.children {
            let c = report.node(&child.region.id).unwrap();
            let tested = c.decision != Decision::NotTested;
            assert_eq!(tested, parent.decision == Decision::Rejected, "{}", child.region.id);
        }
    }
}

fn rejected(report: &HierarchyReport) -> HashSet<String> {
    report.rejected().map(|n| n.region_id.clone()).collect()
}

#[test]
fn mixture_tail_values() {
    assert_eq!(mixture_weights(Method::Reml), (0.5, 0.5));
    assert_eq!(mixture_weights(Method::Ml), (0.65, 0.35));
    assert_eq!(mixture_p_value(0.0, (0.5, 0.5)), 1.0);
    assert!((mixture_p_value(3.841458820694124, (0.5, 0.5)) - 0.025).abs() < 1e-9);
    assert!((mixture_p_value(2.705543454095404, (0.5, 0.5)) - 0.05).abs() < 1e-9);
}

#[test]
fn statistic_is_nonnegative_without_signal() {
    for seed in 0..5 {
        let inst = instance(seed, 40, 30, 0.5, 0);
        let mut r = rng(100 + seed);
        let y = DVector::from_fn(40, |_, _| normal(&mut r));
        let ph = inst.phenotype.with_values(y).unwrap();
        let k = linear_kernel(&inst.markers).unwrap();
        let spec = MixedModelSpec::new(&ph, vec![&k]).unwrap();
        let (lrt, _) = lrt_variance(&spec, Method::Reml).unwrap();
        assert!(lrt.statistic >= 0.0 && (0.0..=1.0).contains(&lrt.p_value));
    }
}

#[test]
fn meinshausen_levels_and_closure() {
    let (p, ph, tree) = setup(1);
    let report = hierarchical_scan(&tree, &p, &ph, 0.05, &ScanSettings::default()).unwrap();
    check_closure(&tree, &report);
    for n in report.tested() {
        let want = 0.05 * n.n_markers as f64 / 60.0;
        assert!((n.alpha_h.unwrap() - want).abs() < 1e-15);
        let rejected = n.lrt.unwrap().p_value <= want;
        assert_eq!(rejected, n.decision == Decision::Rejected);
    }
    assert_eq!(report.node("chr1").unwrap().decision, Decision::Rejected);
    assert_eq!(report.node("chr3").unwrap().decision, Decision::Accepted);
    assert_eq!(report.node("chr3.1").unwrap().decision, Decision::NotTested);
}

#[test]
fn larger_alpha_rejects_a_superset() {
    let (p, ph, tree) = setup(2);
    let s = ScanSettings::default();
    let strict = rejected(&hierarchical_scan(&tree, &p, &ph, 0.001, &s).unwrap());
    let loose = rejected(&hierarchical_scan(&tree, &p, &ph, 0.3, &s).unwrap());
    assert!(strict.is_subset(&loose), "{strict:?} vs {loose:?}");
}

#[test]
fn decisions_ignore_phenotype_scale() {
    let (p, ph, tree) = setup(3);
    let s = ScanSettings::default();
    let a = hierarchical_scan(&tree, &p, &ph, 0.05, &s).unwrap();
    let scaled = ph.with_values(ph.values() * 37.5).unwrap();
    let b = hierarchical_scan(&tree, &p, &scaled, 0.05, &s).unwrap();
    for (x, y) in a.nodes.iter().zip(&b.nodes) {
        assert_eq!(x.decision, y.decision);
        if let (Some(l), Some(m)) = (x.lrt, y.lrt) {
            assert!((l.statistic - m.statistic).abs() < 1e-6 * l.statistic.max(1.0));
        }
    }
}

#[test]
fn threshold_floor_extremes() {
    let (p, ph, tree) = setup(4);
    let s = ScanSettings::default();
    let all = threshold_scan(&tree, &p, &ph, 0.0, &s).unwrap();
    assert!(all.nodes.iter().all(|n| n.decision != Decision::NotTested));
    let none = threshold_scan(&tree, &p, &ph, 1.0, &s).unwrap();
    check_closure(&tree, &none);
    assert_eq!(none.tested().count(), 1);
    assert!(threshold_scan(&tree, &p, &ph, 1.5, &s).is_err());
    assert!(hierarchical_scan(&tree, &p, &ph, 1.0, &s).is_err());
}

#[test]
fn exports_cover_every_node() {
    let (p, ph, tree) = setup(5);
    let report = hierarchical_scan(&tree, &p, &ph, 0.05, &ScanSettings::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_hierarchy_csv(dir.path().join("h.csv"), &report).unwrap();
    let text = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(text.lines().count(), tree.node_count() + 1);
    write_hierarchy_tree(dir.path().join("h.json"), &tree, &report).unwrap();
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("h.json")).unwrap()).unwrap();
    assert_eq!(v["root"]["id"], "genome");
    assert_eq!(v["root"]["children"].as_array().unwrap().len(), 3);
}
