mod common;

use common::*;
use locepi::breeding::{
    cross_distribution, cross_many, jannink_index, preference_index, region_densities, region_density,
    write_cross_samples, write_crosses, write_selection, CrossMode, SelectionInput,
};
use locepi::genome::Region;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn input(seed: u64, n: usize, k: usize, h1: f64, h2: f64) -> SelectionInput {
    let mut r = rng(seed);
    let g = DMatrix::from_fn(n, k, |_, _| normal(&mut r));
    let p = DMatrix::from_fn(n, k, |_, _| r.random::<f64>());
    let w: Vec<f64> = (0..k).map(|_| r.random::<f64>() + 0.1).collect();
    let s: f64 = w.iter().sum();
    SelectionInput::new(g, p, w.iter().map(|v| v / s).collect(), h1, h2).unwrap()
}

#[test]
fn jannink_by_double_loop() {
    let s = input(1, 12, 5, 1.0, 1.0);
    let got = jannink_index(&s);
    for i in 0..12 {
        let mut want = 0.0;
        for j in 0..5 {
            want += s.eblups[(i, j)] / (1.0 + s.densities[(i, j)].sqrt());
        }
        assert!((got[i] - want).abs() < 1e-14);
    }
}

#[test]
fn jannink_rises_with_eblup_and_falls_with_density() {
    let s = input(2, 6, 3, 1.0, 1.0);
    let base = jannink_index(&s);
    let mut up = s.clone();
    up.eblups[(2, 1)] += 0.5;
    assert!(jannink_index(&up)[2] > base[2]);
    let mut dense = s.clone();
    dense.eblups[(2, 1)] = dense.eblups[(2, 1)].abs();
    let base = jannink_index(&dense);
    dense.densities[(2, 1)] = (dense.densities[(2, 1)] + 0.3).min(1.0);
    assert!(jannink_index(&dense)[2] <= base[2]);
}

#[test]
fn wide_density_kernel_ranks_by_eblup() {
    let mut s = input(3, 40, 1, 1.0, 1e6);
    s.kernel_weights = vec![1.0];
    let pref = preference_index(&s).unwrap();
    let g: Vec<f64> = s.eblups.column(0).iter().copied().collect();
    assert!(kendall_tau(&pref, &g) > 0.95);
}

#[test]
fn preference_ranking_ignores_eblup_scale() {
    let s = input(4, 30, 4, 1.0, 1.0);
    let mut scaled = s.clone();
    scaled.eblups *= 250.0;
    let a = preference_index(&s).unwrap();
    let b = preference_index(&scaled).unwrap();
    for i in 0..30 {
        assert!((a[i] - 250.0 * b[i]).abs() < 1e-10 * a[i].abs().max(1e-300));
    }
}

#[test]
fn preference_needs_variation() {
    let s = SelectionInput::new(
        DMatrix::from_element(3, 1, 1.0),
        DMatrix::from_element(3, 1, 0.5),
        vec![1.0],
        1.0,
        1.0,
    )
    .unwrap();
    assert!(preference_index(&s).is_err());
    assert!(SelectionInput::new(DMatrix::zeros(2, 1), DMatrix::from_element(2, 1, 1.5), vec![1.0], 1.0, 1.0).is_err());
    assert!(SelectionInput::new(DMatrix::zeros(2, 1), DMatrix::zeros(2, 1), vec![1.0], 0.0, 1.0).is_err());
}

#[test]
fn density_by_counting() {
    // 4 lines x 3 markers, +-1 coded
    let x = DMatrix::from_row_slice(4, 3, &[1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0, -1.0, -1.0]);
    let p = panel(&x, 1);
    let region = Region::new("all", Some(1), vec![0, 1, 2]).unwrap();
    let d = region_density(&p, &region).unwrap();
    for i in 0..4 {
        let mut want = 0.0;
        for c in 0..3 {
            let same = (0..4).filter(|&l| x[(l, c)] == x[(i, c)]).count();
            want += same as f64 / 4.0;
        }
        assert!((d[i] - want / 3.0).abs() < 1e-15, "line {i}");
    }
    let m = region_densities(&p, &[&region, &region]).unwrap();
    assert_eq!(m.shape(), (4, 2));
    assert!(d.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn exhaustive_cross_moments() {
    let g1 = [0.4, -1.2, 2.0, 0.1, 0.7];
    let g2 = [1.0, 0.3, -0.5, 0.1, 2.2];
    let d = cross_distribution(&g1, &g2, 0, 1, CrossMode::Exhaustive).unwrap();
    assert_eq!(d.samples.len(), 32);
    let mean: f64 = g1.iter().zip(&g2).map(|(a, b)| (a + b) / 2.0).sum();
    let var: f64 = g1.iter().zip(&g2).map(|(a, b)| (a - b).powi(2) / 4.0).sum();
    assert!((d.summary.mean - mean).abs() < 1e-12);
    assert!((d.summary.variance - var).abs() < 1e-12);
    let swapped = cross_distribution(&g2, &g1, 0, 1, CrossMode::Exhaustive).unwrap();
    assert!((swapped.summary.mean - d.summary.mean).abs() < 1e-12);
    assert!((swapped.summary.variance - d.summary.variance).abs() < 1e-12);
    assert_eq!(swapped.summary.q50, d.summary.q50);
}

#[test]
fn monte_carlo_within_three_sigma() {
    let mut r = rng(5);
    let g1: Vec<f64> = (0..40).map(|_| normal(&mut r)).collect();
    let g2: Vec<f64> = (0..40).map(|_| normal(&mut r)).collect();
    let d = cross_distribution(&g1, &g2, 10_000, 7, CrossMode::Auto).unwrap();
    assert!(!d.exact);
    let mean: f64 = g1.iter().zip(&g2).map(|(a, b)| (a + b) / 2.0).sum();
    let var: f64 = g1.iter().zip(&g2).map(|(a, b)| (a - b).powi(2) / 4.0).sum();
    assert!((d.summary.mean - mean).abs() <= 3.0 * (var / 10_000.0).sqrt());
    assert!((d.summary.variance - var).abs() <= 3.0 * var * (2.0 / 9_999.0f64).sqrt());
    let again = cross_distribution(&g1, &g2, 10_000, 7, CrossMode::Auto).unwrap();
    assert_eq!(again.samples, d.samples);
    assert!(cross_distribution(&g1, &g2, 10, 7, CrossMode::Exhaustive).is_err());
    assert!(cross_distribution(&g1, &g2[1..], 10, 7, CrossMode::Auto).is_err());
}

#[test]
fn many_crosses_use_separate_streams() {
    let g: Vec<f64> = (0..30).map(|i| i as f64).collect();
    let h: Vec<f64> = (0..30).map(|i| -(i as f64)).collect();
    let pairs = [(&g[..], &h[..]), (&g[..], &h[..])];
    let out = cross_many(&pairs, 50, 3, CrossMode::MonteCarlo).unwrap();
    assert_ne!(out[0].samples, out[1].samples);
    assert_eq!(out, cross_many(&pairs, 50, 3, CrossMode::MonteCarlo).unwrap());
}

#[test]
fn reports_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let ids = vec!["a".to_string(), "b".to_string()];
    write_selection(dir.path().join("s.csv"), &ids, &[1.0, 2.0], &[0.5, 0.1]).unwrap();
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(text.contains("a,1.0,0.5,1") && text.contains("b,2.0,0.1,2"));
    let d = cross_distribution(&[1.0], &[0.0], 0, 1, CrossMode::Auto).unwrap().with_parents("a", "b");
    write_crosses(dir.path().join("c.csv"), std::slice::from_ref(&d)).unwrap();
    write_cross_samples(dir.path().join("cs.csv"), &[d]).unwrap();
    let text = std::fs::read_to_string(dir.path().join("cs.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

proptest! {
    #[test]
    fn self_cross_is_degenerate(g in prop::collection::vec(-5.0f64..5.0, 1..25)) {
        let d = cross_distribution(&g, &g, 200, 1, CrossMode::Auto).unwrap();
        let total: f64 = g.iter().sum();
        prop_assert!(d.summary.variance <= 1e-20);
        prop_assert!(d.samples.iter().all(|v| (v - total).abs() < 1e-9));
    }

    #[test]
    fn progeny_lie_between_parental_extremes(g1 in prop::collection::vec(-5.0f64..5.0, 1..10), seed in any::<u64>()) {
        let mut r = rng(seed);
        let g2: Vec<f64> = g1.iter().map(|_| normal(&mut r)).collect();
        let d = cross_distribution(&g1, &g2, 0, 1, CrossMode::Exhaustive).unwrap();
        let lo: f64 = g1.iter().zip(&g2).map(|(a, b)| a.min(*b)).sum();
        let hi: f64 = g1.iter().zip(&g2).map(|(a, b)| a.max(*b)).sum();
        prop_assert!(d.samples.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9));
        prop_assert!(d.summary.q05 <= d.summary.q50 && d.summary.q50 <= d.summary.q95);
    }
}
