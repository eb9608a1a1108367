mod common;

use common::*;
use locepi::genome::Region;
use locepi::kernel::{
    combine_kernels, gaussian_kernel, hadamard, kernel_alignment, kernel_scan, linear_kernel,
    polynomial_kernel, region_kernel, scan_weights, shrink_kernel, Bandwidth, KernelFunction,
    KernelMatrix, KernelWeights, WeightMethod,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn min_eig(k: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(k.clone()).eigenvalues.min()
}

fn max_abs(k: &DMatrix<f64>) -> f64 {
    k.amax().max(1.0)
}

fn assert_kernel(k: &KernelMatrix) {
    let v = k.values();
    assert!((v - v.transpose()).amax() <= 1e-12);
    assert!(min_eig(v) >= -1e-8 * max_abs(v), "min eigenvalue {}", min_eig(v));
}

#[test]
fn linear_kernel_by_double_loop() {
    let mut r = rng(1);
    let x = markers(&mut r, 9, 13);
    let k = linear_kernel(&x).unwrap();
    for i in 0..9 {
        for j in 0..9 {
            let s: f64 = (0..13).map(|c| x[(i, c)] * x[(j, c)]).sum();
            assert!((k.values()[(i, j)] - s / 13.0).abs() < 1e-14);
        }
    }
}

#[test]
fn gaussian_median_bandwidth() {
    let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 3.0]);
    // squared distances 1, 9, 4: median 4
    let k = gaussian_kernel(&x, Bandwidth::Median).unwrap();
    assert!((k.values()[(0, 1)] - (-0.25f64).exp()).abs() < 1e-15);
    assert!((k.values()[(0, 2)] - (-9.0f64 / 4.0).exp()).abs() < 1e-15);
}

#[test]
fn region_kernel_scales_by_region_size() {
    let mut r = rng(2);
    let x = markers(&mut r, 10, 20);
    let p = panel(&x, 2);
    let region = Region::new("chr1", Some(1), (0..10).collect()).unwrap();
    let k = region_kernel(&p, &region, KernelFunction::Linear).unwrap();
    let want = linear_kernel(&x.columns(0, 10).into_owned()).unwrap();
    assert!((k.values() - want.values()).amax() < 1e-14);
}

#[test]
fn scan_weights_vanish_off_chromosome() {
    let mut r = rng(3);
    let x = markers(&mut r, 10, 20);
    let p = panel(&x, 2);
    let s = scan_weights(&p, 3, 4.0).unwrap();
    assert_eq!(s[3], 1.0);
    assert!((s[5] - (-1.0f64).exp()).abs() < 1e-15);
    assert!(s[10..].iter().all(|w| *w == 0.0));
    assert!(scan_weights(&p, 3, 0.0).is_err());
    let k = kernel_scan(&p, 3, 4.0, KernelFunction::Linear).unwrap();
    assert_kernel(&k);
    assert!((k.mean_diagonal() - 1.0).abs() < 1e-12);
}

#[test]
fn shrinkage_keeps_large_entries() {
    let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.05, 0.5, 1.0, 0.2, 0.05, 0.2, 1.0]);
    let k = KernelMatrix::from_matrix(m.clone(), "k").unwrap();
    let (s, edges) = shrink_kernel(&k, 0.1).unwrap();
    assert_eq!(edges.len(), 2);
    assert_eq!(s.values()[(0, 2)], 0.0);
    assert_kernel(&s);
    let (same, _) = shrink_kernel(&k, 0.0).unwrap();
    assert_eq!(same.values(), &m);
}

#[test]
fn alignment_of_a_kernel_with_itself() {
    let mut r = rng(4);
    let k = linear_kernel(&markers(&mut r, 8, 5)).unwrap();
    assert!((kernel_alignment(&k, &k).unwrap() - 1.0).abs() < 1e-14);
}

fn arb_markers() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..12, 1usize..15, any::<u64>()).prop_map(|(n, m, seed)| {
        let mut r = rng(seed);
        let mut x = markers(&mut r, n, m);
        // a few zero calls so the entries are not all +-1
        for i in 0..n {
            if i % 3 == 0 {
                x[(i, 0)] = 0.0;
            }
        }
        x
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernels_are_symmetric_psd(x in arb_markers(), c in 0.0f64..3.0, d in 1u32..4, h in 0.1f64..20.0) {
        assert_kernel(&linear_kernel(&x).unwrap());
        assert_kernel(&polynomial_kernel(&x, c, d).unwrap());
        let g = gaussian_kernel(&x, Bandwidth::Fixed(h)).unwrap();
        assert_kernel(&g);
        prop_assert!(g.values().diagonal().iter().all(|v| *v == 1.0));
        prop_assert!(g.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn polynomial_degree_one_without_offset_is_linear(x in arb_markers()) {
        let a = polynomial_kernel(&x, 0.0, 1).unwrap();
        let b = linear_kernel(&x).unwrap();
        prop_assert!((a.values() - b.values()).amax() <= 1e-12);
    }

    #[test]
    fn combinations_stay_valid(x in arb_markers(), w in 0.0f64..=1.0, h in 0.5f64..10.0) {
        let a = linear_kernel(&x).unwrap();
        let b = gaussian_kernel(&x, Bandwidth::Fixed(h)).unwrap();
        let ws = KernelWeights::new(vec![w, 1.0 - w], WeightMethod::Fixed).unwrap();
        let c = combine_kernels(&[&a, &b], &ws).unwrap();
        assert_kernel(&c);
        let want = a.values() * w + b.values() * (1.0 - w);
        prop_assert!((c.values() - want).amax() <= 1e-12);
        let swapped = KernelWeights::new(vec![1.0 - w, w], WeightMethod::Fixed).unwrap();
        let s = combine_kernels(&[&b, &a], &swapped).unwrap();
        prop_assert_eq!(s.values(), c.values());
        assert_kernel(&hadamard(&a, &b).unwrap());
    }

    #[test]
    fn one_hot_weights_select_a_kernel(x in arb_markers()) {
        let a = linear_kernel(&x).unwrap();
        let b = polynomial_kernel(&x, 1.0, 2).unwrap();
        let ws = KernelWeights::new(vec![0.0, 1.0], WeightMethod::Fixed).unwrap();
        let c = combine_kernels(&[&a, &b], &ws).unwrap();
        prop_assert_eq!(c.values(), b.values());
    }

    #[test]
    fn shrinkage_output_is_positive_definite(x in arb_markers(), t in 0.0f64..1.0) {
        let k = linear_kernel(&x).unwrap();
        let (s, edges) = shrink_kernel(&k, t).unwrap();
        assert_kernel(&s);
        for e in &edges {
            prop_assert!(e.value.abs() >= t);
        }
    }
}
