mod common;

use common::*;
use locepi::genome::{Phenotype, Region};
use locepi::kernel::{complement_kernel, linear_kernel, KernelFunction, KernelMatrix};
use locepi::spmm::{
    fit_fixed, fit_joint, fit_marginal, fit_per_kernel, fit_single, loglik, optimality_gap, predict,
    reml_loglik, write_eblups, write_fit_report, Method, MixedModelSpec,
};
use locepi::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn loglik_at_zero_ratio_is_ordinary_regression() {
    let inst = instance(1, 30, 40, 0.5, 1);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    let beta = [2.0, 0.3];
    let s2: f64 = 1.7;
    let r = inst.phenotype.values() - spec.design() * DVector::from_column_slice(&beta);
    let want = -30.0 * s2.ln() - r.norm_squared() / s2;
    let got = loglik(&spec, &beta, s2, &[0.0]).unwrap();
    assert!((got - want).abs() < 1e-10);
}

#[test]
fn identity_kernel_closed_form() {
    let n = 25;
    let y = DVector::from_fn(n, |i, _| (i as f64 * 0.7).sin() + 1.0);
    let ph = Phenotype::from_line_values(y.clone());
    let k = KernelMatrix::from_matrix(DMatrix::identity(n, n), "identity").unwrap();
    let spec = MixedModelSpec::new(&ph, vec![&k]).unwrap();
    let (beta, s2, lambda): (f64, f64, f64) = (0.9, 0.6, 2.5);
    let rss: f64 = y.iter().map(|v| (v - beta).powi(2)).sum();
    let nf = n as f64;
    let want = -nf * s2.ln() - nf * (1.0 + lambda).ln() - rss / ((1.0 + lambda) * s2);
    let got = loglik(&spec, &[beta], s2, &[lambda]).unwrap();
    assert!((got - want).abs() < 1e-10);
}

#[test]
fn reml_intercept_only_at_zero_ratio() {
    let inst = instance(2, 20, 30, 0.5, 0);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    let y = inst.phenotype.values();
    let rss: f64 = y.iter().map(|v| (v - y.mean()).powi(2)).sum();
    let s2: f64 = 0.8;
    let want = -19.0 * s2.ln() - 20f64.ln() - rss / s2;
    let got = reml_loglik(&spec, s2, &[0.0]).unwrap();
    assert!((got - want).abs() < 1e-10);
}

#[test]
fn reml_profile_matches_dense_on_grid() {
    let inst = instance(3, 20, 30, 0.6, 1);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    let y = inst.phenotype.values();
    let x = spec.design();
    let h = inst.kernel.values();
    for i in 0..=100 {
        let l = i as f64 * 0.1;
        let got = reml_loglik(&spec, 1.3, &[l]).unwrap();
        let want = naive_reml(y, x, std::slice::from_ref(h), 1.3, &[l]);
        assert!((got - want).abs() < 1e-8, "lambda {l}: {got} vs {want}");
    }
}

#[test]
fn fast_path_matches_dense_with_replicates_and_two_kernels() {
    let mut r = rng(4);
    let q = 15;
    let x = markers(&mut r, q, 20);
    let k1 = linear_kernel(&x.columns(0, 10).into_owned()).unwrap();
    let k2 = linear_kernel(&x.columns(10, 10).into_owned()).unwrap();
    let index: Vec<usize> = (0..40).map(|i| i % q).collect();
    let y = DVector::from_fn(40, |_, _| normal(&mut r));
    let cov = DMatrix::from_fn(40, 1, |_, _| normal(&mut r));
    let ph = Phenotype::new(y.clone(), index.clone(), q, cov, vec!["c".into()]).unwrap();
    let spec = MixedModelSpec::new(&ph, vec![&k1, &k2]).unwrap();
    let hs = [expand(k1.values(), &index), expand(k2.values(), &index)];
    let beta = DVector::from_vec(vec![0.2, -0.4]);
    for lambdas in [[0.0, 0.0], [0.3, 0.0], [1.5, 2.0], [0.0, 7.0]] {
        let got = loglik(&spec, beta.as_slice(), 0.9, &lambdas).unwrap();
        let want = naive_loglik(&y, spec.design(), &hs, &beta, 0.9, &lambdas);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        let got = reml_loglik(&spec, 0.9, &lambdas).unwrap();
        let want = naive_reml(&y, spec.design(), &hs, 0.9, &lambdas);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn single_fit_matches_brute_force() {
    for seed in 10..14 {
        let inst = instance(seed, 80, 40, 0.5, 0);
        let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
        let fit = fit_single(&spec, Method::Reml).unwrap();
        let (l, v) = brute_force_lambda(inst.phenotype.values(), spec.design(), inst.kernel.values());
        assert!((fit.lambda[0] - l).abs() <= 1e-3, "{} vs {l}", fit.lambda[0]);
        assert!((fit.reml_loglik - v).abs() <= 1e-6);
    }
}

#[test]
fn fits_are_locally_optimal() {
    let inst = instance(20, 50, 80, 0.6, 1);
    let half = |a: usize| linear_kernel(&inst.markers.columns(a, 40).into_owned()).unwrap();
    let (k1, k2) = (half(0), half(40));
    for method in [Method::Reml, Method::Ml] {
        let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
        let fit = fit_single(&spec, method).unwrap();
        assert!(optimality_gap(&spec, &fit, 1e-3).unwrap() <= 1e-6);
        let spec = MixedModelSpec::new(&inst.phenotype, vec![&k1, &k2]).unwrap();
        let fit = fit_joint(&spec, method).unwrap();
        assert!(fit.converged);
        assert!(optimality_gap(&spec, &fit, 1e-3).unwrap() <= 1e-6);
    }
}

#[test]
fn heritabilities_partition_the_variance() {
    let inst = instance(21, 50, 80, 0.6, 0);
    let half = |a: usize| linear_kernel(&inst.markers.columns(a, 40).into_owned()).unwrap();
    let (k1, k2) = (half(0), half(40));
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&k1, &k2]).unwrap();
    let fit = fit_joint(&spec, Method::Reml).unwrap();
    let total: f64 = fit.heritabilities.iter().sum();
    assert!(fit.heritabilities.iter().all(|h| (0.0..=1.0).contains(h)));
    assert!((total + fit.residual_share() - 1.0).abs() < 1e-12);
    assert!(fit.sigma_e2 > 0.0 && fit.sigma_g2.iter().all(|s| *s >= 0.0));
    assert!(fit.loglik.is_finite());
}

#[test]
fn eblup_norm_grows_with_the_ratio() {
    let inst = instance(22, 40, 50, 0.5, 0);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    let mut last = 0.0;
    for l in [0.0, 0.1, 0.5, 2.0, 10.0] {
        let fit = fit_fixed(&spec, &[l], Method::Reml).unwrap();
        let norm = fit.eblups.column(0).norm();
        assert!(norm >= last - 1e-12, "{norm} < {last}");
        last = norm;
    }
}

#[test]
fn in_sample_prediction_reproduces_fit() {
    let inst = instance(23, 40, 50, 0.6, 0);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    let fit = fit_single(&spec, Method::Reml).unwrap();
    let pred = predict(&fit, &[&inst.kernel], &inst.markers, &inst.markers, spec.design()).unwrap();
    let want = spec.design() * DVector::from_column_slice(&fit.beta) + fit.total_eblup();
    assert!((pred - want).amax() < 1e-8);

    let zero = fit_fixed(&spec, &[0.0], Method::Reml).unwrap();
    let mut r = rng(5);
    let new = markers(&mut r, 7, 50);
    let pred = predict(&zero, &[&inst.kernel], &inst.markers, &new, &DMatrix::from_element(7, 1, 1.0)).unwrap();
    assert!(pred.iter().all(|p| (p - zero.beta[0]).abs() < 1e-12));

    let bad = markers(&mut r, 7, 49);
    assert!(matches!(
        predict(&fit, &[&inst.kernel], &inst.markers, &bad, &DMatrix::from_element(7, 1, 1.0)),
        Err(Error::Dimension(_))
    ));
}

#[test]
fn marginal_fit_needs_a_nonempty_background() {
    let mut r = rng(6);
    let x = markers(&mut r, 10, 6);
    let panel = locepi::genome::MarkerPanel::new(
        (0..10).map(|i| format!("l{i}")).collect(),
        (0..6).map(|j| format!("m{j}")).collect(),
        x,
        &(0..6).map(|j| (format!("m{j}"), 1, j as f64)).collect::<Vec<_>>(),
        Default::default(),
    )
    .unwrap();
    let root = Region::new("genome", None, (0..6).collect()).unwrap();
    assert!(complement_kernel(&panel, &root, KernelFunction::Linear).is_err());

    let inst = instance(24, 30, 20, 0.5, 0);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    assert!(fit_marginal(&spec, Method::Reml).is_err());
}

#[test]
fn per_kernel_fits_with_principal_components() {
    let inst = instance(25, 40, 60, 0.5, 0);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    let a = fit_per_kernel(&spec, Method::Reml, None).unwrap();
    let b = fit_single(&spec, Method::Reml).unwrap();
    assert_eq!(a[0], b);

    let ids: Vec<String> = (0..60).map(|j| format!("m{j}")).collect();
    let map: Vec<_> = ids.iter().enumerate().map(|(j, id)| (id.clone(), 1, j as f64)).collect();
    let panel = locepi::genome::MarkerPanel::new(
        (0..40).map(|i| format!("l{i}")).collect(),
        ids,
        inst.markers.clone(),
        &map,
        Default::default(),
    )
    .unwrap();
    let pcs = panel.principal_components(3).unwrap();
    let gram = pcs.transpose() * &pcs;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                assert!(gram[(i, j)].abs() < 1e-8 * gram[(i, i)].max(1.0));
            }
        }
    }
    let with = spec.clone().with_extra_fixed(&pcs).unwrap();
    assert!(locepi::linalg::collinear_columns(with.design()).is_empty());
    let fits = fit_per_kernel(&spec, Method::Reml, Some(&pcs)).unwrap();
    assert_eq!(fits[0].beta.len(), 4);
}

#[test]
fn rank_deficient_design_names_columns() {
    let inst = instance(26, 30, 20, 0.5, 0);
    let dup = DMatrix::from_fn(30, 2, |i, _| i as f64);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel])
        .unwrap()
        .with_extra_fixed(&dup)
        .unwrap();
    match fit_single(&spec, Method::Reml) {
        Err(Error::RankDeficient { columns }) => assert_eq!(columns, vec![2]),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn reports_are_written() {
    let inst = instance(27, 30, 20, 0.5, 0);
    let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
    let fit = fit_single(&spec, Method::Reml).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_fit_report(dir.path().join("r.txt"), &[("genome".into(), fit.clone())]).unwrap();
    let text = std::fs::read_to_string(dir.path().join("r.txt")).unwrap();
    assert!(text.contains("[fit.genome]") && text.contains("method = REML"));
    let ids: Vec<String> = (0..30).map(|i| format!("l{i}")).collect();
    write_eblups(dir.path().join("e.csv"), &ids, &["genome".into()], &fit.eblups).unwrap();
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text.lines().count(), 31);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_path_agrees_with_dense(seed in 0u64..10_000, n in 8usize..30, lambda in 0.0f64..20.0, s2 in 0.1f64..5.0) {
        let inst = instance(seed, n, 12, 0.5, 1);
        let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
        let h = [inst.kernel.values().clone()];
        let beta = DVector::from_vec(vec![1.0, -0.5]);
        let got = loglik(&spec, beta.as_slice(), s2, &[lambda]).unwrap();
        let want = naive_loglik(inst.phenotype.values(), spec.design(), &h, &beta, s2, &[lambda]);
        prop_assert!((got - want).abs() < 1e-8 * want.abs().max(1.0));
        let got = reml_loglik(&spec, s2, &[lambda]).unwrap();
        let want = naive_reml(inst.phenotype.values(), spec.design(), &h, s2, &[lambda]);
        prop_assert!((got - want).abs() < 1e-8 * want.abs().max(1.0));
    }

    #[test]
    fn reml_is_translation_invariant(seed in 0u64..10_000, shift in -50.0f64..50.0, lambda in 0.0f64..10.0) {
        let inst = instance(seed, 20, 15, 0.5, 0);
        let spec = MixedModelSpec::new(&inst.phenotype, vec![&inst.kernel]).unwrap();
        let moved = inst.phenotype.with_values(inst.phenotype.values().add_scalar(shift)).unwrap();
        let spec2 = MixedModelSpec::new(&moved, vec![&inst.kernel]).unwrap();
        let a = reml_loglik(&spec, 1.1, &[lambda]).unwrap();
        let b = reml_loglik(&spec2, 1.1, &[lambda]).unwrap();
        prop_assert!((a - b).abs() < 1e-8 * a.abs().max(1.0));
    }
}
