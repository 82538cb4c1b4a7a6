//! End-to-end behaviour of generation, estimation, classification and the
//! spectral checks on moderately sized instances.

use num_complex::Complex64;

use nishibethe::classify::{belief_propagation, classify_nishimori, overlap, BpConfig, ClassifyOptions};
use nishibethe::generate::{gaussian_j0_for_ratio, generate_er, planted_instance, Topology};
use nishibethe::kernel::{sparsify_kernel, two_cluster_mixture};
use nishibethe::nishimori::{estimate_beta_nishimori, NishimoriConfig, Route};
use nishibethe::nonbacktracking::{full_spectrum_B, is_real, DEFAULT_DENSE_CAP};
use nishibethe::validate::{reproduce_spectrum_figure, BetaSpec, SpectrumParams};
use nishibethe::weights::analytic_beta_n;
use nishibethe::{Error, WeightDistribution};

#[test]
fn unit_weight_er_spectrum() {
    let g = generate_er(250, 4.0, 11).unwrap();
    let rep = full_spectrum_B(&g, DEFAULT_DENSE_CAP).unwrap();
    let c = g.avg_degree();
    assert!((rep.leading.re / c - 1.0).abs() < 0.15, "{} vs {c}", rep.leading);
    assert!(rep.all_eigs.iter().any(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-6));
    let r = c.sqrt();
    assert!(rep.complex_fraction_within(1.05 * r) > 0.99);
}

#[test]
fn bulk_radius_is_one_at_the_spin_glass_point() {
    let p =
        SpectrumParams { n: 200, c: 8.0, j0: 1.0, nu: 1.5, beta: BetaSpec::SpinGlass(1.0), seed: 3, dense_cap: 4000 };
    let fig = reproduce_spectrum_figure(&p).unwrap();
    let r = fig.dense.unwrap().bulk_radius_empirical;
    assert!((0.9..=1.1).contains(&r), "radius {r}");
}

#[test]
fn signed_instance_estimate() {
    let beta_n = 0.5 * 9f64.ln();
    let law = WeightDistribution::plus_minus_j_at(beta_n, 1.0).unwrap();
    let inst = planted_instance(Topology::ErdosRenyi, 8000, 5.0, &law, 2).unwrap();
    let cfg = NishimoriConfig::default();
    let est = estimate_beta_nishimori(&inst.graph, &cfg).unwrap();
    assert!(est.detectable);
    assert!((est.beta_n_hat / beta_n - 1.0).abs() < 0.05, "{} vs {beta_n}", est.beta_n_hat);
    let hess = estimate_beta_nishimori(&inst.graph, &NishimoriConfig { route: Route::Hessian, ..cfg }).unwrap();
    assert!((hess.beta_n_hat - est.beta_n_hat).abs() < 1e-3 * est.beta_n_hat);
}

#[test]
fn undetectable_instance_falls_back_to_spin_glass_point() {
    let law = WeightDistribution::gaussian(0.5, 3.5).unwrap();
    let inst = planted_instance(Topology::ErdosRenyi, 5000, 5.0, &law, 4).unwrap();
    let est = estimate_beta_nishimori(&inst.graph, &NishimoriConfig::default()).unwrap();
    assert!(!est.detectable);
    assert_eq!(est.beta_n_hat, est.beta_sg_hat);
    let r = classify_nishimori(&inst.graph, &ClassifyOptions::default()).unwrap();
    assert!(r.diagnostics.warning.is_some());
    assert!(overlap(&inst.labels, &r.labels_hat).unwrap() < 0.1);
}

#[test]
fn epsilon_controls_the_stopping_point() {
    let law = WeightDistribution::gaussian(gaussian_j0_for_ratio(2.0, 1.0, 5.0).unwrap(), 1.0).unwrap();
    let inst = planted_instance(Topology::ErdosRenyi, 4000, 5.0, &law, 5).unwrap();
    for eps in [1e-3, 1e-6] {
        let cfg = NishimoriConfig { epsilon: eps, ..Default::default() };
        let est = estimate_beta_nishimori(&inst.graph, &cfg).unwrap();
        let last = est.iterations.last().unwrap();
        assert!(last.gamma_min.abs() <= eps || est.capped, "{eps}: {last:?}");
    }
}

#[test]
fn eigenvector_class_means_have_opposite_signs() {
    let law = WeightDistribution::gaussian(gaussian_j0_for_ratio(2.0, 1.0, 5.0).unwrap(), 1.0).unwrap();
    let inst = planted_instance(Topology::ErdosRenyi, 4000, 5.0, &law, 6).unwrap();
    let r = classify_nishimori(&inst.graph, &ClassifyOptions::default()).unwrap();
    assert!(overlap(&inst.labels, &r.labels_hat).unwrap() > 0.3);
    let mean = |side: i8| {
        let v: Vec<f64> = r.eigvec.iter().zip(&inst.labels).filter(|(_, s)| **s == side).map(|(x, _)| *x).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(1) * mean(-1) < 0.0);
}

#[test]
fn belief_propagation_tracks_the_nishimori_method_at_high_degree() {
    let c = 15.0;
    let law = WeightDistribution::gaussian(gaussian_j0_for_ratio(3.0, 1.0, c).unwrap(), 1.0).unwrap();
    let inst = planted_instance(Topology::ErdosRenyi, 5000, c, &law, 7).unwrap();
    let nb = classify_nishimori(&inst.graph, &ClassifyOptions::default()).unwrap();
    let beta = nb.beta_used.unwrap();
    let bp = belief_propagation(&inst.graph, beta, &BpConfig { seed: 7, ..Default::default() }).unwrap();
    let (o_nb, o_bp) = (overlap(&inst.labels, &nb.labels_hat).unwrap(), overlap(&inst.labels, &bp.labels_hat).unwrap());
    assert!((o_nb - o_bp).abs() < 0.05, "nishimori {o_nb} bp {o_bp}");
    assert!(analytic_beta_n(&law).unwrap() > 0.0);
}

#[test]
fn kernel_with_zero_degree_cannot_be_classified() {
    let d = two_cluster_mixture(100, 8, 2.0, 1).unwrap();
    let g = sparsify_kernel(&d, 8.0, 0.0, 1).unwrap();
    assert!(g.is_empty());
    let err = classify_nishimori(&g, &ClassifyOptions::default()).unwrap_err();
    assert!(matches!(err, Error::EmptyGraph(_)));
    assert!(err.is_validation());
}

#[test]
fn kernel_pipeline_on_a_separated_mixture() {
    let d = two_cluster_mixture(2000, 32, 4.0, 8).unwrap();
    let g = sparsify_kernel(&d, 32.0, 8.0, 8).unwrap();
    let r = classify_nishimori(&g, &ClassifyOptions::default()).unwrap();
    assert!(overlap(d.labels.as_ref().unwrap(), &r.labels_hat).unwrap() > 0.9);
}

#[test]
fn spectrum_report_marks_two_real_outliers() {
    let p = SpectrumParams { n: 150, c: 5.0, j0: 1.0, nu: 1.0, beta: BetaSpec::Value(10.0), seed: 2, dense_cap: 4000 };
    let fig = reproduce_spectrum_figure(&p).unwrap();
    let rep = fig.report.unwrap();
    assert!(is_real(rep.leading) && rep.leading.re > 0.0);
    let inner = rep.inner_real.unwrap();
    assert!((inner.re - fig.inner_real_sparse.unwrap()).abs() < 1e-6);
    assert!((rep.leading.re - fig.leading_power).abs() < 1e-6);
    let csv = rep.to_csv();
    assert_eq!(csv.lines().filter(|l| l.ends_with(",leading")).count(), 1);
    assert_eq!(csv.lines().filter(|l| l.ends_with(",inner")).count(), 1);
}
