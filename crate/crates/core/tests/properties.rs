//! Property tests for the structural invariants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use nishibethe::classify::{kmeans_1d, overlap};
use nishibethe::eigen::{smallest_eigpair, symmetric_eigen_sorted, EigenConfig};
use nishibethe::generate::{balanced_labels, generate_er, plant_labels};
use nishibethe::kernel::{sparsify_kernel, two_cluster_mixture};
use nishibethe::matrices::{bethe_hessian, signed_bethe_hessian};
use nishibethe::nonbacktracking::{m0_eigenvalues_closed_form, m0_from_dense, watanabe_fukumizu_residual};
use nishibethe::weights::{analytic_beta_n, sample_weights_from};
use nishibethe::{WeightDistribution, WeightedGraph};

fn gaussian_graph(n: usize, c: f64, j0: f64, nu: f64, seed: u64) -> WeightedGraph {
    let g = generate_er(n, c, seed).unwrap();
    sample_weights_from(&g, &WeightDistribution::gaussian(j0, nu).unwrap(), seed).unwrap()
}

fn labels(n: usize, seed: u64) -> Vec<i8> {
    // not balanced on purpose
    (0..n).map(|i| if (seed.wrapping_mul(31) ^ (i as u64 * 2654435761)) % 3 == 0 { -1 } else { 1 }).collect()
}

fn dense_eigs(m: DMatrix<f64>) -> Vec<f64> {
    symmetric_eigen_sorted(m).0
}

/// Exhaustive 2-means cost over every bipartition.
fn brute_force_cost(v: &[f64]) -> f64 {
    let n = v.len();
    let sse = |idx: &[usize]| {
        if idx.is_empty() {
            return 0.0;
        }
        let m = idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (v[i] - m).powi(2)).sum::<f64>()
    };
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let a: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let b: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
        best = best.min(sse(&a) + sse(&b));
    }
    best
}

fn labelled_cost(v: &[f64], l: &[i8]) -> f64 {
    let mut cost = 0.0;
    for side in [-1i8, 1] {
        let xs: Vec<f64> = v.iter().zip(l).filter(|(_, s)| **s == side).map(|(x, _)| *x).collect();
        if !xs.is_empty() {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            cost += xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
        }
    }
    cost
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generated_graphs_are_symmetric_simple_and_zero_free(n in 2usize..300, c in 0.0f64..6.0, seed in any::<u64>()) {
        prop_assume!(c < n as f64);
        let g = gaussian_graph(n, c, 0.5, 1.0, seed);
        let (rp, col, val) = g.csr();
        for i in 0..n {
            for s in rp[i]..rp[i + 1] {
                let j = col[s];
                prop_assert_ne!(i, j);
                prop_assert!(val[s] != 0.0);
                prop_assert_eq!(g.weight(j, i), Some(val[s]));
            }
        }
        prop_assert!(g.edges().iter().all(|e| e.0 < e.1));
    }

    #[test]
    fn gauge_is_an_involution(seed in any::<u64>()) {
        let g = gaussian_graph(120, 4.0, 0.2, 1.0, seed);
        let sigma = labels(120, seed);
        let once = plant_labels(&g, &sigma).unwrap().graph;
        let twice = plant_labels(&once, &sigma).unwrap().graph;
        prop_assert_eq!(twice.edges(), g.edges());
        let neg: Vec<i8> = sigma.iter().map(|s| -s).collect();
        let flipped = plant_labels(&g, &neg).unwrap().graph;
        prop_assert_eq!(flipped.edges(), once.edges());
    }

    #[test]
    fn overlap_is_flip_invariant(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200)) {
        let s: Vec<i8> = pairs.iter().map(|p| if p.0 { 1 } else { -1 }).collect();
        let h: Vec<i8> = pairs.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
        let ns: Vec<i8> = s.iter().map(|v| -v).collect();
        let nh: Vec<i8> = h.iter().map(|v| -v).collect();
        let o = overlap(&s, &h).unwrap();
        prop_assert!((0.0..=1.0).contains(&o));
        prop_assert_eq!(o, overlap(&ns, &h).unwrap());
        prop_assert_eq!(o, overlap(&s, &nh).unwrap());
    }

    #[test]
    fn kmeans_is_optimal(v in prop::collection::vec(prop_oneof![(-3i32..4).prop_map(f64::from), -5.0f64..5.0], 2..13)) {
        let l = kmeans_1d(&v).unwrap();
        let got = labelled_cost(&v, &l);
        let best = brute_force_cost(&v);
        prop_assert!((got - best).abs() <= 1e-9 * best.max(1.0), "{got} vs {best}");
        // the +1 side has the larger mean
        let mean = |side: i8| {
            let xs: Vec<f64> = v.iter().zip(&l).filter(|(_, s)| **s == side).map(|(x, _)| *x).collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        };
        if l.contains(&-1) {
            prop_assert!(mean(1) > mean(-1));
        }
    }

    #[test]
    fn gauge_preserves_bethe_hessian_spectrum(seed in any::<u64>(), beta in 0.05f64..1.5) {
        let j = gaussian_graph(60, 4.0, 0.7, 1.0, seed);
        let jt = plant_labels(&j, &labels(60, seed)).unwrap().graph;
        let a = dense_eigs(bethe_hessian(&j, beta).unwrap().to_dense());
        let b = dense_eigs(bethe_hessian(&jt, beta).unwrap().to_dense());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn signed_form_is_rescaled_bethe_hessian(seed in any::<u64>(), beta in 0.05f64..3.0, j0 in 0.2f64..2.0) {
        let g = generate_er(80, 5.0, seed).unwrap();
        let sigma = labels(80, seed);
        let j = plant_labels(&g, &sigma).unwrap().graph.map_weights(|w| w * j0).unwrap();
        prop_assume!(beta * j0 <= 18.0);
        let t = (beta * j0).tanh();
        let h = bethe_hessian(&j, beta).unwrap().to_dense() * (1.0 - t * t);
        let s = signed_bethe_hessian(&j, beta).unwrap().to_dense();
        prop_assert!((h - s).amax() < 1e-10);
    }

    #[test]
    fn lanczos_matches_dense_oracle(seed in any::<u64>(), n in 150usize..400, beta in 0.1f64..1.0) {
        let j = gaussian_graph(n, 5.0, 0.5, 1.0, seed);
        let h = bethe_hessian(&j, beta).unwrap();
        let cfg = EigenConfig { dense_threshold: 0, seed, ..Default::default() };
        let p = smallest_eigpair(&h, &cfg).unwrap();
        let exact = dense_eigs(h.to_dense())[0];
        prop_assert!((p.value - exact).abs() < 1e-8 * exact.abs().max(1.0), "{} vs {exact}", p.value);
    }

    #[test]
    fn watanabe_fukumizu_holds(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let g = gaussian_graph(18, 3.0, 0.3, 0.8, seed);
        let w = g.map_weights(|x| x.tanh()).unwrap();
        let x = Complex64::new(re, im);
        prop_assume!(w.edges().iter().all(|e| (x * x - e.2 * e.2).norm() > 1e-3));
        prop_assert!(watanabe_fukumizu_residual(&w, x, 5000).unwrap() < 1e-8);
    }

    #[test]
    fn m0_closed_form_matches_dense(mu in prop::collection::vec(-4.0f64..4.0, 1..6), s in 0.0f64..5.0) {
        let n = mu.len();
        let wd = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(mu.clone()));
        let mut dense: Vec<Complex64> = m0_from_dense(&wd, s).complex_eigenvalues().iter().copied().collect();
        let mut closed = m0_eigenvalues_closed_form(&mu, s);
        prop_assert_eq!(closed.len(), 2 * n);
        let key = |z: &Complex64| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e6).round() as i64;
        dense.sort_by_key(key);
        closed.sort_by_key(key);
        for (a, b) in dense.iter().zip(&closed) {
            // a double root at mu^2 = 4s is only resolved to sqrt(eps)
            prop_assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn nishimori_identity_under_independent_quadrature(j0 in 0.1f64..3.0, nu in 0.3f64..3.0) {
        let d = WeightDistribution::gaussian(j0, nu).unwrap();
        let b = analytic_beta_n(&d).unwrap();
        // composite Simpson on mean ± 15 sd
        let (lo, hi, m) = (j0 - 15.0 * nu, j0 + 15.0 * nu, 200_000usize);
        let h = (hi - lo) / m as f64;
        let pdf = |x: f64| (-(x - j0).powi(2) / (2.0 * nu * nu)).exp() / (nu * (2.0 * std::f64::consts::PI).sqrt());
        let f = |x: f64| x * (b * x).tanh() * pdf(x);
        let mut s = f(lo) + f(hi);
        for k in 1..m {
            s += f(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let lhs = s * h / 3.0;
        prop_assert!((lhs - j0).abs() < 1e-8, "{lhs} vs {j0}");
    }

    #[test]
    fn kernel_graphs_are_deterministic_and_valid(seed in any::<u64>(), kappa in 1.0f64..16.0) {
        let d = two_cluster_mixture(150, 16, 1.0, seed).unwrap();
        let a = sparsify_kernel(&d, kappa, 6.0, seed).unwrap();
        let b = sparsify_kernel(&d, kappa, 6.0, seed).unwrap();
        prop_assert_eq!(a.edges(), b.edges());
        prop_assert!(a.edges().iter().all(|e| e.0 < e.1 && e.2 != 0.0 && e.2.is_finite()));
    }

    #[test]
    fn edge_list_round_trip(seed in any::<u64>()) {
        let g = gaussian_graph(90, 3.0, -0.4, 2.0, seed);
        let back = WeightedGraph::read_edge_list(g.to_edge_list_string().as_bytes()).unwrap();
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.edges(), g.edges());
    }

    #[test]
    fn balanced_labels_split_evenly(n in 1usize..500, seed in any::<u64>()) {
        let l = balanced_labels(n, seed);
        prop_assert_eq!(l.iter().filter(|v| **v == 1).count(), n.div_ceil(2));
    }
}
