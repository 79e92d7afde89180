use nalgebra::DMatrix;
use num_rational::Ratio;
use proptest::prelude::*;

use btlcheck::model::{btl_model, cyclic_model, random_model};
use btlcheck::projection::btl_distance;
use btlcheck::spectral::{
    borda_stationary_gap, canonical_markov, dtm, dtm_deflated_norm, dtm_edge_expansion, dtm_sigma2, principal_ratio,
    residual_decomposition, separation, stationary_default,
};
use btlcheck::{seed, Model, ObservationGraph, PairwiseModel};

fn complete(n: usize) -> ObservationGraph {
    ObservationGraph::complete(n).unwrap()
}

fn pi_of(m: &Model) -> Vec<f64> {
    stationary_default(&canonical_markov(m, None).unwrap()).unwrap().pi
}

#[test]
fn sigma2_matches_dense_svd_and_deflated_norm() {
    for r in 0..30u64 {
        let n = 3 + (r % 12) as usize;
        let m: Model = random_model(&complete(n), 0.3, seed::derive(21, &[r])).unwrap();
        let chain = canonical_markov(&m, None).unwrap();
        let pi = pi_of(&m);
        let rm = dtm(&chain, &pi).unwrap();
        let oracle = DMatrix::from_row_slice(n, n, rm.as_slice()).singular_values();
        let mut sv: Vec<f64> = oracle.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        let s2 = dtm_sigma2(&chain, &pi).unwrap();
        assert!((s2 - sv[1]).abs() < 1e-10, "{s2} vs {}", sv[1]);
        assert!((s2 - dtm_deflated_norm(&chain, &pi).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn complete_graph_spectral_and_expansion_bounds() {
    for delta in [0.2, 0.5, 0.8] {
        for r in 0..20u64 {
            let n = 3 + (r % 9) as usize;
            let m: Model = random_model(&complete(n), delta, seed::derive(22, &[r, (delta * 10.0) as u64])).unwrap();
            let chain = canonical_markov(&m, None).unwrap();
            let pi = pi_of(&m);
            let s2 = dtm_sigma2(&chain, &pi).unwrap();
            let phi = dtm_edge_expansion(&chain, &pi).unwrap();
            assert!(s2 <= 1.0 - delta / (4.0 * (1.0 + delta)) + 1e-12, "sigma2 {s2} at delta {delta}");
            assert!(phi >= delta.powi(3) / (4.0 * (1.0 + delta)), "phi {phi} at delta {delta}");
            assert!(s2 <= 1.0 - phi * phi / 4.0 + 1e-12, "Cheeger: sigma2 {s2}, phi {phi}");
            assert!(principal_ratio(&pi).unwrap() <= 1.0 / (delta * delta));
        }
    }
}

#[test]
fn btl_stationary_is_normalized_scores() {
    for r in 0..20u64 {
        let n = 10 + r as usize;
        let g = ObservationGraph::erdos_renyi(n, 0.4, seed::derive(23, &[r])).unwrap();
        let mut rng = seed::rng(23, &[r, 1]);
        let alpha: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 1.0..10.0)).collect();
        let m = btl_model(&alpha, &g).unwrap();
        let pi = pi_of(&m);
        let total: f64 = alpha.iter().sum();
        assert!(pi.iter().zip(&alpha).all(|(p, a)| (p - a / total).abs() < 1e-10));
        let cond = alpha.iter().copied().fold(0.0, f64::max) / alpha.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((principal_ratio(&pi).unwrap() - cond).abs() < 1e-8 * cond);
        assert!(separation(&m, &pi).0 <= 1e-8);
        let dec = residual_decomposition(&m, &pi).unwrap();
        assert!(dec.rev < 1e-16 && dec.skew < 1e-16);
    }
}

#[test]
fn cyclic_three_is_pure_irreversibility() {
    let m: Model = cyclic_model(&complete(3), 0.1).unwrap();
    let pi = pi_of(&m);
    assert!(pi.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
    assert!((separation(&m, &pi).0 - (6.0f64 / 225.0).sqrt()).abs() < 1e-12);
    let dec = residual_decomposition(&m, &pi).unwrap();
    assert!(dec.skew.abs() < 1e-15 && (dec.rev - dec.total).abs() < 1e-15);
}

#[test]
fn distance_sandwich_on_skew_symmetric_models() {
    let mut ratios = Vec::new();
    for r in 0..20u64 {
        let n = 4 + (r % 5) as usize;
        let mut rng = seed::rng(24, &[r]);
        let base: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 1.0..4.0)).collect();
        let m: Model = PairwiseModel::from_fn(complete(n), |i, j| {
            let noise = if i < j { 0.05 * ((i * 7 + j * 3 + r as usize) % 5) as f64 - 0.1 } else { 0.0 };
            base[j] / (base[i] + base[j]) + noise
        })
        .unwrap();
        let m = PairwiseModel::from_fn(complete(n), |i, j| if i < j { m.prob(i, j) } else { 1.0 - m.prob(j, i) }).unwrap();
        let pi = pi_of(&m);
        let (d, _) = separation(&m, &pi);
        if d < 1e-9 {
            continue;
        }
        let df = btl_distance(&m, 0.2, 10, r).unwrap().distance;
        ratios.push(df * pi.iter().copied().fold(0.0, f64::max) / d);
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    assert!(lo > 0.0 && hi / lo < 10.0, "{ratios:?}");
}

#[test]
fn borda_gap_sign_on_random_models() {
    for r in 0..50u64 {
        let n = 3 + (r % 8) as usize;
        let m: Model = random_model(&complete(n), 0.3, seed::derive(25, &[r])).unwrap();
        let pi = pi_of(&m);
        for i in 0..n {
            for j in 0..n {
                if (pi[i] - pi[j]).abs() > 1e-9 {
                    let gap = borda_stationary_gap(&m, &pi, i, j).unwrap();
                    assert_eq!(gap > 0.0, pi[i] > pi[j], "r={r} i={i} j={j} gap={gap}");
                }
            }
        }
    }
}

type Q = Ratio<i128>;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_identity_is_exact(
        n in 3usize..7,
        probs in proptest::collection::vec(1i128..20, 42),
        weights in proptest::collection::vec(1i128..9, 7),
    ) {
        let mut it = probs.iter();
        let m: PairwiseModel<Q> = PairwiseModel::from_fn(complete(n), |_, _| Q::new(*it.next().unwrap(), 20)).unwrap();
        let total: i128 = weights[..n].iter().sum();
        let pi: Vec<Q> = weights[..n].iter().map(|&w| Q::new(w, total)).collect();
        let d = residual_decomposition(&m, &pi).unwrap();
        prop_assert_eq!(d.total, d.rev + d.skew);
    }

    #[test]
    fn stationary_is_invariant_under_relabeling(seed_value in 0u64..1000, n in 3usize..9) {
        let m: Model = random_model(&complete(n), 0.4, seed_value).unwrap();
        let pi = pi_of(&m);
        let perm: Vec<usize> = (0..n).rev().collect();
        let relabeled = PairwiseModel::from_fn(complete(n), |i, j| m.prob(perm[i], perm[j])).unwrap();
        let pi2 = pi_of(&relabeled);
        for i in 0..n {
            prop_assert!((pi2[i] - pi[perm[i]]).abs() < 1e-10);
        }
    }
}
