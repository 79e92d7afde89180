use proptest::prelude::*;
use rayon::prelude::*;

use btlcheck::dataset::{sample_dataset, ComparisonDataset, TrialCounts};
use btlcheck::inference::{
    cycle_shuffle, decide, permutation_threshold, plug_in_statistic, quantile, quantile_threshold, skew_shuffle, test_statistic, Hypothesis,
    Scaling, TestConfig,
};
use btlcheck::model::{btl_model, cyclic_model, random_btl_scores, random_model};
use btlcheck::spectral::{canonical_markov, separation, stationary_default};
use btlcheck::{seed, Model, ObservationGraph};

fn complete(n: usize) -> ObservationGraph {
    ObservationGraph::complete(n).unwrap()
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64)
}

fn welch_t(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    (ma - mb) / (va / a.len() as f64 + vb / b.len() as f64).sqrt()
}

fn draw(m: &Model, k: usize, s: u64) -> ComparisonDataset {
    sample_dataset(m, &TrialCounts::Uniform(k), s).unwrap()
}

#[test]
fn skew_shuffle_preserves_statistic_law_on_skew_symmetric_data() {
    let m = btl_model(&random_btl_scores(8, 31), &complete(8)).unwrap();
    let config = TestConfig::default();
    let before: Vec<f64> = (0..200u64).into_par_iter().map(|r| plug_in_statistic(&draw(&m, 12, seed::derive(31, &[0, r])), &config).unwrap()).collect();
    let after: Vec<f64> = (0..200u64)
        .into_par_iter()
        .map(|r| plug_in_statistic(&skew_shuffle(&draw(&m, 12, seed::derive(31, &[1, r])), seed::derive(31, &[2, r])), &config).unwrap())
        .collect();
    let t = welch_t(&before, &after);
    assert!(t.abs() < 1.96, "location shift t = {t}");
}

#[test]
fn cycle_shuffle_moves_cyclic_data_towards_reversibility() {
    let n = 3;
    let m: Model = cyclic_model(&complete(n), 0.2).unwrap();
    let config = TestConfig::default();
    let pairs: Vec<(f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|r| {
            let d = draw(&m, 20, seed::derive(32, &[r]));
            let shuffled = cycle_shuffle(&d, n, seed::derive(32, &[r, 1])).data;
            (plug_in_statistic(&d, &config).unwrap(), plug_in_statistic(&shuffled, &config).unwrap())
        })
        .collect();
    let before = pairs.iter().map(|p| p.0).sum::<f64>() / 200.0;
    let after = pairs.iter().map(|p| p.1).sum::<f64>() / 200.0;
    assert!(after < before, "mean T before {before}, after {after}");
}

#[test]
fn oracle_mean_is_unbiased_for_btl() {
    let m = btl_model(&[1.0, 2.0, 3.0, 4.0], &complete(4)).unwrap();
    let pi = stationary_default(&canonical_markov(&m, None).unwrap()).unwrap().pi;
    let stats: Vec<f64> = (0..20_000u64).into_par_iter().map(|r| test_statistic(&draw(&m, 8, seed::derive(33, &[r])), &pi)).collect();
    let (mu, var) = mean_var(&stats);
    assert!(mu.abs() < 4.0 * (var / stats.len() as f64).sqrt(), "mean {mu}");
}

#[test]
fn oracle_variance_respects_bound() {
    let within = (0..100u64)
        .into_par_iter()
        .filter(|&c| {
            let n = 3 + (c % 5) as usize;
            let k = 4 + (c % 13) as usize;
            let m: Model = random_model(&complete(n), 0.3, seed::derive(34, &[c])).unwrap();
            let pi = stationary_default(&canonical_markov(&m, None).unwrap()).unwrap().pi;
            let d2 = separation(&m, &pi).0.powi(2);
            let stats: Vec<f64> = (0..2000u64).map(|r| test_statistic(&draw(&m, k, seed::derive(34, &[c, r])), &pi)).collect();
            let (_, var) = mean_var(&stats);
            let pmax = pi.iter().copied().fold(0.0, f64::max);
            let (kf, nf) = (k as f64, n as f64);
            var <= 4.0 * pmax * pmax / kf * d2 + 4.0 * nf * nf / (kf * kf) * pmax.powi(4)
        })
        .count();
    assert!(within >= 95, "{within}/100");
}

#[test]
fn permutation_threshold_tracks_model_pool_on_btl_data() {
    let (n, k) = (20, 12);
    let g = complete(n);
    let config = TestConfig::default();
    let gamma0 = quantile_threshold(&g, &TrialCounts::Uniform(k), &config, 35).unwrap();
    let m = btl_model(&random_btl_scores(n, 36), &g).unwrap();
    let p = permutation_threshold(&draw(&m, k, 37), &config, 38).unwrap();
    assert!((p.gamma2 - gamma0).abs() <= 0.25 * gamma0, "gamma2 {} gamma0 {gamma0}", p.gamma2);

    // Under skew-symmetric data the skew shuffle is redundant: gamma1 sits
    // near the quantile of fresh statistics.
    let fresh: Vec<f64> =
        (0..400u64).into_par_iter().map(|r| Scaling::NK(k).apply(n, plug_in_statistic(&draw(&m, k, seed::derive(39, &[r])), &config).unwrap())).collect();
    let direct = quantile(&fresh, config.q);
    assert!((p.gamma1 - direct).abs() <= 0.25 * direct, "gamma1 {} direct {direct}", p.gamma1);
}

fn dataset_strategy() -> impl Strategy<Value = ComparisonDataset> {
    (3usize..7, 1usize..6, any::<u64>()).prop_map(|(n, k, s)| {
        let m: Model = random_model(&complete(n), 0.2, s).unwrap();
        let mut d = draw(&m, k, s ^ 1);
        // Uneven counts on one pair.
        d.push(0, 1, true).unwrap();
        d
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn skew_shuffle_conserves_counts(d in dataset_strategy(), s in any::<u64>()) {
        let out = skew_shuffle(&d, s);
        for (i, j) in d.graph().undirected_edges() {
            prop_assert_eq!(out.k(i, j), d.k(i, j));
            prop_assert_eq!(out.k(j, i), d.k(j, i));
            // Wins by j over i in both orientations.
            prop_assert_eq!(out.z(i, j) + out.k(j, i) - out.z(j, i), d.z(i, j) + d.k(j, i) - d.z(j, i));
        }
    }

    #[test]
    fn cycle_shuffle_conserves_pair_totals(d in dataset_strategy(), s in any::<u64>(), cycles in 1usize..8) {
        let out = cycle_shuffle(&d, cycles, s);
        prop_assert_eq!(out.completed + out.abandoned, cycles);
        prop_assert_eq!(out.data.total_observations(), d.total_observations());
        for (i, j) in d.graph().undirected_edges() {
            prop_assert_eq!(out.data.k(i, j) + out.data.k(j, i), d.k(i, j) + d.k(j, i));
        }
    }

    #[test]
    fn decision_is_monotone(t in -1.0f64..1.0, gap in 0.0f64..1.0, threshold in -1.0f64..1.0) {
        if decide(t, threshold) == Hypothesis::H1 {
            prop_assert_eq!(decide(t + gap, threshold), Hypothesis::H1);
        }
        prop_assert_eq!(decide(threshold, threshold), Hypothesis::H1);
    }
}
