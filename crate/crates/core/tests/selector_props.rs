mod support;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{
    binary_configs, conditionally_independent, oracle_delta, oracle_delta_smoothed, random_planar_rows, rows_from_counts,
};
use wassfs::data::Dataset;
use wassfs::estimator::{correlation_matrix, top_l_neighbors};
use wassfs::ot::Measure;
use wassfs::selector::{delta_score, expected_selection_distance, select_features, SelectionConfig};
use wassfs::synth::random_dataset;
use wassfs::Metric;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i}")).collect()
}

fn exact_cfg(k: usize, n_c: usize) -> SelectionConfig<f64> {
    let mut c = SelectionConfig::new(k, n_c).with_measure(Measure::WassersteinExact);
    c.smoothing = 0.0;
    c
}

fn dataset(rows: &[Vec<u8>], y: Vec<usize>, n_c: usize) -> Dataset {
    Dataset::from_rows(rows, y, labels(n_c)).unwrap()
}

/// Y = X1 xor X2; X3 copies X1 with 10% flips; X4 is a fair coin.
fn xor_joint() -> (Vec<Vec<u8>>, Vec<usize>) {
    let mut counts = BTreeMap::new();
    for x in binary_configs(4) {
        let weight = if x[2] == x[0] { 9 } else { 1 };
        counts.insert((x.clone(), (x[0] ^ x[1]) as usize), weight);
    }
    rows_from_counts(&counts)
}

#[test]
fn redundant_and_noise_features_go_before_the_xor_pair() {
    let (rows, y) = xor_joint();
    let ds = dataset(&rows, y.clone(), 2);
    let metric = Metric::discrete(labels(2)).unwrap();
    let mut cfg = exact_cfg(2, 2);
    cfg.l = 2;
    let trace = select_features(&ds, &metric, &cfg).unwrap();
    let first = &trace.rounds[0];
    let score = |f: usize| first.scores.iter().find(|s| s.feature == f).unwrap().delta;
    // {X1, X2} determines Y, so X3 and X4 both score exactly zero against it
    // and the tie goes to the lower index.
    assert_eq!(score(2), 0.0);
    assert_eq!(score(3), 0.0);
    assert!(score(0) > 0.0 && score(1) > 0.0);
    assert_eq!(trace.elimination_order(), [2, 3]);
    assert_eq!(trace.retained, [0, 1]);
    for s in &first.scores {
        let oracle = oracle_delta(&rows, &y, s.feature, &s.neighbors, &metric.to_rows());
        assert!((s.delta - oracle).abs() <= 1e-9, "{}: {} vs {oracle}", s.feature, s.delta);
    }
}

#[test]
fn smoothed_scores_match_smoothed_oracle() {
    let (rows, y) = xor_joint();
    let ds = dataset(&rows, y.clone(), 2);
    let metric = Metric::discrete(labels(2)).unwrap();
    let cfg = SelectionConfig::new(2, 2).with_measure(Measure::WassersteinExact);
    for (f, g) in [(3, vec![0, 1]), (2, vec![0, 1]), (0, vec![2, 1]), (1, vec![0, 3])] {
        let delta = delta_score(&ds, f, &g, &metric, &cfg).unwrap();
        let oracle = oracle_delta_smoothed(&rows, &y, f, &g, &metric.to_rows(), cfg.smoothing);
        assert!((delta - oracle).abs() <= 1e-9, "{f}: {delta} vs {oracle}");
    }
}

/// Scores for a husky/cat/alaska toy: X1 separates husky from alaska, X2
/// separates husky from cat.
#[test]
fn kl_ties_where_wasserstein_prefers_the_near_confusion() {
    let rows = vec![vec![0, 0], vec![1, 0], vec![0, 1]];
    let ds = dataset(&rows, vec![0, 2, 1], 3);
    let metric = Metric::new(
        vec!["husky".into(), "cat".into(), "alaska".into()],
        vec![vec![0.0, 1.0, 0.2], vec![1.0, 0.0, 1.0], vec![0.2, 1.0, 0.0]],
    )
    .unwrap();
    let w = exact_cfg(1, 3);
    let kl = SelectionConfig { measure: Measure::Kl, ..w.clone() };
    // Keeping X2 only confuses husky with alaska; keeping X1 confuses husky with cat.
    let w_keep2 = expected_selection_distance(&ds, &[1], &metric, &w).unwrap();
    let w_keep1 = expected_selection_distance(&ds, &[0], &metric, &w).unwrap();
    let kl_keep2 = expected_selection_distance(&ds, &[1], &metric, &kl).unwrap();
    let kl_keep1 = expected_selection_distance(&ds, &[0], &metric, &kl).unwrap();
    assert_eq!(kl_keep1, kl_keep2);
    assert!((w_keep2 - 2.0 / 3.0 * 0.1).abs() < 1e-12);
    assert!((w_keep1 - 2.0 / 3.0 * 0.5).abs() < 1e-12);
    assert_eq!(select_features(&ds, &metric, &w).unwrap().retained, [1]);
}

fn random_counts_instance(rng: &mut ChaCha8Rng, independent: bool) -> (Vec<Vec<u8>>, Vec<usize>) {
    // Feature 2 is scored against G = {0, 1}; three classes.
    let mut counts = BTreeMap::new();
    for g in binary_configs(2) {
        let base: Vec<u64> = (0..3).map(|_| rng.gen_range(0..4)).collect();
        for xi in 0..2u8 {
            let mult = rng.gen_range(1..4);
            for (y, &b) in base.iter().enumerate() {
                let c = if independent { b * mult } else { rng.gen_range(0..4) };
                let row = vec![g[0], g[1], xi];
                if c > 0 {
                    counts.insert((row, y), c);
                }
            }
        }
    }
    if counts.is_empty() {
        counts.insert((vec![0, 0, 0], 0), 1);
    }
    rows_from_counts(&counts)
}

#[test]
fn zero_score_exactly_when_conditionally_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..100 {
        let d = random_planar_rows(3, 0.1, &mut rng);
        let metric = Metric::new(labels(3), d.clone()).unwrap();
        let (rows, y) = random_counts_instance(&mut rng, trial % 2 == 0);
        let ds = dataset(&rows, y.clone(), 3);
        let delta = delta_score(&ds, 2, &[0, 1], &metric, &exact_cfg(1, 3)).unwrap();
        let ci = conditionally_independent(&rows, &y, 2, &[0, 1], 3);
        assert_eq!(delta <= 1e-9, ci, "trial {trial}: delta {delta}");
        let oracle = oracle_delta(&rows, &y, 2, &[0, 1], &d);
        assert!((delta - oracle).abs() <= 1e-9);
    }
}

#[test]
fn redundant_extra_feature_does_not_change_the_distance() {
    // X3 is a fair coin independent of everything else.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts = BTreeMap::new();
    for x in binary_configs(2) {
        for y in 0..3 {
            let c = rng.gen_range(1..5);
            for z in 0..2u8 {
                counts.insert((vec![x[0], x[1], z], y), c);
            }
        }
    }
    let (rows, y) = rows_from_counts(&counts);
    let ds = dataset(&rows, y, 3);
    let metric = Metric::new(labels(3), random_planar_rows(3, 0.1, &mut rng)).unwrap();
    let cfg = exact_cfg(1, 3);
    let coarse = expected_selection_distance(&ds, &[0], &metric, &cfg).unwrap();
    let fine = expected_selection_distance(&ds, &[0, 2], &metric, &cfg).unwrap();
    assert!(fine <= coarse + 1e-12);
    assert!(expected_selection_distance(&ds, &[0, 1, 2], &metric, &cfg).unwrap().abs() < 1e-12);
}

#[test]
fn incremental_cache_changes_nothing() {
    for seed in 0..10 {
        let ds = random_dataset(300, 7, 3, 3, seed);
        let metric = Metric::new(labels(3), random_planar_rows(3, 0.1, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let on = SelectionConfig::new(2, 3);
        let off = SelectionConfig { incremental: false, ..on.clone() };
        let a = select_features(&ds, &metric, &on).unwrap();
        let b = select_features(&ds, &metric, &off).unwrap();
        assert_eq!(a.eliminated, b.eliminated);
        assert_eq!(a.rounds, b.rounds);
    }
}

#[test]
fn fixed_neighborhoods_only_shrink() {
    let ds = random_dataset(300, 7, 2, 3, 4);
    let metric = Metric::discrete(labels(3)).unwrap();
    let cfg = SelectionConfig {
        recompute_neighbors: false,
        ..SelectionConfig::new(2, 3)
    };
    let trace = select_features(&ds, &metric, &cfg).unwrap();
    let corr = correlation_matrix(&ds);
    let all: Vec<usize> = (0..7).collect();
    for round in &trace.rounds {
        for s in &round.scores {
            let initial = top_l_neighbors(&corr, s.feature, 3, &all);
            assert!(s.neighbors.iter().all(|f| initial.contains(f)));
        }
    }
    assert_eq!(trace.retained.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trace_invariants(seed in any::<u64>(), k in 1usize..6, measure in prop::sample::select(vec![Measure::WassersteinExact, Measure::WassersteinSinkhorn, Measure::Kl])) {
        let ds = random_dataset(200, 6, 3, 3, seed);
        let metric = Metric::new(labels(3), random_planar_rows(3, 0.1, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let cfg = SelectionConfig::new(k, 3).with_measure(measure);
        let trace = select_features(&ds, &metric, &cfg).unwrap();
        prop_assert_eq!(trace.retained.len(), k);
        let mut all: Vec<usize> = trace.elimination_order();
        all.extend(&trace.retained);
        all.sort_unstable();
        prop_assert_eq!(all, (0..6).collect::<Vec<_>>());
        prop_assert!(trace.eliminated.iter().all(|e| e.delta >= 0.0));
        prop_assert_eq!(select_features(&ds, &metric, &cfg).unwrap(), trace);
    }

    #[test]
    fn scores_scale_with_the_metric(seed in any::<u64>(), alpha in 0.1f64..10.0) {
        let ds = random_dataset(150, 4, 2, 3, seed);
        let metric = Metric::new(labels(3), random_planar_rows(3, 0.1, &mut ChaCha8Rng::seed_from_u64(seed))).unwrap();
        let scaled = metric.scaled(alpha).unwrap();
        let cfg = SelectionConfig::new(1, 3);
        let a = delta_score(&ds, 0, &[1, 2], &metric, &cfg).unwrap();
        let b = delta_score(&ds, 0, &[1, 2], &scaled, &cfg).unwrap();
        prop_assert!((alpha * a - b).abs() <= 1e-9 * alpha.max(1.0));
        let e = expected_selection_distance(&ds, &[1], &metric, &cfg).unwrap();
        let f = expected_selection_distance(&ds, &[1], &scaled, &cfg).unwrap();
        prop_assert!((alpha * e - f).abs() <= 1e-9 * alpha.max(1.0));
    }

    #[test]
    fn smoothed_scores_match_oracle_without_smoothing(seed in any::<u64>()) {
        let ds = random_dataset(120, 4, 2, 3, seed);
        let d = random_planar_rows(3, 0.1, &mut ChaCha8Rng::seed_from_u64(seed));
        let metric = Metric::new(labels(3), d.clone()).unwrap();
        let rows: Vec<Vec<u8>> = ds.rows().map(<[u8]>::to_vec).collect();
        let a = delta_score(&ds, 3, &[0, 1], &metric, &exact_cfg(1, 3)).unwrap();
        prop_assert!((a - oracle_delta(&rows, ds.labels(), 3, &[0, 1], &d)).abs() <= 1e-9);
    }
}
