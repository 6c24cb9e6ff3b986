//! Label noise: injection, clean-vs-noisy distances and their bounds.

mod theorems;

pub use theorems::{
    population_epsilon1, population_epsilon2, random_joint, random_planar_metric, verify_theorems, LabelChannel,
    PopulationJoint, TheoremSpec, TheoremSummary, TrialReport, VerificationReport, MAX_CLASSES, MAX_FEATURES,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::estimator::conditional_table_with_labels;
use crate::metric::GroundMetric;
use crate::ot::{exact_wasserstein, OtError};
use crate::scalar::Real;
use crate::selector::{expected_selection_distance, SelectError, SelectionConfig, DEFAULT_CONFIG_CAP};

/// Classes within this distance of the true label are flip targets.
pub const DEFAULT_NEIGHBOR_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("flip probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("neighbor threshold must be finite and nonnegative, got {0}")]
    InvalidThreshold(f64),
    #[error("transition matrix must be {expected}x{expected}")]
    TransitionShape { expected: usize },
    #[error("transition row {row} is not a probability vector (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("transition model needs a matrix")]
    MissingTransition,
    #[error("joint label counts are all zero or invalid")]
    InvalidCounts,
    #[error("clean and noisy data differ: {0}")]
    Mismatch(String),
    #[error("{distinct} distinct feature configurations exceed the cap of {cap}")]
    ConfigCap { distinct: usize, cap: usize },
    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Select(#[from] SelectError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// With probability `p`, move to a uniformly chosen nearby class.
    #[default]
    NeighborFlip,
    /// Resample every label from a row of a class transition matrix.
    Nar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    pub p: f64,
    pub neighbor_threshold: f64,
    pub transition: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn neighbor_flip(p: f64, seed: u64) -> Self {
        Self {
            model: NoiseModel::NeighborFlip,
            p,
            neighbor_threshold: DEFAULT_NEIGHBOR_THRESHOLD,
            transition: None,
            seed,
        }
    }

    pub fn nar(transition: Vec<Vec<f64>>, seed: u64) -> Self {
        Self {
            model: NoiseModel::Nar,
            p: 0.0,
            neighbor_threshold: DEFAULT_NEIGHBOR_THRESHOLD,
            transition: Some(transition),
            seed,
        }
    }

    pub fn apply<F: Real>(&self, ds: &Dataset, metric: &GroundMetric<F>) -> Result<Dataset, NoiseError> {
        match self.model {
            NoiseModel::NeighborFlip => flip_labels(ds, metric, self.p, self.neighbor_threshold, self.seed),
            NoiseModel::Nar => {
                let t = self.transition.as_ref().ok_or(NoiseError::MissingTransition)?;
                apply_nar(ds, t, self.seed)
            }
        }
    }
}

/// Each sample independently, with probability `p`, takes a label drawn
/// uniformly from the classes `c` with `0 < d(label, c) <= threshold`.
/// Samples without such a class keep their label.
pub fn flip_labels<F: Real>(
    ds: &Dataset,
    metric: &GroundMetric<F>,
    p: f64,
    threshold: f64,
    seed: u64,
) -> Result<Dataset, NoiseError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NoiseError::InvalidProbability(p));
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(NoiseError::InvalidThreshold(threshold));
    }
    check_classes(ds, metric)?;
    let thr = F::lit(threshold);
    let neighbors: Vec<Vec<usize>> = (0..metric.len()).map(|c| metric.neighbors_within(c, thr)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = ds
        .labels()
        .iter()
        .map(|&y| {
            let u: f64 = rng.gen();
            let targets = &neighbors[y];
            if u < p && !targets.is_empty() {
                targets[rng.gen_range(0..targets.len())]
            } else {
                y
            }
        })
        .collect();
    Ok(ds.with_labels(labels)?)
}

fn check_classes<F: Real>(ds: &Dataset, metric: &GroundMetric<F>) -> Result<(), NoiseError> {
    if ds.n_classes() != metric.len() {
        return Err(NoiseError::Mismatch(format!(
            "{} dataset classes, {} metric classes",
            ds.n_classes(),
            metric.len()
        )));
    }
    Ok(())
}

pub(crate) fn validate_transition(t: &[Vec<f64>], n_c: usize) -> Result<(), NoiseError> {
    if t.len() != n_c || t.iter().any(|r| r.len() != n_c) {
        return Err(NoiseError::TransitionShape { expected: n_c });
    }
    for (row, r) in t.iter().enumerate() {
        let sum: f64 = r.iter().sum();
        if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(NoiseError::NotStochastic { row, sum });
        }
    }
    Ok(())
}

fn sample_row(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (c, &w) in row.iter().enumerate() {
        acc += w;
        if u < acc {
            return c;
        }
    }
    // Rounding left a sliver above the last cumulative sum.
    row.iter().rposition(|&w| w > 0.0).unwrap_or(row.len() - 1)
}

/// Resamples every label from `transition[label]`.
pub fn apply_nar(ds: &Dataset, transition: &[Vec<f64>], seed: u64) -> Result<Dataset, NoiseError> {
    validate_transition(transition, ds.n_classes())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = ds.labels().iter().map(|&y| sample_row(&transition[y], &mut rng)).collect();
    Ok(ds.with_labels(labels)?)
}

/// Resamples every label from `channel(row, label)`, a distribution over
/// classes that may depend on the features.
pub fn apply_nnar<C>(ds: &Dataset, channel: C, seed: u64) -> Result<Dataset, NoiseError>
where
    C: Fn(&[u8], usize) -> Vec<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_c = ds.n_classes();
    let mut labels = Vec::with_capacity(ds.n_samples());
    for (row, &y) in ds.rows().zip(ds.labels()) {
        let dist = channel(row, y);
        let sum: f64 = dist.iter().sum();
        if dist.len() != n_c || dist.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(NoiseError::NotStochastic { row: y, sum });
        }
        labels.push(sample_row(&dist, &mut rng));
    }
    Ok(ds.with_labels(labels)?)
}

fn check_paired(clean: &Dataset, noisy: &Dataset) -> Result<(), NoiseError> {
    if clean.n_samples() != noisy.n_samples() || clean.n_features() != noisy.n_features() {
        return Err(NoiseError::Mismatch("shapes differ".into()));
    }
    if clean.features_flat() != noisy.features_flat() {
        return Err(NoiseError::Mismatch("feature rows differ".into()));
    }
    if clean.n_classes() != noisy.n_classes() {
        return Err(NoiseError::Mismatch("class lists differ".into()));
    }
    Ok(())
}

/// Expected exact distance between the clean and noisy class conditionals
/// over `features` (all features gives ε₁, a subset θ gives ε₂(θ)).
pub fn conditional_gap<F: Real>(
    clean: &Dataset,
    noisy: &Dataset,
    features: &[usize],
    metric: &GroundMetric<F>,
    smoothing: F,
    cap: usize,
) -> Result<F, NoiseError> {
    check_paired(clean, noisy)?;
    check_classes(clean, metric)?;
    if let Some(&bad) = features.iter().find(|&&f| f >= clean.n_features()) {
        return Err(NoiseError::InvalidSpec {
            field: "features",
            reason: format!("index {bad} out of range"),
        });
    }
    let a = conditional_table_with_labels(clean, clean.labels(), features, smoothing);
    if a.len() > cap {
        return Err(NoiseError::ConfigCap { distinct: a.len(), cap });
    }
    let b = conditional_table_with_labels(clean, noisy.labels(), features, smoothing);
    let mut total = F::zero();
    for (x, y) in a.entries().iter().zip(b.entries()) {
        debug_assert_eq!(x.key, y.key);
        total += x.weight * exact_wasserstein(&x.dist, &y.dist, metric)?.cost();
    }
    Ok(total)
}

/// ε₁: expected exact distance between `p(Y | x)` and `p(Ỹ | x)` over the
/// observed full configurations.
pub fn epsilon1<F: Real>(
    clean: &Dataset,
    noisy: &Dataset,
    metric: &GroundMetric<F>,
    smoothing: F,
) -> Result<F, NoiseError> {
    let all: Vec<usize> = (0..clean.n_features()).collect();
    conditional_gap(clean, noisy, &all, metric, smoothing, DEFAULT_CONFIG_CAP)
}

/// Counts of (clean label, noisy label) pairs.
pub fn joint_label_counts(clean: &Dataset, noisy: &Dataset) -> Result<Vec<Vec<usize>>, NoiseError> {
    check_paired(clean, noisy)?;
    let n_c = clean.n_classes();
    let mut counts = vec![vec![0usize; n_c]; n_c];
    for (&y, &z) in clean.labels().iter().zip(noisy.labels()) {
        counts[y][z] += 1;
    }
    Ok(counts)
}

/// `sum_ij p(c_i, c̃_j) D_ij` for the normalized joint of `counts`.
pub fn epsilon1_upper_bound<F: Real>(counts: &[Vec<F>], metric: &GroundMetric<F>) -> Result<F, NoiseError> {
    let n = metric.len();
    if counts.len() != n || counts.iter().any(|r| r.len() != n) {
        return Err(NoiseError::TransitionShape { expected: n });
    }
    let mut total = F::zero();
    let mut weighted = F::zero();
    for (i, row) in counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if !(c >= F::zero()) || !c.is_finite() {
                return Err(NoiseError::InvalidCounts);
            }
            total += c;
            weighted += c * metric.get(i, j);
        }
    }
    if total <= F::zero() {
        return Err(NoiseError::InvalidCounts);
    }
    Ok(weighted / total)
}

/// The bound for a paired clean/noisy dataset.
pub fn epsilon1_bound_from_labels<F: Real>(
    clean: &Dataset,
    noisy: &Dataset,
    metric: &GroundMetric<F>,
) -> Result<F, NoiseError> {
    let counts: Vec<Vec<F>> = joint_label_counts(clean, noisy)?
        .into_iter()
        .map(|r| r.into_iter().map(|c| F::from_usize(c).expect("count fits in scalar")).collect())
        .collect();
    epsilon1_upper_bound(&counts, metric)
}

/// Clean-vs-noisy quantities for one dataset, with both optima found by
/// exhaustive search over feature sets of size `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseDiagnostics {
    pub epsilon1: f64,
    /// ε₂ at the noisy optimum.
    pub epsilon2: f64,
    /// d₁ at the noisy optimum.
    pub d1_theta: f64,
    /// d₂ at the noisy optimum.
    pub d2_theta: f64,
    pub epsilon1_bound: f64,
    pub theta_star_clean: Vec<usize>,
    pub theta_star_noisy: Vec<usize>,
    pub regret: f64,
}

/// Refuse exhaustive diagnostics over more subsets than this.
pub const MAX_SUBSETS: usize = 100_000;

pub(crate) fn k_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for f in start..=m - (k - cur.len()) {
            cur.push(f);
            rec(f + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

pub(crate) fn binomial(m: usize, k: usize) -> usize {
    let k = k.min(m - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(m - i) / (i + 1))
}

pub fn diagnose<F: Real>(
    clean: &Dataset,
    noisy: &Dataset,
    metric: &GroundMetric<F>,
    k: usize,
    smoothing: F,
) -> Result<NoiseDiagnostics, NoiseError> {
    check_paired(clean, noisy)?;
    let m = clean.n_features();
    if k == 0 || k > m {
        return Err(NoiseError::InvalidSpec {
            field: "k",
            reason: format!("must satisfy 1 <= k <= {m}"),
        });
    }
    if binomial(m, k) > MAX_SUBSETS {
        return Err(NoiseError::InvalidSpec {
            field: "k",
            reason: format!("{} subsets exceed the limit of {MAX_SUBSETS}", binomial(m, k)),
        });
    }
    let mut cfg = SelectionConfig::<F>::new(k, metric.len()).with_measure(crate::ot::Measure::WassersteinExact);
    cfg.smoothing = smoothing;
    let argmin = |ds: &Dataset| -> Result<(Vec<usize>, F), NoiseError> {
        let mut best: Option<(Vec<usize>, F)> = None;
        for theta in k_subsets(m, k) {
            let v = expected_selection_distance(ds, &theta, metric, &cfg)?;
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((theta, v));
            }
        }
        Ok(best.expect("at least one subset"))
    };
    let (theta1, d1_opt) = argmin(clean)?;
    let (theta2, d2_opt) = argmin(noisy)?;
    let d1_at_2 = expected_selection_distance(clean, &theta2, metric, &cfg)?;
    Ok(NoiseDiagnostics {
        epsilon1: epsilon1(clean, noisy, metric, smoothing)?.as_f64(),
        epsilon2: conditional_gap(clean, noisy, &theta2, metric, smoothing, DEFAULT_CONFIG_CAP)?.as_f64(),
        d1_theta: d1_at_2.as_f64(),
        d2_theta: d2_opt.as_f64(),
        epsilon1_bound: epsilon1_bound_from_labels(clean, noisy, metric)?.as_f64(),
        theta_star_clean: theta1,
        theta_star_noisy: theta2,
        regret: (d1_at_2 - d1_opt).as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn chain_metric() -> GroundMetric<f64> {
        // 0 - 1 close, 2 far from both.
        GroundMetric::new(
            classes(3),
            vec![vec![0.0, 0.2, 1.0], vec![0.2, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
        )
        .unwrap()
    }

    fn dataset(n: usize, labels: impl Fn(usize) -> usize, n_c: usize) -> Dataset {
        let rows: Vec<Vec<u8>> = (0..n).map(|i| vec![(i % 2) as u8, ((i / 2) % 2) as u8]).collect();
        Dataset::from_rows(&rows, (0..n).map(labels).collect(), classes(n_c)).unwrap()
    }

    #[test]
    fn zero_probability_is_identity() {
        let ds = dataset(100, |i| i % 3, 3);
        assert_eq!(flip_labels(&ds, &chain_metric(), 0.0, 0.2, 5).unwrap(), ds);
    }

    #[test]
    fn certain_flip_moves_to_neighbors_only() {
        let ds = dataset(300, |i| i % 3, 3);
        let noisy = flip_labels(&ds, &chain_metric(), 1.0, 0.2, 5).unwrap();
        for (&y, &z) in ds.labels().iter().zip(noisy.labels()) {
            match y {
                0 => assert_eq!(z, 1),
                1 => assert_eq!(z, 0),
                // No class within 0.2 of class 2.
                _ => assert_eq!(z, 2),
            }
        }
        assert_eq!(noisy.features_flat(), ds.features_flat());
    }

    #[test]
    fn flip_rate_concentrates() {
        let metric = GroundMetric::<f64>::discrete(classes(2)).unwrap();
        let ds = dataset(10_000, |i| i % 2, 2);
        let noisy = flip_labels(&ds, &metric, 0.3, 1.0, 42).unwrap();
        let flipped = ds.labels().iter().zip(noisy.labels()).filter(|(a, b)| a != b).count();
        let rate = flipped as f64 / 10_000.0;
        assert!((rate - 0.3).abs() <= 3.0 * (0.3f64 * 0.7 / 10_000.0).sqrt(), "{rate}");
        assert_eq!(flip_labels(&ds, &metric, 0.3, 1.0, 42).unwrap(), noisy);
    }

    #[test]
    fn nar_identity_and_rates() {
        let ds = dataset(10_000, |_| 0, 2);
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(apply_nar(&ds, &id, 1).unwrap(), ds);
        let t = vec![vec![0.9, 0.1], vec![0.2, 0.8]];
        let noisy = apply_nar(&ds, &t, 1).unwrap();
        let ones = noisy.labels().iter().filter(|&&l| l == 1).count() as f64 / 10_000.0;
        assert!((ones - 0.1).abs() <= 3.0 * (0.1f64 * 0.9 / 10_000.0).sqrt(), "{ones}");
        let bad = vec![vec![0.9, 0.2], vec![0.2, 0.8]];
        assert!(matches!(apply_nar(&ds, &bad, 1), Err(NoiseError::NotStochastic { row: 0, .. })));
    }

    #[test]
    fn nar_uniform_rows_give_uniform_marginal() {
        let ds = dataset(10_000, |i| i % 3, 3);
        let t = vec![vec![1.0 / 3.0; 3]; 3];
        let noisy = apply_nar(&ds, &t, 9).unwrap();
        let sigma = (1.0f64 / 3.0 * 2.0 / 3.0 / 10_000.0).sqrt();
        for c in noisy.class_counts() {
            assert!((c as f64 / 10_000.0 - 1.0 / 3.0).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn nnar_hook_can_depend_on_features() {
        let ds = dataset(8, |_| 0, 2);
        let noisy = apply_nnar(&ds, |row, _| if row[0] == 1 { vec![0.0, 1.0] } else { vec![1.0, 0.0] }, 3).unwrap();
        for (row, &z) in noisy.rows().zip(noisy.labels()) {
            assert_eq!(z, row[0] as usize);
        }
    }

    #[test]
    fn epsilon1_examples() {
        let metric = GroundMetric::<f64>::new(classes(2), vec![vec![0.0, 0.7], vec![0.7, 0.0]]).unwrap();
        let rows = vec![vec![0u8]; 4];
        let clean = Dataset::from_rows(&rows, vec![0; 4], classes(2)).unwrap();
        let noisy = clean.with_labels(vec![1; 4]).unwrap();
        assert!((epsilon1(&clean, &noisy, &metric, 0.0).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(epsilon1(&clean, &clean, &metric, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn epsilon1_two_configurations() {
        // x = 0: clean [1, 1], noisy [2, 0]: W = 0.5 * 0.7.
        // x = 1: clean [0, 2], noisy [0, 2]: W = 0.
        let metric = GroundMetric::<f64>::new(classes(2), vec![vec![0.0, 0.7], vec![0.7, 0.0]]).unwrap();
        let rows = vec![vec![0u8], vec![0], vec![1], vec![1]];
        let clean = Dataset::from_rows(&rows, vec![0, 1, 1, 1], classes(2)).unwrap();
        let noisy = clean.with_labels(vec![0, 0, 1, 1]).unwrap();
        let e = epsilon1(&clean, &noisy, &metric, 0.0).unwrap();
        assert!((e - 0.5 * 0.35).abs() < 1e-12, "{e}");
    }

    #[test]
    fn bound_examples() {
        let metric = GroundMetric::<f64>::discrete(classes(2)).unwrap();
        let diag = vec![vec![3.0, 0.0], vec![0.0, 2.0]];
        assert_eq!(epsilon1_upper_bound(&diag, &metric).unwrap(), 0.0);
        let joint = vec![vec![0.85, 0.10], vec![0.05, 0.0]];
        assert!((epsilon1_upper_bound(&joint, &metric).unwrap() - 0.15).abs() < 1e-12);
        assert!(matches!(
            epsilon1_upper_bound(&[vec![0.0, 0.0], vec![0.0, 0.0]], &metric),
            Err(NoiseError::InvalidCounts)
        ));
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(k_subsets(4, 2).len(), 6);
        assert_eq!(k_subsets(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(30, 5), 142_506);
    }

    #[test]
    fn diagnostics_respect_the_theorems() {
        let rows: Vec<Vec<u8>> = (0..64).map(|i| (0..3).map(|b| ((i >> b) & 1) as u8).collect()).collect();
        let labels = (0..64).map(|i| (i & 1) + ((i >> 1) & 1)).collect();
        let clean = Dataset::from_rows(&rows, labels, classes(3)).unwrap();
        let noisy = flip_labels(&clean, &chain_metric(), 0.4, 0.2, 8).unwrap();
        let d = diagnose(&clean, &noisy, &chain_metric(), 1, 0.0).unwrap();
        assert!(d.epsilon2 <= d.epsilon1 + 1e-7);
        assert!(d.regret >= -1e-12 && d.regret <= 4.0 * d.epsilon1 + 1e-7);
        assert!(d.epsilon1 <= d.epsilon1_bound + 1e-7);
    }
}
