//! Markov-blanket backward elimination.
//!
//! Each round scores every remaining feature `X_i` by
//!
//! ```text
//! delta(X_i) = sum over observed (x_G, x_i) of  p(x_G, x_i) * M[p(Y | x_G, x_i), p(Y | x_G)]
//! ```
//!
//! where `G` holds the `l` remaining features most correlated with `X_i`
//! and `M` is the configured discrepancy. The feature with the smallest
//! score carries the least class information beyond its neighborhood and
//! is removed. Rounds continue until `k` features remain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::estimator::{conditional_table, config_key, correlation_matrix, top_l_neighbors, CorrelationMatrix};
use crate::metric::GroundMetric;
use crate::ot::{Discrepancy, KlMode, Measure, OtError, SinkhornConfig};
use crate::scalar::Real;

/// Smoothing added to every class count unless configured otherwise.
pub const DEFAULT_SMOOTHING: f64 = 0.5;
/// Conditioning neighborhood size unless configured otherwise.
pub const DEFAULT_L: usize = 3;
/// Refuse expected-distance computations over more distinct full configurations.
pub const DEFAULT_CONFIG_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("K must satisfy 1 <= K <= M = {m}, got {k}")]
    InvalidK { k: usize, m: usize },
    #[error("L must be at least 1")]
    InvalidL,
    #[error("smoothing must be finite and nonnegative, got {0}")]
    InvalidSmoothing(f64),
    #[error("dataset has {dataset} classes but the metric has {metric}")]
    MetricMismatch { dataset: usize, metric: usize },
    #[error("feature {0} is in its own conditioning set")]
    SelfConditioning(usize),
    #[error("feature index {index} out of range for {m} features")]
    FeatureOutOfRange { index: usize, m: usize },
    #[error("{distinct} distinct feature configurations exceed the cap of {cap}")]
    ConfigCap { distinct: usize, cap: usize },
    #[error(transparent)]
    Ot(#[from] OtError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig<F = f64> {
    /// Number of features to keep.
    pub k: usize,
    /// Conditioning neighborhood size.
    pub l: usize,
    pub measure: Measure,
    pub sinkhorn: SinkhornConfig<F>,
    pub kl: KlMode<F>,
    pub smoothing: F,
    /// Re-pick each neighborhood among the remaining features every round.
    /// When off, neighborhoods are picked once and only shrink as their
    /// members are eliminated.
    pub recompute_neighbors: bool,
    /// Reuse a feature's score while its neighborhood is unchanged.
    pub incremental: bool,
    pub config_cap: usize,
}

impl<F: Real> SelectionConfig<F> {
    /// Defaults for keeping `k` features over `n_classes` classes.
    pub fn new(k: usize, n_classes: usize) -> Self {
        Self {
            k,
            l: DEFAULT_L,
            measure: Measure::default_for(n_classes),
            sinkhorn: SinkhornConfig::default(),
            kl: KlMode::default(),
            smoothing: F::lit(DEFAULT_SMOOTHING),
            recompute_neighbors: true,
            incremental: true,
            config_cap: DEFAULT_CONFIG_CAP,
        }
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    pub fn discrepancy(&self) -> Discrepancy<F> {
        Discrepancy {
            measure: self.measure,
            sinkhorn: self.sinkhorn,
            kl: self.kl,
        }
    }

    fn validate(&self, m: usize) -> Result<(), SelectError> {
        if self.k == 0 || self.k > m {
            return Err(SelectError::InvalidK { k: self.k, m });
        }
        if self.l == 0 {
            return Err(SelectError::InvalidL);
        }
        if !(self.smoothing >= F::zero()) || !self.smoothing.is_finite() {
            return Err(SelectError::InvalidSmoothing(self.smoothing.as_f64()));
        }
        if self.measure == Measure::WassersteinSinkhorn {
            self.sinkhorn.validate()?;
        }
        Ok(())
    }
}

fn check_metric<F: Real>(ds: &Dataset, metric: &GroundMetric<F>) -> Result<(), SelectError> {
    if ds.n_classes() != metric.len() {
        return Err(SelectError::MetricMismatch {
            dataset: ds.n_classes(),
            metric: metric.len(),
        });
    }
    Ok(())
}

/// Expected discrepancy between `p(Y | X_G, X_i)` and `p(Y | X_G)`.
pub fn delta_score<F: Real>(
    ds: &Dataset,
    feature: usize,
    neighbors: &[usize],
    metric: &GroundMetric<F>,
    cfg: &SelectionConfig<F>,
) -> Result<F, SelectError> {
    check_metric(ds, metric)?;
    let m = ds.n_features();
    if let Some(&bad) = neighbors.iter().chain(std::iter::once(&feature)).find(|&&f| f >= m) {
        return Err(SelectError::FeatureOutOfRange { index: bad, m });
    }
    if neighbors.contains(&feature) {
        return Err(SelectError::SelfConditioning(feature));
    }
    let mut joint_set = neighbors.to_vec();
    joint_set.push(feature);
    let joint = conditional_table(ds, &joint_set, cfg.smoothing);
    let base = conditional_table(ds, neighbors, cfg.smoothing);
    let measure = cfg.discrepancy();
    let mut delta = F::zero();
    for entry in joint.entries() {
        let parent = base
            .get(&entry.key[..neighbors.len()])
            .expect("every joint configuration has its marginal configuration");
        delta += entry.weight * measure.eval(&entry.dist, &parent.dist, metric)?;
    }
    Ok(delta)
}

/// Expected discrepancy between `p(Y | X)` and `p(Y | X_theta)` over the
/// observed full configurations.
pub fn expected_selection_distance<F: Real>(
    ds: &Dataset,
    theta: &[usize],
    metric: &GroundMetric<F>,
    cfg: &SelectionConfig<F>,
) -> Result<F, SelectError> {
    check_metric(ds, metric)?;
    let m = ds.n_features();
    if let Some(&bad) = theta.iter().find(|&&f| f >= m) {
        return Err(SelectError::FeatureOutOfRange { index: bad, m });
    }
    let all: Vec<usize> = (0..m).collect();
    let full = conditional_table(ds, &all, cfg.smoothing);
    if full.len() > cfg.config_cap {
        return Err(SelectError::ConfigCap {
            distinct: full.len(),
            cap: cfg.config_cap,
        });
    }
    let mut theta = theta.to_vec();
    theta.sort_unstable();
    theta.dedup();
    let reduced = conditional_table(ds, &theta, cfg.smoothing);
    let measure = cfg.discrepancy();
    let mut total = F::zero();
    for entry in full.entries() {
        let key = config_key(&entry.key, &theta);
        let coarse = reduced.get(&key).expect("restricted configuration observed");
        total += entry.weight * measure.eval(&entry.dist, &coarse.dist, metric)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EliminationReason {
    /// Removed before scoring: the feature never varies.
    Constant,
    /// Smallest score in its round.
    MinDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub feature: usize,
    pub delta: f64,
    pub round: usize,
    pub reason: EliminationReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: usize,
    pub delta: f64,
    pub neighbors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub scores: Vec<FeatureScore>,
    pub eliminated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub k: usize,
    pub l: usize,
    pub measure: Measure,
    pub smoothing: f64,
    pub lambda: f64,
    pub sinkhorn_tol: f64,
    pub sinkhorn_max_iter: usize,
    pub recompute_neighbors: bool,
    pub incremental: bool,
}

impl<F: Real> From<&SelectionConfig<F>> for ConfigEcho {
    fn from(cfg: &SelectionConfig<F>) -> Self {
        Self {
            k: cfg.k,
            l: cfg.l,
            measure: cfg.measure,
            smoothing: cfg.smoothing.as_f64(),
            lambda: cfg.sinkhorn.lambda.as_f64(),
            sinkhorn_tol: cfg.sinkhorn.tol.as_f64(),
            sinkhorn_max_iter: cfg.sinkhorn.max_iter,
            recompute_neighbors: cfg.recompute_neighbors,
            incremental: cfg.incremental,
        }
    }
}

/// Ordered record of a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub n_features: usize,
    pub config: ConfigEcho,
    pub eliminated: Vec<Elimination>,
    /// Kept feature indices, ascending.
    pub retained: Vec<usize>,
    pub rounds: Vec<RoundRecord>,
}

impl SelectionTrace {
    pub fn elimination_order(&self) -> Vec<usize> {
        self.eliminated.iter().map(|e| e.feature).collect()
    }

    /// Features still present when `k` remained. Valid for `k` between the
    /// final retained count and the original feature count.
    pub fn retained_at(&self, k: usize) -> Option<Vec<usize>> {
        if k < self.retained.len() || k > self.n_features {
            return None;
        }
        let extra = k - self.retained.len();
        let mut set = self.retained.clone();
        set.extend(self.eliminated[self.eliminated.len() - extra..].iter().map(|e| e.feature));
        set.sort_unstable();
        Some(set)
    }
}

/// Runs backward elimination down to `cfg.k` features.
pub fn select_features<F: Real>(
    ds: &Dataset,
    metric: &GroundMetric<F>,
    cfg: &SelectionConfig<F>,
) -> Result<SelectionTrace, SelectError> {
    check_metric(ds, metric)?;
    let m = ds.n_features();
    cfg.validate(m)?;
    let corr = correlation_matrix(ds);
    select_with_correlation(ds, metric, cfg, &corr)
}

/// As [`select_features`] with precomputed correlations.
pub fn select_with_correlation<F: Real>(
    ds: &Dataset,
    metric: &GroundMetric<F>,
    cfg: &SelectionConfig<F>,
    corr: &CorrelationMatrix,
) -> Result<SelectionTrace, SelectError> {
    check_metric(ds, metric)?;
    let m = ds.n_features();
    cfg.validate(m)?;
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut eliminated = Vec::new();
    let mut round = 0usize;

    for f in corr.constant_features() {
        if remaining.len() <= cfg.k {
            break;
        }
        remaining.retain(|&x| x != f);
        eliminated.push(Elimination {
            feature: f,
            delta: 0.0,
            round,
            reason: EliminationReason::Constant,
        });
        round += 1;
    }

    let fixed: Vec<Vec<usize>> = if cfg.recompute_neighbors {
        Vec::new()
    } else {
        (0..m).map(|i| top_l_neighbors(corr, i, cfg.l, &remaining)).collect()
    };
    let mut cache: Vec<Option<(Vec<usize>, F)>> = vec![None; m];
    let mut rounds = Vec::new();

    while remaining.len() > cfg.k {
        let neighborhoods: Vec<Vec<usize>> = remaining
            .iter()
            .map(|&i| {
                if cfg.recompute_neighbors {
                    top_l_neighbors(corr, i, cfg.l, &remaining)
                } else {
                    fixed[i].iter().copied().filter(|f| remaining.contains(f)).collect()
                }
            })
            .collect();
        let deltas: Vec<F> = remaining
            .par_iter()
            .zip(neighborhoods.par_iter())
            .map(|(&i, g)| match &cache[i] {
                Some((cached_g, d)) if cfg.incremental && cached_g == g => Ok(*d),
                _ => delta_score(ds, i, g, metric, cfg),
            })
            .collect::<Result<_, _>>()?;

        let mut best = 0usize;
        for (pos, d) in deltas.iter().enumerate() {
            if *d < deltas[best] {
                best = pos;
            }
        }
        let victim = remaining[best];
        let victim_delta = deltas[best];

        let scores = remaining
            .iter()
            .zip(&neighborhoods)
            .zip(&deltas)
            .map(|((&feature, g), d)| FeatureScore {
                feature,
                delta: d.as_f64(),
                neighbors: g.clone(),
            })
            .collect();
        for ((&i, g), &d) in remaining.iter().zip(neighborhoods).zip(&deltas) {
            cache[i] = Some((g, d));
        }
        rounds.push(RoundRecord {
            round,
            scores,
            eliminated: victim,
        });
        eliminated.push(Elimination {
            feature: victim,
            delta: victim_delta.as_f64(),
            round,
            reason: EliminationReason::MinDelta,
        });
        remaining.remove(best);
        round += 1;
    }

    Ok(SelectionTrace {
        n_features: m,
        config: cfg.into(),
        eliminated,
        retained: remaining,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn zero_one(n: usize) -> GroundMetric<f64> {
        GroundMetric::discrete(classes(n)).unwrap()
    }

    /// Every (x1, x2) pair once: Y = X1, X2 independent.
    fn y_equals_x1() -> Dataset {
        let rows = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        Dataset::from_rows(&rows, vec![0, 0, 1, 1], classes(2)).unwrap()
    }

    fn cfg(k: usize) -> SelectionConfig<f64> {
        let mut c = SelectionConfig::new(k, 2);
        c.smoothing = 0.0;
        c
    }

    #[test]
    fn informative_feature_scores_half() {
        // Each (x2, x1) configuration compares a point mass with [0.5, 0.5].
        let d = delta_score(&y_equals_x1(), 0, &[1], &zero_one(2), &cfg(1)).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_and_independent_features_score_zero() {
        let rows = vec![vec![0, 0, 0], vec![0, 0, 1], vec![1, 1, 0], vec![1, 1, 1]];
        let ds = Dataset::from_rows(&rows, vec![0, 0, 1, 1], classes(2)).unwrap();
        let metric = zero_one(2);
        assert_eq!(delta_score(&ds, 1, &[0], &metric, &cfg(1)).unwrap(), 0.0);
        assert_eq!(delta_score(&ds, 2, &[0], &metric, &cfg(1)).unwrap(), 0.0);
    }

    #[test]
    fn self_conditioning_rejected() {
        assert!(matches!(
            delta_score(&y_equals_x1(), 0, &[0], &zero_one(2), &cfg(1)),
            Err(SelectError::SelfConditioning(0))
        ));
    }

    #[test]
    fn expected_distance_examples() {
        let ds = y_equals_x1();
        let metric = zero_one(2);
        let c = cfg(1);
        assert_eq!(expected_selection_distance(&ds, &[0, 1], &metric, &c).unwrap(), 0.0);
        let v = expected_selection_distance(&ds, &[1], &metric, &c).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        let capped = SelectionConfig { config_cap: 2, ..c };
        assert!(matches!(
            expected_selection_distance(&ds, &[1], &metric, &capped),
            Err(SelectError::ConfigCap { distinct: 4, cap: 2 })
        ));
    }

    #[test]
    fn k_equal_m_eliminates_nothing() {
        let t = select_features(&y_equals_x1(), &zero_one(2), &cfg(2)).unwrap();
        assert!(t.eliminated.is_empty());
        assert_eq!(t.retained, [0, 1]);
    }

    #[test]
    fn invalid_k() {
        for k in [0, 3] {
            assert!(matches!(
                select_features(&y_equals_x1(), &zero_one(2), &cfg(k)),
                Err(SelectError::InvalidK { .. })
            ));
        }
    }

    #[test]
    fn identical_copies_keep_the_highest_index() {
        let rows: Vec<Vec<u8>> = (0..8).map(|i| vec![(i % 2) as u8; 4]).collect();
        let labels = (0..8).map(|i| (i / 2) % 2).collect();
        let ds = Dataset::from_rows(&rows, labels, classes(2)).unwrap();
        let t = select_features(&ds, &zero_one(2), &cfg(1)).unwrap();
        assert_eq!(t.elimination_order(), [0, 1, 2]);
        assert_eq!(t.retained, [3]);
    }

    #[test]
    fn constant_features_go_first() {
        let rows: Vec<Vec<u8>> = (0..8).map(|i| vec![(i % 2) as u8, 1, (i / 4) as u8]).collect();
        let labels = (0..8).map(|i| i % 2).collect();
        let ds = Dataset::from_rows(&rows, labels, classes(2)).unwrap();
        let t = select_features(&ds, &zero_one(2), &cfg(1)).unwrap();
        assert_eq!(t.eliminated[0].feature, 1);
        assert_eq!(t.eliminated[0].reason, EliminationReason::Constant);
        assert_eq!(t.retained, [0]);
    }

    #[test]
    fn retained_at_reconstructs_prefixes() {
        let rows: Vec<Vec<u8>> = (0..16).map(|i| (0..4).map(|b| ((i >> b) & 1) as u8).collect()).collect();
        let labels = (0..16).map(|i| i & 1).collect();
        let ds = Dataset::from_rows(&rows, labels, classes(2)).unwrap();
        let t = select_features(&ds, &zero_one(2), &cfg(1)).unwrap();
        assert_eq!(t.retained_at(1).unwrap(), t.retained);
        assert_eq!(t.retained_at(4).unwrap(), [0, 1, 2, 3]);
        let two = t.retained_at(2).unwrap();
        assert!(two.contains(&t.retained[0]) && two.contains(&t.eliminated[2].feature));
        assert!(t.retained_at(0).is_none());
        assert!(t.retained_at(5).is_none());
    }
}
