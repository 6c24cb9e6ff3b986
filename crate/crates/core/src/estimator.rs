//! Feature correlations, conditioning neighborhoods and empirical
//! class-conditional tables.

use std::collections::HashMap;

use crate::data::Dataset;
use crate::ot::DiscreteDistribution;
use crate::scalar::Real;

/// Symmetric matrix of absolute Pearson correlations between features.
///
/// Features are correlated on their integer level codes. A constant
/// feature has correlation zero with everything, itself included, and is
/// flagged in [`CorrelationMatrix::is_constant`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    rho: Vec<f64>,
    m: usize,
    constant: Vec<bool>,
}

impl CorrelationMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.m + j]
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn is_constant(&self, f: usize) -> bool {
        self.constant[f]
    }

    pub fn constant_features(&self) -> Vec<usize> {
        (0..self.m).filter(|&f| self.constant[f]).collect()
    }
}

pub fn correlation_matrix(ds: &Dataset) -> CorrelationMatrix {
    let (n, m) = (ds.n_samples(), ds.n_features());
    let mut mean = vec![0.0f64; m];
    for row in ds.rows() {
        for (f, &v) in row.iter().enumerate() {
            mean[f] += f64::from(v);
        }
    }
    mean.iter_mut().for_each(|x| *x /= n as f64);

    // Centered columns, feature-major for the pairwise dot products.
    let mut centered = vec![0.0f64; n * m];
    for (r, row) in ds.rows().enumerate() {
        for (f, &v) in row.iter().enumerate() {
            centered[f * n + r] = f64::from(v) - mean[f];
        }
    }
    let col = |f: usize| &centered[f * n..(f + 1) * n];
    let norm: Vec<f64> = (0..m).map(|f| col(f).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    let constant: Vec<bool> = (0..m).map(|f| ds.column(f).all(|v| v == ds.value(0, f))).collect();

    let mut rho = vec![0.0f64; m * m];
    for i in 0..m {
        if constant[i] {
            continue;
        }
        rho[i * m + i] = 1.0;
        for j in (i + 1)..m {
            if constant[j] {
                continue;
            }
            let dot: f64 = col(i).iter().zip(col(j)).map(|(a, b)| a * b).sum();
            let r = (dot / (norm[i] * norm[j])).abs().min(1.0);
            rho[i * m + j] = r;
            rho[j * m + i] = r;
        }
    }
    CorrelationMatrix { rho, m, constant }
}

/// The `l` features of `remaining \ {i}` most correlated with `i`.
///
/// Ordered by decreasing correlation, ties to the lower index. Returns all
/// candidates when fewer than `l` exist.
pub fn top_l_neighbors(corr: &CorrelationMatrix, i: usize, l: usize, remaining: &[usize]) -> Vec<usize> {
    let mut candidates: Vec<usize> = remaining.iter().copied().filter(|&j| j != i).collect();
    candidates.sort_by(|&a, &b| corr.get(i, b).total_cmp(&corr.get(i, a)).then(a.cmp(&b)));
    candidates.truncate(l);
    candidates
}

/// One observed configuration of the conditioning features.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry<F = f64> {
    pub key: Vec<u8>,
    /// Per-class sample counts within this configuration.
    pub counts: Vec<usize>,
    pub total: usize,
    /// Empirical probability of the configuration.
    pub weight: F,
    /// Smoothed `p(Y | configuration)`.
    pub dist: DiscreteDistribution<F>,
}

/// Empirical `p(Y | X_G = x_G)` for every observed configuration `x_G`.
///
/// Entries are sorted by key; unobserved configurations are absent. An
/// empty condition set yields a single entry holding the marginal `p(Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable<F = f64> {
    condition_set: Vec<usize>,
    entries: Vec<TableEntry<F>>,
    n_samples: usize,
}

impl<F: Real> ConditionalTable<F> {
    pub fn condition_set(&self) -> &[usize] {
        &self.condition_set
    }

    pub fn entries(&self) -> &[TableEntry<F>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn get(&self, key: &[u8]) -> Option<&TableEntry<F>> {
        self.entries
            .binary_search_by(|e| e.key.as_slice().cmp(key))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Key of `row` restricted to `features`, in that order.
#[inline]
pub fn config_key(row: &[u8], features: &[usize]) -> Vec<u8> {
    features.iter().map(|&f| row[f]).collect()
}

/// Counts configurations of `condition_set` in `ds` and builds the
/// additively smoothed conditional of each: `(count(y, x) + s) / (count(x) + n_c s)`.
pub fn conditional_table<F: Real>(ds: &Dataset, condition_set: &[usize], smoothing: F) -> ConditionalTable<F> {
    conditional_table_with_labels(ds, ds.labels(), condition_set, smoothing)
}

/// As [`conditional_table`] with labels supplied separately, e.g. noisy
/// labels paired with the same feature rows.
pub fn conditional_table_with_labels<F: Real>(
    ds: &Dataset,
    labels: &[usize],
    condition_set: &[usize],
    smoothing: F,
) -> ConditionalTable<F> {
    assert_eq!(labels.len(), ds.n_samples(), "one label per row");
    assert!(smoothing >= F::zero() && smoothing.is_finite(), "smoothing must be nonnegative");
    let n_c = ds.n_classes();
    let mut counts: HashMap<Vec<u8>, Vec<usize>> = HashMap::new();
    for (row, &y) in ds.rows().zip(labels) {
        counts
            .entry(config_key(row, condition_set))
            .or_insert_with(|| vec![0; n_c])[y] += 1;
    }
    let n = F::from_usize(ds.n_samples()).expect("sample count fits in scalar");
    let mut entries: Vec<TableEntry<F>> = counts
        .into_iter()
        .map(|(key, counts)| {
            let total: usize = counts.iter().sum();
            let weights: Vec<F> = counts
                .iter()
                .map(|&c| F::from_usize(c).expect("count fits in scalar") + smoothing)
                .collect();
            let dist = DiscreteDistribution::from_weights(&weights).expect("observed configuration has mass");
            TableEntry {
                key,
                weight: F::from_usize(total).expect("count fits in scalar") / n,
                total,
                counts,
                dist,
            }
        })
        .collect();
    entries.sort_by(|a, b| a.key.cmp(&b.key));
    ConditionalTable {
        condition_set: condition_set.to_vec(),
        entries,
        n_samples: ds.n_samples(),
    }
}
