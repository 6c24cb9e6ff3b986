//! Discrete sample store and the preprocessing that feeds it.

mod discretize;
mod load;
mod split;

use thiserror::Error;

pub use discretize::{discretize, discretize_column, quantile_discretize, BinStrategy, DiscretizerSpec};
pub use load::{load_dataset, load_samples, DatasetSchema};
pub use split::{split_indices, train_test_split};

/// Upper bound on the number of levels of a discrete feature.
pub const MAX_ARITY: usize = 64;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset must have at least one sample and one feature")]
    Empty,
    #[error("line {line}: {found} fields, expected {expected}")]
    Ragged { line: usize, found: usize, expected: usize },
    #[error("line {line}: unknown label `{label}` (not in the metric's label list)")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}, column `{column}`: `{value}` is not a valid feature value")]
    NonNumeric { line: usize, column: String, value: String },
    #[error("feature {feature}: value {value} is outside its declared arity {arity}")]
    ArityViolation { feature: usize, value: usize, arity: usize },
    #[error("feature {feature}: {arity} levels exceeds the cap of {MAX_ARITY}")]
    ArityCap { feature: usize, arity: usize },
    #[error("sample {sample} has an empty label set")]
    EmptyLabelSet { sample: usize },
    #[error("label index {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("row {row}, feature {feature}: value is NaN or infinite")]
    NonFinite { row: usize, feature: usize },
    #[error("bins must be between 2 and {MAX_ARITY}, got {0}")]
    InvalidBins(usize),
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("split of {n} samples at fraction {fraction} leaves an empty side")]
    EmptySplit { n: usize, fraction: f64 },
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("{0}")]
    Mismatch(String),
    #[error("malformed delimited input: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable N×M table of discrete feature levels with one class per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    features: Vec<u8>,
    n_samples: usize,
    n_features: usize,
    arity: Vec<usize>,
    labels: Vec<usize>,
    classes: Vec<String>,
    provenance: String,
}

fn validate_table(features: &[u8], n_features: usize, arity: &[usize]) -> Result<(), DataError> {
    if arity.len() != n_features {
        return Err(DataError::Mismatch(format!(
            "{} arities for {n_features} features",
            arity.len()
        )));
    }
    for (f, &a) in arity.iter().enumerate() {
        if a > MAX_ARITY {
            return Err(DataError::ArityCap { feature: f, arity: a });
        }
    }
    for row in features.chunks(n_features) {
        for (f, &v) in row.iter().enumerate() {
            if usize::from(v) >= arity[f] {
                return Err(DataError::ArityViolation {
                    feature: f,
                    value: v.into(),
                    arity: arity[f],
                });
            }
        }
    }
    Ok(())
}

/// Per-feature level counts: `max + 1`, at least one.
pub fn infer_arity(features: &[u8], n_features: usize) -> Vec<usize> {
    let mut arity = vec![1usize; n_features];
    for row in features.chunks(n_features.max(1)) {
        for (f, &v) in row.iter().enumerate() {
            arity[f] = arity[f].max(usize::from(v) + 1);
        }
    }
    arity
}

impl Dataset {
    /// Validated constructor over a flat row-major feature buffer.
    pub fn new(
        features: Vec<u8>,
        n_features: usize,
        arity: Vec<usize>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self, DataError> {
        if n_features == 0 || labels.is_empty() {
            return Err(DataError::Empty);
        }
        if features.len() != labels.len() * n_features {
            return Err(DataError::Mismatch(format!(
                "{} feature values for {} samples x {n_features} features",
                features.len(),
                labels.len()
            )));
        }
        validate_table(&features, n_features, &arity)?;
        for &l in &labels {
            if l >= classes.len() {
                return Err(DataError::LabelOutOfRange {
                    label: l,
                    classes: classes.len(),
                });
            }
        }
        Ok(Self {
            n_samples: labels.len(),
            features,
            n_features,
            arity,
            labels,
            classes,
            provenance: String::new(),
        })
    }

    /// Builds from per-row feature vectors, inferring arity.
    pub fn from_rows(rows: &[Vec<u8>], labels: Vec<usize>, classes: Vec<String>) -> Result<Self, DataError> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(DataError::Ragged {
                line: i + 1,
                found: r.len(),
                expected: m,
            });
        }
        let features: Vec<u8> = rows.concat();
        let arity = infer_arity(&features, m);
        Self::new(features, m, arity, labels, classes)
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u8] {
        &self.features[r * self.n_features..(r + 1) * self.n_features]
    }

    #[inline]
    pub fn value(&self, r: usize, f: usize) -> u8 {
        self.features[r * self.n_features + f]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.features.chunks(self.n_features)
    }

    pub fn column(&self, f: usize) -> impl Iterator<Item = u8> + '_ {
        (0..self.n_samples).map(move |r| self.value(r, f))
    }

    pub fn features_flat(&self) -> &[u8] {
        &self.features
    }

    pub fn arity(&self) -> &[usize] {
        &self.arity
    }

    #[inline]
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Each label as a singleton truth set.
    pub fn label_sets(&self) -> Vec<Vec<usize>> {
        self.labels.iter().map(|&l| vec![l]).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Same features, different labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Self, DataError> {
        if labels.len() != self.n_samples {
            return Err(DataError::Mismatch(format!(
                "{} labels for {} samples",
                labels.len(),
                self.n_samples
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= self.n_classes()) {
            return Err(DataError::LabelOutOfRange {
                label: l,
                classes: self.n_classes(),
            });
        }
        Ok(Self {
            labels,
            ..self.clone()
        })
    }

    /// Rows at `indices`, in that order. Arity is kept from the parent.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            n_samples: indices.len(),
            features,
            n_features: self.n_features,
            arity: self.arity.clone(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Keeps only the feature columns in `features`, in that order.
    pub fn select_features(&self, features: &[usize]) -> Result<Self, DataError> {
        if features.is_empty() {
            return Err(DataError::Empty);
        }
        let mut flat = Vec::with_capacity(self.n_samples * features.len());
        for row in self.rows() {
            flat.extend(features.iter().map(|&f| row[f]));
        }
        Ok(Self {
            features: flat,
            n_features: features.len(),
            arity: features.iter().map(|&f| self.arity[f]).collect(),
            ..self.clone()
        })
    }
}

/// Samples whose truth is a nonempty set of classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSamples {
    pub features: Vec<u8>,
    pub n_features: usize,
    pub arity: Vec<usize>,
    pub label_sets: Vec<Vec<usize>>,
    pub classes: Vec<String>,
}

impl LabeledSamples {
    pub fn n_samples(&self) -> usize {
        self.label_sets.len()
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.features[r * self.n_features..(r + 1) * self.n_features]
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            features,
            n_features: self.n_features,
            arity: self.arity.clone(),
            label_sets: indices.iter().map(|&i| self.label_sets[i].clone()).collect(),
            classes: self.classes.clone(),
        }
    }

    pub fn is_single_labeled(&self) -> bool {
        self.label_sets.iter().all(|s| s.len() == 1)
    }
}

/// One row per (sample, label) pair, features duplicated, in sample order.
pub fn expand_multilabel(samples: &LabeledSamples) -> Result<Dataset, DataError> {
    let total: usize = samples.label_sets.iter().map(Vec::len).sum();
    let mut features = Vec::with_capacity(total * samples.n_features);
    let mut labels = Vec::with_capacity(total);
    for (i, set) in samples.label_sets.iter().enumerate() {
        if set.is_empty() {
            return Err(DataError::EmptyLabelSet { sample: i });
        }
        for &l in set {
            features.extend_from_slice(samples.row(i));
            labels.push(l);
        }
    }
    Dataset::new(
        features,
        samples.n_features,
        samples.arity.clone(),
        labels,
        samples.classes.clone(),
    )
}
