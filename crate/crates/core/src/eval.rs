//! kNN ranking on selected features and top-k loss under a ground metric.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::metric::GroundMetric;
use crate::scalar::Real;

pub const DEFAULT_KNN: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("feature set is empty")]
    EmptyTheta,
    #[error("training set is empty")]
    EmptyTrain,
    #[error("k_nn must be at least 1")]
    InvalidKnn,
    #[error("feature index {index} out of range for {m} features")]
    FeatureOutOfRange { index: usize, m: usize },
    #[error("train has {train} features, test has {test}")]
    FeatureCountMismatch { train: usize, test: usize },
    #[error("top-k needs 1 <= k <= {classes}, got {k}")]
    InvalidTopK { k: usize, classes: usize },
    #[error("sample {0} has an empty true label set")]
    EmptyTruth(usize),
    #[error("{rankings} rankings for {truths} truth sets")]
    LengthMismatch { rankings: usize, truths: usize },
    #[error("class {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnDistance {
    /// Number of differing levels.
    #[default]
    Hamming,
    /// Sum of absolute level-code differences.
    L1,
}

impl std::str::FromStr for KnnDistance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hamming" => Ok(KnnDistance::Hamming),
            "l1" => Ok(KnnDistance::L1),
            other => Err(format!("unknown distance `{other}` (expected hamming or l1)")),
        }
    }
}

/// Per test sample, every class ordered by descending vote count, ties by
/// lower class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PredictionRanking {
    pub ranks: Vec<Vec<usize>>,
}

impl PredictionRanking {
    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn top1(&self) -> Vec<usize> {
        self.ranks.iter().map(|r| r[0]).collect()
    }
}

/// Ranks classes for every test row by the votes of its `k_nn` nearest
/// training rows on `theta`.
pub fn knn_rank(train: &Dataset, test: &Dataset, theta: &[usize], k_nn: usize) -> Result<PredictionRanking, EvalError> {
    knn_rank_rows(train, test.features_flat(), test.n_features(), theta, k_nn, KnnDistance::Hamming)
}

/// As [`knn_rank`] over flat row-major test rows.
pub fn knn_rank_rows(
    train: &Dataset,
    test_rows: &[u8],
    test_features: usize,
    theta: &[usize],
    k_nn: usize,
    distance: KnnDistance,
) -> Result<PredictionRanking, EvalError> {
    if theta.is_empty() {
        return Err(EvalError::EmptyTheta);
    }
    if train.n_samples() == 0 {
        return Err(EvalError::EmptyTrain);
    }
    if k_nn == 0 {
        return Err(EvalError::InvalidKnn);
    }
    let m = train.n_features();
    if test_features != m {
        return Err(EvalError::FeatureCountMismatch {
            train: m,
            test: test_features,
        });
    }
    if let Some(&index) = theta.iter().find(|&&f| f >= m) {
        return Err(EvalError::FeatureOutOfRange { index, m });
    }
    let n_c = train.n_classes();
    let k = k_nn.min(train.n_samples());
    let projected: Vec<u8> = train.rows().flat_map(|r| theta.iter().map(move |&f| r[f])).collect();
    let t = theta.len();

    let ranks = test_rows
        .par_chunks(m.max(1))
        .map(|row| {
            let q: Vec<u8> = theta.iter().map(|&f| row[f]).collect();
            let mut dist: Vec<(u32, usize)> = projected
                .chunks(t)
                .enumerate()
                .map(|(idx, r)| {
                    let d: u32 = match distance {
                        KnnDistance::Hamming => r.iter().zip(&q).map(|(a, b)| (a != b) as u32).sum(),
                        KnnDistance::L1 => r.iter().zip(&q).map(|(a, b)| a.abs_diff(*b) as u32).sum(),
                    };
                    (d, idx)
                })
                .collect();
            if k < dist.len() {
                dist.select_nth_unstable(k - 1);
                dist.truncate(k);
            }
            let mut votes = vec![0usize; n_c];
            for &(_, idx) in &dist {
                votes[train.labels()[idx]] += 1;
            }
            let mut order: Vec<usize> = (0..n_c).collect();
            order.sort_by(|&a, &b| votes[b].cmp(&votes[a]).then(a.cmp(&b)));
            order
        })
        .collect();
    Ok(PredictionRanking { ranks })
}

/// Mean over samples of `(1/k) sum_{i<=k} min_{y in truth} d(ŷ_i, y)`.
pub fn top_k_loss<F: Real>(
    ranking: &PredictionRanking,
    truth: &[Vec<usize>],
    metric: &GroundMetric<F>,
    k: usize,
) -> Result<F, EvalError> {
    let n_c = metric.len();
    if k == 0 || k > n_c {
        return Err(EvalError::InvalidTopK { k, classes: n_c });
    }
    if ranking.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            rankings: ranking.len(),
            truths: truth.len(),
        });
    }
    if truth.is_empty() {
        return Ok(F::zero());
    }
    let kf = F::from_usize(k).expect("k fits in scalar");
    let mut total = F::zero();
    for (s, (rank, set)) in ranking.ranks.iter().zip(truth).enumerate() {
        if set.is_empty() {
            return Err(EvalError::EmptyTruth(s));
        }
        if let Some(&class) = rank.iter().chain(set).find(|&&c| c >= n_c) {
            return Err(EvalError::ClassOutOfRange { class, classes: n_c });
        }
        let mut sample = F::zero();
        for &pred in rank.iter().take(k) {
            sample += set
                .iter()
                .map(|&y| metric.get(pred, y))
                .fold(F::infinity(), F::min);
        }
        total += sample / kf;
    }
    Ok(total / F::from_usize(truth.len()).expect("count fits in scalar"))
}

/// One cell of a loss table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRow {
    pub n_features: usize,
    pub k: usize,
    pub p: f64,
    pub measure: String,
    pub loss: f64,
    pub seed: u64,
}

pub const LOSS_HEADER: &str = "n_features\tk\tP\tmeasure\tloss\tseed";

pub fn write_loss_tsv<W: Write>(rows: &[LossRow], mut out: W) -> Result<(), EvalError> {
    writeln!(out, "{LOSS_HEADER}")?;
    for r in rows {
        writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", r.n_features, r.k, r.p, r.measure, r.loss, r.seed)?;
    }
    Ok(())
}
