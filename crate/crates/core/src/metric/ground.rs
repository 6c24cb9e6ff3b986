use serde::Serialize;

use super::MetricError;
use crate::scalar::Real;

/// Class-dissimilarity matrix `D` with `D[i][j] = d(c_i, c_j)`.
///
/// A validated metric has an exactly zero diagonal, exact symmetry,
/// strictly positive off-diagonal entries and satisfies the triangle
/// inequality. Storage is dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundMetric<F = f64> {
    labels: Vec<String>,
    dist: Vec<F>,
    n: usize,
}

impl<F: Real> GroundMetric<F> {
    /// Validates a square matrix. Pairs that differ by no more than the
    /// scalar tolerance are symmetrized to their mean.
    pub fn new(labels: Vec<String>, rows: Vec<Vec<F>>) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::Empty);
        }
        if labels.len() != n {
            return Err(MetricError::LabelCount {
                labels: labels.len(),
                size: n,
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(MetricError::DuplicateLabel(label.clone()));
            }
        }
        let mut dist = Vec::with_capacity(n * n);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != n {
                return Err(MetricError::NotSquare {
                    row,
                    len: values.len(),
                    expected: n,
                });
            }
            dist.extend(values);
        }
        let mut metric = Self { labels, dist, n };
        metric.validate_and_symmetrize()?;
        Ok(metric)
    }

    /// Builds a metric from a flat row-major buffer.
    pub fn from_flat(labels: Vec<String>, dist: Vec<F>) -> Result<Self, MetricError> {
        let n = labels.len();
        if dist.len() != n * n {
            return Err(MetricError::NotSquare {
                row: 0,
                len: dist.len(),
                expected: n * n,
            });
        }
        let rows = dist.chunks(n.max(1)).map(<[F]>::to_vec).collect();
        Self::new(labels, rows)
    }

    /// The 0/1 metric: every pair of distinct classes at distance one.
    pub fn discrete(labels: Vec<String>) -> Result<Self, MetricError> {
        let n = labels.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { F::zero() } else { F::one() }).collect())
            .collect();
        Self::new(labels, rows)
    }

    fn validate_and_symmetrize(&mut self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.dist[i * n + j];
                if !v.is_finite() || v < F::zero() {
                    return Err(MetricError::InvalidEntry {
                        i,
                        j,
                        value: v.as_f64(),
                    });
                }
            }
        }
        for i in 0..n {
            let v = self.dist[i * n + i];
            if v != F::zero() {
                return Err(MetricError::NonZeroDiagonal {
                    index: i,
                    label: self.labels[i].clone(),
                    value: v.as_f64(),
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let a = self.dist[i * n + j];
                let b = self.dist[j * n + i];
                if (a - b).abs() > F::tolerance() {
                    return Err(MetricError::Asymmetric {
                        i,
                        j,
                        forward: a.as_f64(),
                        backward: b.as_f64(),
                    });
                }
                if a != b {
                    let mean = (a + b) / F::lit(2.0);
                    self.dist[i * n + j] = mean;
                    self.dist[j * n + i] = mean;
                }
                if !(self.dist[i * n + j] > F::zero()) {
                    return Err(MetricError::ZeroOffDiagonal {
                        i,
                        j,
                        a: self.labels[i].clone(),
                        b: self.labels[j].clone(),
                    });
                }
            }
        }
        if let Some((i, j, k)) = self.triangle_violation() {
            return Err(MetricError::TriangleViolation {
                i,
                j,
                k,
                a: self.labels[i].clone(),
                b: self.labels[j].clone(),
                via: self.labels[k].clone(),
                direct: self.get(i, j).as_f64(),
                detour: (self.get(i, k) + self.get(k, j)).as_f64(),
            });
        }
        Ok(())
    }

    /// First `(i, j, k)` in scan order with `d(i,j) > d(i,k) + d(k,j)`.
    fn triangle_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.n;
        let slack = F::tolerance() * self.max_distance().max(F::one());
        for i in 0..n {
            for j in (i + 1)..n {
                let direct = self.get(i, j);
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if direct > self.get(i, k) + self.get(k, j) + slack {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.dist[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Row-major entries.
    #[inline]
    pub fn as_flat(&self) -> &[F] {
        &self.dist
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn max_distance(&self) -> F {
        self.dist.iter().copied().fold(F::zero(), F::max)
    }

    /// The metric with every distance multiplied by `alpha > 0`.
    pub fn scaled(&self, alpha: F) -> Result<Self, MetricError> {
        if !(alpha > F::zero()) || !alpha.is_finite() {
            return Err(MetricError::InvalidScale(alpha.as_f64()));
        }
        Ok(Self {
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|&d| d * alpha).collect(),
            n: self.n,
        })
    }

    /// Classes `c` with `0 < d(class, c) <= threshold`, in index order.
    pub fn neighbors_within(&self, class: usize, threshold: F) -> Vec<usize> {
        let slack = F::tolerance();
        self.row(class)
            .iter()
            .enumerate()
            .filter(|&(c, &d)| c != class && d > F::zero() && d <= threshold + slack)
            .map(|(c, _)| c)
            .collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        self.dist.chunks(self.n).map(<[F]>::to_vec).collect()
    }

    /// Converts to another scalar precision, revalidating.
    pub fn cast<G: Real>(&self) -> Result<GroundMetric<G>, MetricError> {
        GroundMetric::from_flat(
            self.labels.clone(),
            self.dist.iter().map(|d| G::lit(d.as_f64())).collect(),
        )
    }
}

#[derive(Serialize)]
struct MetricRepr<'a> {
    labels: &'a [String],
    dist: Vec<Vec<f64>>,
}

impl<F: Real> Serialize for GroundMetric<F> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MetricRepr {
            labels: &self.labels,
            dist: self
                .dist
                .chunks(self.n)
                .map(|r| r.iter().map(|d| d.as_f64()).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}
