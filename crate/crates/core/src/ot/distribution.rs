use serde::{Serialize, Serializer};

use super::OtError;
use crate::scalar::Real;

/// Probability vector over the classes of a ground metric.
///
/// Every entry is nonnegative and the entries sum to one. Construction
/// renormalizes inputs whose sum is within [`Real::normalize_tolerance`] of
/// one and rejects anything further away.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<F = f64> {
    probs: Vec<F>,
}

impl<F: Real> DiscreteDistribution<F> {
    pub fn new(probs: Vec<F>) -> Result<Self, OtError> {
        if probs.is_empty() {
            return Err(OtError::EmptyDistribution);
        }
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < F::zero() {
                return Err(OtError::InvalidProbability {
                    index,
                    value: p.as_f64(),
                });
            }
        }
        let sum: F = probs.iter().copied().sum();
        if (sum - F::one()).abs() > F::normalize_tolerance() {
            return Err(OtError::NotNormalized { sum: sum.as_f64() });
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self { probs })
    }

    /// Builds a distribution proportional to nonnegative weights, e.g. class counts.
    pub fn from_weights(weights: &[F]) -> Result<Self, OtError> {
        let sum: F = weights.iter().copied().sum();
        if !(sum > F::zero()) || !sum.is_finite() {
            return Err(OtError::ZeroMass);
        }
        Self::new(weights.iter().map(|&w| w / sum).collect())
    }

    /// Point mass on class `index`.
    pub fn point_mass(len: usize, index: usize) -> Self {
        let mut probs = vec![F::zero(); len];
        probs[index] = F::one();
        Self { probs }
    }

    pub fn uniform(len: usize) -> Self {
        let p = F::one() / F::from_usize(len).expect("class count fits in scalar");
        Self {
            probs: vec![p; len],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    #[inline]
    pub fn get(&self, index: usize) -> F {
        self.probs[index]
    }

    pub fn into_inner(self) -> Vec<F> {
        self.probs
    }
}

impl<F: Real> AsRef<[F]> for DiscreteDistribution<F> {
    fn as_ref(&self) -> &[F] {
        &self.probs
    }
}

impl<F: Real> Serialize for DiscreteDistribution<F> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.probs.iter().map(|p| p.as_f64()))
    }
}
