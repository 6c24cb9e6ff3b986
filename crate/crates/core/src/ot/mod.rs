//! Discrete optimal transport between class distributions.
//!
//! [`exact_wasserstein`] solves the transportation linear program exactly.
//! [`sinkhorn_wasserstein`] solves the entropy-regularized problem by
//! matrix balancing and reports the unregularized transport cost of the
//! plan it finds. [`kl_divergence`] is the information-theoretic baseline.

mod distribution;
mod exact;
mod kl;
mod sinkhorn;

use serde::Serialize;
use thiserror::Error;

pub use crate::metric::GroundMetric;
pub use distribution::DiscreteDistribution;
pub use exact::exact_wasserstein;
pub use kl::{kl_divergence, kl_saturated, KlMode, DEFAULT_KL_FLOOR};
pub use sinkhorn::{sinkhorn_wasserstein, SinkhornConfig, LOG_DOMAIN_THRESHOLD};

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum OtError {
    #[error("distribution has no entries")]
    EmptyDistribution,
    #[error("probability at index {index} is {value}, expected a finite nonnegative value")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, too far from 1 to renormalize")]
    NotNormalized { sum: f64 },
    #[error("weights have zero total mass")]
    ZeroMass,
    #[error("dimension mismatch: p has {p} classes, q has {q}, metric has {metric}")]
    DimensionMismatch { p: usize, q: usize, metric: usize },
    #[error("invalid Sinkhorn configuration: {0}")]
    InvalidConfig(String),
    #[error("Sinkhorn did not converge in {iterations} iterations (marginal residual {residual:e}); reduce lambda or use the exact solver")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("Sinkhorn kernel underflow at lambda={lambda} with max cost {max_cost}")]
    Underflow { lambda: f64, max_cost: f64 },
    #[error("transport problem infeasible: {0}")]
    Infeasible(String),
}

/// A coupling with prescribed marginals and its transport cost `tr(QᵀD)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<F = f64> {
    coupling: Vec<F>,
    n: usize,
    cost: F,
}

impl<F: Real> TransportPlan<F> {
    pub(crate) fn new(coupling: Vec<F>, n: usize, metric: &GroundMetric<F>) -> Self {
        let cost = coupling
            .iter()
            .zip(metric.as_flat())
            .map(|(&q, &d)| q * d)
            .sum();
        Self { coupling, n, cost }
    }

    #[inline]
    pub fn cost(&self) -> F {
        self.cost
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.coupling[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row_sums(&self) -> Vec<F> {
        self.coupling.chunks(self.n).map(|r| r.iter().copied().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<F> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// L1 distance of the row and column sums from `p` and `q`.
    pub fn marginal_residual(&self, p: &DiscreteDistribution<F>, q: &DiscreteDistribution<F>) -> (F, F) {
        let rows = self
            .row_sums()
            .iter()
            .zip(p.probs())
            .map(|(a, b)| (*a - *b).abs())
            .sum();
        let cols = self
            .col_sums()
            .iter()
            .zip(q.probs())
            .map(|(a, b)| (*a - *b).abs())
            .sum();
        (rows, cols)
    }
}

impl<F: Real> Serialize for TransportPlan<F> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            cost: f64,
            coupling: Vec<Vec<f64>>,
        }
        Repr {
            cost: self.cost.as_f64(),
            coupling: self
                .coupling
                .chunks(self.n)
                .map(|r| r.iter().map(|v| v.as_f64()).collect())
                .collect(),
        }
        .serialize(serializer)
    }
}

pub(crate) fn check_dims<F: Real>(
    p: &DiscreteDistribution<F>,
    q: &DiscreteDistribution<F>,
    d: &GroundMetric<F>,
) -> Result<(), OtError> {
    if p.len() != q.len() || p.len() != d.len() {
        return Err(OtError::DimensionMismatch {
            p: p.len(),
            q: q.len(),
            metric: d.len(),
        });
    }
    Ok(())
}

/// How a probabilistic discrepancy between two class distributions is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    WassersteinExact,
    WassersteinSinkhorn,
    Kl,
}

impl Measure {
    /// Exact transport up to 32 classes, Sinkhorn above.
    pub fn default_for(n_classes: usize) -> Self {
        if n_classes <= 32 {
            Measure::WassersteinExact
        } else {
            Measure::WassersteinSinkhorn
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Measure::WassersteinExact => "wasserstein-exact",
            Measure::WassersteinSinkhorn => "wasserstein-sinkhorn",
            Measure::Kl => "kl",
        }
    }

    pub fn is_wasserstein(self) -> bool {
        !matches!(self, Measure::Kl)
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wasserstein-exact" | "exact" => Ok(Measure::WassersteinExact),
            "wasserstein-sinkhorn" | "sinkhorn" => Ok(Measure::WassersteinSinkhorn),
            "kl" => Ok(Measure::Kl),
            other => Err(format!(
                "unknown measure `{other}` (expected wasserstein-exact, wasserstein-sinkhorn or kl)"
            )),
        }
    }
}

/// Everything needed to evaluate a [`Measure`] between two distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy<F = f64> {
    pub measure: Measure,
    pub sinkhorn: SinkhornConfig<F>,
    pub kl: KlMode<F>,
}

impl<F: Real> Discrepancy<F> {
    pub fn new(measure: Measure) -> Self {
        Self {
            measure,
            sinkhorn: SinkhornConfig::default(),
            kl: KlMode::default(),
        }
    }

    pub fn eval(
        &self,
        p: &DiscreteDistribution<F>,
        q: &DiscreteDistribution<F>,
        d: &GroundMetric<F>,
    ) -> Result<F, OtError> {
        match self.measure {
            Measure::WassersteinExact => Ok(exact_wasserstein(p, q, d)?.cost()),
            Measure::WassersteinSinkhorn => Ok(sinkhorn_wasserstein(p, q, d, &self.sinkhorn)?.cost()),
            Measure::Kl => kl_divergence(p, q, self.kl),
        }
    }
}
