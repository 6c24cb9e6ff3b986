//! Feature selection by expected Wasserstein distance.
//!
//! A feature subset is good when the class distribution conditioned on the
//! subset stays close, in transport cost under a class ground metric, to
//! the class distribution conditioned on every feature. This crate
//! provides the pieces to optimize and study that criterion:
//!
//! - [`ot`]: exact and entropy-regularized Wasserstein distances between
//!   class distributions, plus KL divergence as a baseline.
//! - [`metric`]: ground metrics from label trees, label partitions or
//!   explicit matrices.
//! - [`data`]: discrete datasets, discretization, multi-label expansion
//!   and train/test splits.
//! - [`estimator`]: feature correlations, conditioning neighborhoods and
//!   empirical conditional class tables.
//! - [`selector`]: Markov-blanket backward elimination driven by the
//!   expected discrepancy score.
//! - [`noise`]: label-noise injection and exhaustive checks of the
//!   noisy-label robustness bounds.
//! - [`eval`]: kNN ranking and top-k loss under the ground metric.
//! - [`synth`]: seeded synthetic datasets and joints used by the
//!   experiments and tests.
//!
//! Numeric code is generic over [`Real`] (`f64` or `f32`); the aliases
//! below fix it to `f64`.

// `!(x > y)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod estimator;
pub mod eval;
pub mod metric;
pub mod noise;
pub mod ot;
pub mod scalar;
pub mod selector;
pub mod synth;

pub use scalar::Real;

pub type Distribution = ot::DiscreteDistribution<f64>;
pub type Metric = metric::GroundMetric<f64>;
pub type Plan = ot::TransportPlan<f64>;
pub type Table = estimator::ConditionalTable<f64>;
pub type Selection = selector::SelectionConfig<f64>;

pub type DistributionF32 = ot::DiscreteDistribution<f32>;
pub type MetricF32 = metric::GroundMetric<f32>;
pub type PlanF32 = ot::TransportPlan<f32>;
