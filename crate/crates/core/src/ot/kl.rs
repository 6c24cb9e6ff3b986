use super::{DiscreteDistribution, OtError};
use crate::scalar::Real;

/// Additive floor applied to `q` by default before division.
pub const DEFAULT_KL_FLOOR: f64 = 1e-12;

/// Treatment of classes where `p > 0` and `q = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlMode<F = f64> {
    /// Add the floor to every `q_i` before dividing.
    Floor(F),
    /// Return [`kl_saturated`] as soon as an unsupported class carries mass.
    Saturate,
}

impl<F: Real> Default for KlMode<F> {
    fn default() -> Self {
        KlMode::Floor(F::lit(DEFAULT_KL_FLOOR))
    }
}

/// Value reported for a divergence that is infinite.
pub fn kl_saturated<F: Real>() -> F {
    F::max_value()
}

/// `sum_i p_i ln(p_i / q_i)` with `0 ln(0/q) = 0`.
pub fn kl_divergence<F: Real>(
    p: &DiscreteDistribution<F>,
    q: &DiscreteDistribution<F>,
    mode: KlMode<F>,
) -> Result<F, OtError> {
    if p.len() != q.len() {
        return Err(OtError::DimensionMismatch {
            p: p.len(),
            q: q.len(),
            metric: p.len(),
        });
    }
    let mut total = F::zero();
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == F::zero() {
            continue;
        }
        let denom = match mode {
            KlMode::Floor(floor) => qi + floor,
            KlMode::Saturate => {
                if qi == F::zero() {
                    return Ok(kl_saturated());
                }
                qi
            }
        };
        total += pi * (pi / denom).ln();
    }
    // The floor can push identical inputs a hair below zero.
    Ok(total.max(F::zero()))
}
