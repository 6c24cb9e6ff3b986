pub mod bounds;
pub mod eval;
pub mod metric;
pub mod ot;
pub mod select;
pub mod sweep;

use clap::Args;
use serde::{Deserialize, Serialize};
use wassfs::ot::{Measure, SinkhornConfig};
use wassfs::selector::SelectionConfig;

use crate::error::CliError;

/// Selector knobs shared by `select` and `noise-sweep`.
#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionOpts {
    /// Conditioning neighborhood size.
    #[arg(long)]
    pub l: Option<usize>,
    /// wasserstein-exact, wasserstein-sinkhorn or kl.
    #[arg(long)]
    pub measure: Option<Measure>,
    /// Sinkhorn regularization strength.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Additive smoothing of class counts.
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// Re-pick neighborhoods every round (true) or once (false).
    #[arg(long = "recompute-neighbors")]
    pub recompute_neighbors: Option<bool>,
    /// Reuse scores whose neighborhood did not change.
    #[arg(long)]
    pub incremental: Option<bool>,
}

impl SelectionOpts {
    pub fn config(&self, k: usize, n_classes: usize, measure: Option<Measure>) -> Result<SelectionConfig<f64>, CliError> {
        let mut cfg = SelectionConfig::new(k, n_classes);
        if let Some(m) = measure.or(self.measure) {
            cfg.measure = m;
        }
        if let Some(l) = self.l {
            if l == 0 {
                return Err(CliError::input("l", "L must be >= 1"));
            }
            cfg.l = l;
        }
        if let Some(lambda) = self.lambda {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(CliError::input("lambda", "must be positive and finite"));
            }
            cfg.sinkhorn = SinkhornConfig::with_lambda(lambda);
        }
        if let Some(s) = self.smoothing {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(CliError::input("smoothing", "must be finite and nonnegative"));
            }
            cfg.smoothing = s;
        }
        if let Some(r) = self.recompute_neighbors {
            cfg.recompute_neighbors = r;
        }
        if let Some(i) = self.incremental {
            cfg.incremental = i;
        }
        Ok(cfg)
    }
}

pub(crate) fn require_k(k: Option<usize>) -> Result<usize, CliError> {
    match k {
        None => Err(CliError::input("k", "required (K >= 1)")),
        Some(0) => Err(CliError::input("k", "K must be >= 1")),
        Some(k) => Ok(k),
    }
}
