use serde::{Deserialize, Serialize};

use super::{DataError, MAX_ARITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinStrategy {
    /// Edges at empirical quantiles.
    #[default]
    Quantile,
    /// Equal-width edges between the column minimum and maximum.
    Uniform,
}

impl std::str::FromStr for BinStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quantile" => Ok(BinStrategy::Quantile),
            "uniform" => Ok(BinStrategy::Uniform),
            other => Err(format!("unknown discretization `{other}` (expected quantile or uniform)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscretizerSpec {
    pub bins: usize,
    pub strategy: BinStrategy,
}

impl Default for DiscretizerSpec {
    fn default() -> Self {
        Self {
            bins: 10,
            strategy: BinStrategy::Quantile,
        }
    }
}

impl DiscretizerSpec {
    pub fn quantile(bins: usize) -> Self {
        Self {
            bins,
            strategy: BinStrategy::Quantile,
        }
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.bins < 2 || self.bins > MAX_ARITY {
            return Err(DataError::InvalidBins(self.bins));
        }
        Ok(())
    }
}

fn edges(sorted: &[f64], spec: &DiscretizerSpec) -> Vec<f64> {
    let n = sorted.len();
    let mut edges: Vec<f64> = match spec.strategy {
        BinStrategy::Quantile => (1..spec.bins)
            .map(|b| {
                // Midpoint between the order statistics straddling the b-th cut.
                let k = (b * n).div_ceil(spec.bins).clamp(1, n - 1);
                0.5 * (sorted[k - 1] + sorted[k])
            })
            .collect(),
        BinStrategy::Uniform => {
            let (lo, hi) = (sorted[0], sorted[n - 1]);
            (1..spec.bins)
                .map(|b| lo + (hi - lo) * b as f64 / spec.bins as f64)
                .collect()
        }
    };
    edges.dedup();
    edges
}

/// Bins one column. A value equal to an edge goes to the lower bin; bin
/// indices are compacted to the levels actually used, so a constant column
/// becomes all zeros with arity one.
pub fn discretize_column(column: &[f64], spec: &DiscretizerSpec) -> Result<(Vec<u8>, usize), DataError> {
    spec.validate()?;
    if column.is_empty() {
        return Ok((Vec::new(), 1));
    }
    if let Some(row) = column.iter().position(|v| !v.is_finite()) {
        return Err(DataError::NonFinite { row, feature: 0 });
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() == 1 || sorted[0] == sorted[sorted.len() - 1] {
        return Ok((vec![0; column.len()], 1));
    }
    let edges = edges(&sorted, spec);
    let raw: Vec<usize> = column
        .iter()
        .map(|&v| edges.partition_point(|&e| e < v))
        .collect();
    let mut used = vec![false; edges.len() + 1];
    for &b in &raw {
        used[b] = true;
    }
    let mut rank = vec![0usize; used.len()];
    let mut next = 0;
    for (b, &u) in used.iter().enumerate() {
        rank[b] = next;
        if u {
            next += 1;
        }
    }
    let values = raw.iter().map(|&b| rank[b] as u8).collect();
    Ok((values, next))
}

/// Discretizes an N×M matrix given as rows; returns the flat row-major
/// levels and per-feature arity.
pub fn discretize(raw: &[Vec<f64>], spec: &DiscretizerSpec) -> Result<(Vec<u8>, Vec<usize>), DataError> {
    spec.validate()?;
    let n = raw.len();
    let m = raw.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(DataError::Empty);
    }
    let mut out = vec![0u8; n * m];
    let mut arity = Vec::with_capacity(m);
    for f in 0..m {
        let mut col = Vec::with_capacity(n);
        for (r, row) in raw.iter().enumerate() {
            let v = *row.get(f).ok_or(DataError::Ragged {
                line: r + 1,
                found: row.len(),
                expected: m,
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite { row: r, feature: f });
            }
            col.push(v);
        }
        let (levels, a) = discretize_column(&col, spec)?;
        for (r, l) in levels.into_iter().enumerate() {
            out[r * m + f] = l;
        }
        arity.push(a);
    }
    Ok((out, arity))
}

/// Quantile binning of every column.
pub fn quantile_discretize(raw: &[Vec<f64>], bins: usize) -> Result<(Vec<u8>, Vec<usize>), DataError> {
    discretize(raw, &DiscretizerSpec::quantile(bins))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn median_split() {
        let (v, a) = discretize_column(&[1.0, 2.0, 3.0, 4.0], &DiscretizerSpec::quantile(2)).unwrap();
        assert_eq!(v, [0, 0, 1, 1]);
        assert_eq!(a, 2);
    }

    #[test]
    fn constant_column() {
        let (v, a) = discretize_column(&[5.0, 5.0, 5.0], &DiscretizerSpec::quantile(10)).unwrap();
        assert_eq!(v, [0, 0, 0]);
        assert_eq!(a, 1);
    }

    #[test]
    fn deciles_hold_ten_each() {
        // Shuffled so binning cannot rely on input order.
        let col: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64 * 0.5).collect();
        let (v, a) = discretize_column(&col, &DiscretizerSpec::default()).unwrap();
        assert_eq!(a, 10);
        let mut counts = [0usize; 10];
        for b in v {
            counts[b as usize] += 1;
        }
        assert_eq!(counts, [10; 10]);
    }

    #[test]
    fn ties_at_an_edge_go_low() {
        // Edge between 2 and 2 is 2 itself.
        let (v, _) = discretize_column(&[1.0, 2.0, 2.0, 3.0], &DiscretizerSpec::quantile(2)).unwrap();
        assert_eq!(v, [0, 0, 0, 1]);
    }

    #[test]
    fn uniform_width() {
        let spec = DiscretizerSpec {
            bins: 4,
            strategy: BinStrategy::Uniform,
        };
        let (v, a) = discretize_column(&[0.0, 0.1, 0.5, 0.74, 1.0], &spec).unwrap();
        assert_eq!(v, [0, 0, 1, 2, 3]);
        assert_eq!(a, 4);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            discretize_column(&[1.0, f64::NAN], &DiscretizerSpec::default()),
            Err(DataError::NonFinite { row: 1, .. })
        ));
        assert!(matches!(
            discretize_column(&[1.0], &DiscretizerSpec::quantile(1)),
            Err(DataError::InvalidBins(1))
        ));
        assert!(matches!(
            discretize(&[vec![1.0, f64::INFINITY]], &DiscretizerSpec::default()),
            Err(DataError::NonFinite { row: 0, feature: 1 })
        ));
    }

    proptest! {
        #[test]
        fn order_preserving(col in prop::collection::vec(-1e3f64..1e3, 1..200), bins in 2usize..16) {
            for strategy in [BinStrategy::Quantile, BinStrategy::Uniform] {
                let (v, a) = discretize_column(&col, &DiscretizerSpec { bins, strategy }).unwrap();
                prop_assert!(a <= bins);
                for i in 0..col.len() {
                    prop_assert!((v[i] as usize) < a);
                    for j in 0..col.len() {
                        if col[i] <= col[j] {
                            prop_assert!(v[i] <= v[j]);
                        }
                    }
                }
            }
        }
    }
}
