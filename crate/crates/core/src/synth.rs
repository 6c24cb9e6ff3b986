//! Seeded synthetic datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::metric::{tree_metric, GroundMetric, LabelTree, MetricError, TreeNode};

/// Layer weights of the hierarchical label tree, root edges first.
pub const TREE_LAYER_WEIGHTS: [f64; 3] = [0.5, 0.2, 0.05];

/// Three families under the root. Each family node has one labelled child
/// (`fN`) which in turn has two labelled leaves (`fNa`, `fNb`). Labels in a
/// family are within 0.1 of each other and 1.4 or more from any other
/// family.
pub fn hierarchical_tree() -> LabelTree<f64> {
    let mut nodes = vec![TreeNode::new("root", None, None)];
    for f in 0..3 {
        let fam = format!("family{f}");
        let mid = format!("f{f}");
        nodes.push(TreeNode::new(fam.clone(), Some("root"), None));
        nodes.push(TreeNode::new(mid.clone(), Some(&fam), Some(&mid)));
        for leaf in ["a", "b"] {
            let id = format!("f{f}{leaf}");
            nodes.push(TreeNode::new(id.clone(), Some(&mid), Some(&id)));
        }
    }
    LabelTree::new(nodes, TREE_LAYER_WEIGHTS.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalSpec {
    pub n_samples: usize,
    /// Features that weakly indicate the family.
    pub n_coarse: usize,
    /// Features that sharply indicate the position inside a family.
    pub n_fine: usize,
    /// Fair coins.
    pub n_noise: usize,
    /// `P(X = 1)` of a coarse feature for its own family; `1 - strength`
    /// otherwise.
    pub coarse_strength: f64,
    /// Flip rate of a fine feature.
    pub fine_flip: f64,
    pub seed: u64,
}

impl Default for HierarchicalSpec {
    fn default() -> Self {
        Self {
            n_samples: 5000,
            n_coarse: 12,
            n_fine: 9,
            n_noise: 9,
            coarse_strength: 0.75,
            fine_flip: 0.05,
            seed: 0,
        }
    }
}

/// Nine uniformly drawn classes over [`hierarchical_tree`]. Class `c`
/// belongs to family `c / 3` at position `c % 3`. Coarse feature `j`
/// tracks family `j % 3`, fine feature `j` tracks position `j % 3`.
/// Features are laid out as coarse, fine, noise.
pub fn hierarchical_dataset(spec: &HierarchicalSpec) -> Result<(Dataset, GroundMetric<f64>), MetricError> {
    let metric = tree_metric(&hierarchical_tree())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.n_coarse + spec.n_fine + spec.n_noise;
    let mut rows = Vec::with_capacity(spec.n_samples);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for _ in 0..spec.n_samples {
        let c = rng.gen_range(0..9usize);
        let (family, pos) = (c / 3, c % 3);
        let mut row = Vec::with_capacity(m);
        for j in 0..spec.n_coarse {
            let p = if j % 3 == family { spec.coarse_strength } else { 1.0 - spec.coarse_strength };
            row.push(rng.gen_bool(p) as u8);
        }
        for j in 0..spec.n_fine {
            let hit = j % 3 == pos;
            row.push((hit != rng.gen_bool(spec.fine_flip)) as u8);
        }
        for _ in 0..spec.n_noise {
            row.push(rng.gen_bool(0.5) as u8);
        }
        rows.push(row);
        labels.push(c);
    }
    let ds = Dataset::from_rows(&rows, labels, metric.labels().to_vec())
        .expect("generated rows are consistent")
        .with_provenance(format!("hierarchical synthetic, seed {}", spec.seed));
    Ok((ds, metric))
}

/// Independent uniform features with labels from a random table over the
/// first `min(3, m)` features, mixed with uniform label noise.
pub fn random_dataset(n: usize, m: usize, arity: u8, n_classes: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drivers = m.min(3);
    let table_len = (arity as usize).pow(drivers as u32);
    let table: Vec<usize> = (0..table_len).map(|_| rng.gen_range(0..n_classes)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<u8> = (0..m).map(|_| rng.gen_range(0..arity)).collect();
        let key = row[..drivers].iter().fold(0usize, |k, &v| k * arity as usize + v as usize);
        let y = if rng.gen_bool(0.2) { rng.gen_range(0..n_classes) } else { table[key] };
        rows.push(row);
        labels.push(y);
    }
    let classes = (0..n_classes).map(|i| format!("c{i}")).collect();
    Dataset::from_rows(&rows, labels, classes).expect("generated rows are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_distances() {
        let m = tree_metric(&hierarchical_tree()).unwrap();
        assert_eq!(m.len(), 9);
        let idx = |l: &str| m.index_of(l).unwrap();
        assert!((m.get(idx("f0"), idx("f0a")) - 0.05).abs() < 1e-12);
        assert!((m.get(idx("f0a"), idx("f0b")) - 0.1).abs() < 1e-12);
        assert!((m.get(idx("f0"), idx("f1")) - 1.4).abs() < 1e-12);
        assert!((m.get(idx("f0a"), idx("f2b")) - 1.5).abs() < 1e-12);
        // Flip targets stay inside the family.
        for c in 0..9 {
            let nb = m.neighbors_within(c, 0.2);
            assert_eq!(nb.len(), 2);
            assert!(nb.iter().all(|&o| o / 3 == c / 3));
        }
    }

    #[test]
    fn class_order_matches_family_layout() {
        let m = tree_metric(&hierarchical_tree()).unwrap();
        let expect = ["f0", "f0a", "f0b", "f1", "f1a", "f1b", "f2", "f2a", "f2b"];
        assert_eq!(m.labels(), expect);
    }

    #[test]
    fn hierarchical_shape_and_determinism() {
        let spec = HierarchicalSpec {
            n_samples: 500,
            ..HierarchicalSpec::default()
        };
        let (a, _) = hierarchical_dataset(&spec).unwrap();
        let (b, _) = hierarchical_dataset(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n_samples(), a.n_features(), a.n_classes()), (500, 30, 9));
    }

    #[test]
    fn random_dataset_shape() {
        let ds = random_dataset(50, 4, 3, 2, 1);
        assert_eq!((ds.n_samples(), ds.n_features()), (50, 4));
        assert!(ds.features_flat().iter().all(|&v| v < 3));
    }
}
