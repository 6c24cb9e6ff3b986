use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{GroundMetric, MetricError};
use crate::scalar::Real;

/// Id given to the root inserted above a forest with several roots.
pub const VIRTUAL_ROOT_ID: &str = "__root__";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
    /// Class carried by this node. Interior nodes may carry classes too.
    #[serde(default)]
    pub label: Option<String>,
}

impl TreeNode {
    pub fn new(id: impl Into<String>, parent: Option<&str>, label: Option<&str>) -> Self {
        Self {
            id: id.into(),
            parent: parent.map(str::to_owned),
            label: label.map(str::to_owned),
        }
    }
}

/// Hierarchical class labels with per-depth edge weights.
///
/// The edge between a node and its parent weighs `layer_weights[depth - 1]`
/// where `depth` is the child's depth (children of the root use index 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTree<F = f64> {
    pub nodes: Vec<TreeNode>,
    pub layer_weights: Vec<F>,
}

impl<F: Real> LabelTree<F> {
    pub fn new(nodes: Vec<TreeNode>, layer_weights: Vec<F>) -> Self {
        Self {
            nodes,
            layer_weights,
        }
    }
}

struct Resolved<F> {
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
    /// Weighted distance from the root.
    height: Vec<F>,
}

fn resolve<F: Real>(tree: &LabelTree<F>) -> Result<(Vec<TreeNode>, Resolved<F>), MetricError> {
    let weights_f64: Vec<f64> = tree.layer_weights.iter().map(|w| w.as_f64()).collect();
    if tree.layer_weights.iter().any(|w| !(*w > F::zero()) || !w.is_finite())
        || tree.layer_weights.windows(2).any(|w| w[1] > w[0])
    {
        return Err(MetricError::InvalidLayerWeights(weights_f64));
    }

    let mut nodes = tree.nodes.clone();
    let roots = nodes.iter().filter(|n| n.parent.is_none()).count();
    if roots != 1 {
        for node in nodes.iter_mut().filter(|n| n.parent.is_none()) {
            node.parent = Some(VIRTUAL_ROOT_ID.to_owned());
        }
        nodes.insert(0, TreeNode::new(VIRTUAL_ROOT_ID, None, None));
    }

    let mut index: HashMap<&str, usize> = HashMap::with_capacity(nodes.len());
    for (i, node) in nodes.iter().enumerate() {
        if index.insert(node.id.as_str(), i).is_some() {
            return Err(MetricError::DuplicateNode(node.id.clone()));
        }
    }
    let mut parent = Vec::with_capacity(nodes.len());
    for node in &nodes {
        match &node.parent {
            None => parent.push(None),
            Some(p) => match index.get(p.as_str()) {
                Some(&pi) => parent.push(Some(pi)),
                None => {
                    return Err(MetricError::UnknownParent {
                        node: node.id.clone(),
                        parent: p.clone(),
                    })
                }
            },
        }
    }

    let n = nodes.len();
    let mut depth: Vec<Option<usize>> = vec![None; n];
    for (start, node) in nodes.iter().enumerate() {
        // Walk up until a node of known depth; a walk longer than n is a cycle.
        let mut chain = Vec::new();
        let mut cur = start;
        let base = loop {
            if let Some(d) = depth[cur] {
                break d;
            }
            match parent[cur] {
                None => {
                    depth[cur] = Some(0);
                    break 0;
                }
                Some(p) => {
                    chain.push(cur);
                    if chain.len() > n {
                        return Err(MetricError::Disconnected(node.id.clone()));
                    }
                    cur = p;
                }
            }
        };
        for (offset, &node) in chain.iter().rev().enumerate() {
            depth[node] = Some(base + offset + 1);
        }
    }
    let depth: Vec<usize> = depth.into_iter().map(|d| d.expect("depth resolved")).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| depth[i]);
    let mut height = vec![F::zero(); n];
    for &i in &order {
        if let Some(p) = parent[i] {
            let w = *tree
                .layer_weights
                .get(depth[i] - 1)
                .ok_or(MetricError::MissingLayerWeight {
                    depth: depth[i],
                    available: tree.layer_weights.len(),
                })?;
            height[i] = height[p] + w;
        }
    }
    Ok((
        nodes,
        Resolved {
            parent,
            depth,
            height,
        },
    ))
}

fn lowest_common_ancestor<F>(tree: &Resolved<F>, mut a: usize, mut b: usize) -> usize {
    while tree.depth[a] > tree.depth[b] {
        a = tree.parent[a].expect("non-root has parent");
    }
    while tree.depth[b] > tree.depth[a] {
        b = tree.parent[b].expect("non-root has parent");
    }
    while a != b {
        a = tree.parent[a].expect("non-root has parent");
        b = tree.parent[b].expect("non-root has parent");
    }
    a
}

/// Shortest-path metric between labelled tree nodes.
///
/// Classes are ordered as their nodes appear in `tree.nodes`.
pub fn tree_metric<F: Real>(tree: &LabelTree<F>) -> Result<GroundMetric<F>, MetricError> {
    let (nodes, resolved) = resolve(tree)?;
    let mut classes: Vec<(String, usize)> = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        if let Some(label) = &node.label {
            if classes.iter().any(|(l, _)| l == label) {
                return Err(MetricError::DuplicateClass(label.clone()));
            }
            classes.push((label.clone(), i));
        }
    }
    if classes.is_empty() {
        return Err(MetricError::NoClasses);
    }
    let n = classes.len();
    let mut rows = vec![vec![F::zero(); n]; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let (na, nb) = (classes[a].1, classes[b].1);
            let lca = lowest_common_ancestor(&resolved, na, nb);
            let d = resolved.height[na] + resolved.height[nb] - resolved.height[lca] - resolved.height[lca];
            rows[a][b] = d;
            rows[b][a] = d;
        }
    }
    GroundMetric::new(classes.into_iter().map(|(l, _)| l).collect(), rows)
}

/// Tree metric restricted and reordered to `labels`; every label must exist.
pub fn tree_metric_for<F: Real>(tree: &LabelTree<F>, labels: &[String]) -> Result<GroundMetric<F>, MetricError> {
    let full = tree_metric(tree)?;
    let idx: Vec<usize> = labels
        .iter()
        .map(|l| full.index_of(l).ok_or_else(|| MetricError::MissingClass(l.clone())))
        .collect::<Result<_, _>>()?;
    let rows = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| full.get(i, j)).collect())
        .collect();
    GroundMetric::new(labels.to_vec(), rows)
}
