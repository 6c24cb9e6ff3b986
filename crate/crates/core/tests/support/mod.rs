//! Independent oracles shared by integration and acceptance tests. Nothing
//! here calls the crate's solvers or estimators.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

/// Optimal transport cost by enumerating every vertex of the coupling
/// polytope. A vertex is a basic feasible solution whose support is a
/// spanning tree of the complete bipartite graph on rows and columns; the
/// tree determines the flows uniquely by peeling leaves.
pub fn vertex_enumeration_cost(p: &[f64], q: &[f64], d: &[Vec<f64>]) -> f64 {
    let (r, c) = (p.len(), q.len());
    let cells: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..c).map(move |j| (i, j))).collect();
    let basis = r + c - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << cells.len()) {
        if mask.count_ones() as usize != basis {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..cells.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| cells[b])
            .collect();
        if let Some(flow) = peel(p, q, &chosen) {
            let cost: f64 = chosen.iter().zip(&flow).map(|(&(i, j), f)| f * d[i][j]).sum();
            best = best.min(cost);
        }
    }
    best
}

fn peel(p: &[f64], q: &[f64], cells: &[(usize, usize)]) -> Option<Vec<f64>> {
    let mut row_left = p.to_vec();
    let mut col_left = q.to_vec();
    let mut flow = vec![f64::NAN; cells.len()];
    let mut open: Vec<bool> = vec![true; cells.len()];
    for _ in 0..cells.len() {
        // A row or column touched by exactly one open cell is a leaf.
        let mut leaf = None;
        for (k, &(i, j)) in cells.iter().enumerate() {
            if !open[k] {
                continue;
            }
            let row_deg = cells.iter().enumerate().filter(|&(o, c)| open[o] && c.0 == i).count();
            let col_deg = cells.iter().enumerate().filter(|&(o, c)| open[o] && c.1 == j).count();
            if row_deg == 1 {
                leaf = Some((k, true));
                break;
            }
            if col_deg == 1 {
                leaf = Some((k, false));
                break;
            }
        }
        let (k, by_row) = leaf?;
        let (i, j) = cells[k];
        let f = if by_row { row_left[i] } else { col_left[j] };
        flow[k] = f;
        row_left[i] -= f;
        col_left[j] -= f;
        open[k] = false;
    }
    let residual: f64 = row_left.iter().chain(&col_left).map(|v| v.abs()).sum();
    if residual > 1e-12 || flow.iter().any(|&f| f < -1e-12) {
        return None;
    }
    Some(flow)
}

/// Random point of the simplex; about a quarter of the entries are zero.
pub fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let raw: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.25) { 0.0 } else { rng.gen::<f64>() })
            .collect();
        let s: f64 = raw.iter().sum();
        if s > 0.0 {
            return raw.into_iter().map(|v| v / s).collect();
        }
    }
}

/// Euclidean distances of random planar points, every pair at least `min_gap` apart.
pub fn random_planar_rows<R: Rng>(n: usize, min_gap: f64, rng: &mut R) -> Vec<Vec<f64>> {
    loop {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        let rows: Vec<Vec<f64>> = pts
            .iter()
            .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect();
        let ok = (0..n).all(|i| (0..n).all(|j| i == j || rows[i][j] >= min_gap));
        if ok {
            return rows;
        }
    }
}

/// Integer class counts per configuration of `features`.
pub fn counts_by_config(
    rows: &[Vec<u8>],
    labels: &[usize],
    features: &[usize],
    n_c: usize,
) -> BTreeMap<Vec<u8>, Vec<u64>> {
    let mut out: BTreeMap<Vec<u8>, Vec<u64>> = BTreeMap::new();
    for (row, &y) in rows.iter().zip(labels) {
        let key: Vec<u8> = features.iter().map(|&f| row[f]).collect();
        out.entry(key).or_insert_with(|| vec![0; n_c])[y] += 1;
    }
    out
}

fn normalize(c: &[u64], alpha: f64) -> Vec<f64> {
    let t = c.iter().sum::<u64>() as f64 + alpha * c.len() as f64;
    c.iter().map(|&v| (v as f64 + alpha) / t).collect()
}

/// Unsmoothed δ from raw counts with vertex-enumeration transport. Only
/// for at most three classes.
pub fn oracle_delta(rows: &[Vec<u8>], labels: &[usize], feature: usize, g: &[usize], d: &[Vec<f64>]) -> f64 {
    oracle_delta_smoothed(rows, labels, feature, g, d, 0.0)
}

/// As [`oracle_delta`] with `alpha` added to every class count of every
/// observed configuration.
pub fn oracle_delta_smoothed(
    rows: &[Vec<u8>],
    labels: &[usize],
    feature: usize,
    g: &[usize],
    d: &[Vec<f64>],
    alpha: f64,
) -> f64 {
    let n_c = d.len();
    let mut joint_set = g.to_vec();
    joint_set.push(feature);
    let joint = counts_by_config(rows, labels, &joint_set, n_c);
    let base = counts_by_config(rows, labels, g, n_c);
    let n = rows.len() as f64;
    joint
        .iter()
        .map(|(key, c)| {
            let parent = &base[&key[..g.len()]];
            let w = c.iter().sum::<u64>() as f64 / n;
            w * vertex_enumeration_cost(&normalize(c, alpha), &normalize(parent, alpha), d)
        })
        .sum()
}

/// Whether `Y` is independent of `feature` given `g` in the empirical
/// joint, decided with exact integer cross-multiplication.
pub fn conditionally_independent(rows: &[Vec<u8>], labels: &[usize], feature: usize, g: &[usize], n_c: usize) -> bool {
    let mut joint_set = g.to_vec();
    joint_set.push(feature);
    let joint = counts_by_config(rows, labels, &joint_set, n_c);
    let base = counts_by_config(rows, labels, g, n_c);
    joint.iter().all(|(key, c)| {
        let parent = &base[&key[..g.len()]];
        let (tc, tp): (u64, u64) = (c.iter().sum(), parent.iter().sum());
        c.iter().zip(parent).all(|(&a, &b)| a * tp == b * tc)
    })
}

/// Rows and labels realising integer counts `counts[(x, y)]` exactly.
pub fn rows_from_counts(counts: &BTreeMap<(Vec<u8>, usize), u64>) -> (Vec<Vec<u8>>, Vec<usize>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for ((x, y), &c) in counts {
        for _ in 0..c {
            rows.push(x.clone());
            labels.push(*y);
        }
    }
    (rows, labels)
}

/// All binary configurations of `m` features, feature 0 first.
pub fn binary_configs(m: usize) -> Vec<Vec<u8>> {
    (0..1usize << m)
        .map(|x| (0..m).map(|f| ((x >> f) & 1) as u8).collect())
        .collect()
}
