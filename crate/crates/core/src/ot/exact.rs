//! Exact transportation solver.
//!
//! Successive shortest augmenting paths with node potentials on the
//! bipartite network `source -> rows -> columns -> sink`. Row-to-column
//! arcs are uncapacitated with cost `D[i][j]`; their residual reverse arcs
//! carry the current flow at cost `-D[i][j]`. Every augmentation saturates
//! a supply, a demand or a reverse arc by subtracting the bottleneck from
//! itself, so saturated quantities become exactly zero and the loop
//! terminates with an optimal coupling.

use super::{check_dims, DiscreteDistribution, GroundMetric, OtError, TransportPlan};
use crate::scalar::Real;

const NONE: usize = usize::MAX;

/// Optimal coupling of the transportation problem and its cost.
pub fn exact_wasserstein<F: Real>(
    p: &DiscreteDistribution<F>,
    q: &DiscreteDistribution<F>,
    d: &GroundMetric<F>,
) -> Result<TransportPlan<F>, OtError> {
    check_dims(p, q, d)?;
    let n = p.len();
    let rows: Vec<usize> = (0..n).filter(|&i| p.get(i) > F::zero()).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| q.get(j) > F::zero()).collect();
    let cost: Vec<F> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| d.get(i, j)))
        .collect();
    let supply: Vec<F> = rows.iter().map(|&i| p.get(i)).collect();
    let demand: Vec<F> = cols.iter().map(|&j| q.get(j)).collect();

    let flow = solve_transportation(&supply, &demand, &cost)?;

    let mut coupling = vec![F::zero(); n * n];
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            coupling[i * n + j] = flow[a * cols.len() + b];
        }
    }
    Ok(TransportPlan::new(coupling, n, d))
}

/// Min-cost flow on a dense `r x c` transportation network.
///
/// `cost` is row-major and nonnegative. Returns the flow matrix.
pub(crate) fn solve_transportation<F: Real>(supply: &[F], demand: &[F], cost: &[F]) -> Result<Vec<F>, OtError> {
    let (r, c) = (supply.len(), demand.len());
    let mut flow = vec![F::zero(); r * c];
    if r == 0 || c == 0 {
        return Ok(flow);
    }
    let mut rem_supply = supply.to_vec();
    let mut rem_demand = demand.to_vec();
    // Leftover mass below this is rounding residue from near-equal totals.
    let residue = F::epsilon() * F::lit(64.0);

    // Nodes: rows 0..r, columns r..r+c, sink r+c. The source is implicit:
    // rows with remaining supply start at distance zero.
    let sink = r + c;
    let nodes = r + c + 1;
    let mut potential = vec![F::zero(); nodes];
    let mut dist = vec![F::infinity(); nodes];
    let mut prev = vec![NONE; nodes];
    let mut done = vec![false; nodes];

    let max_rounds = 64 * (r + c) * (r + c) + 64;
    for _ in 0..max_rounds {
        let supply_left = rem_supply.iter().any(|&s| s > residue);
        let demand_left = rem_demand.iter().any(|&s| s > residue);
        if !supply_left || !demand_left {
            return Ok(flow);
        }

        dist.iter_mut().for_each(|v| *v = F::infinity());
        prev.iter_mut().for_each(|v| *v = NONE);
        done.iter_mut().for_each(|v| *v = false);
        for i in 0..r {
            if rem_supply[i] > residue {
                // Reduced cost of the source arc: 0 + pot[source] - pot[i], pot[source] = 0.
                dist[i] = (-potential[i]).max(F::zero());
            }
        }

        loop {
            let mut u = NONE;
            let mut best = F::infinity();
            for v in 0..nodes {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == NONE || u == sink {
                break;
            }
            done[u] = true;
            if u < r {
                let i = u;
                for j in 0..c {
                    let v = r + j;
                    if done[v] {
                        continue;
                    }
                    let rc = (cost[i * c + j] + potential[u] - potential[v]).max(F::zero());
                    let cand = best + rc;
                    if cand < dist[v] {
                        dist[v] = cand;
                        prev[v] = u;
                    }
                }
            } else {
                let j = u - r;
                for i in 0..r {
                    if done[i] || !(flow[i * c + j] > F::zero()) {
                        continue;
                    }
                    let rc = (potential[u] - potential[i] - cost[i * c + j]).max(F::zero());
                    let cand = best + rc;
                    if cand < dist[i] {
                        dist[i] = cand;
                        prev[i] = u;
                    }
                }
                if rem_demand[j] > residue && !done[sink] {
                    let rc = (potential[u] - potential[sink]).max(F::zero());
                    let cand = best + rc;
                    if cand < dist[sink] {
                        dist[sink] = cand;
                        prev[sink] = u;
                    }
                }
            }
        }

        if prev[sink] == NONE {
            return Err(OtError::Infeasible(
                "no augmenting path while supply and demand remain".into(),
            ));
        }
        let d_sink = dist[sink];
        for v in 0..nodes {
            potential[v] += dist[v].min(d_sink);
        }

        // Walk back from the sink to find the bottleneck.
        let last_col = prev[sink] - r;
        let mut bottleneck = rem_demand[last_col];
        let mut v = prev[sink];
        let first_row;
        loop {
            let u = prev[v];
            if u == NONE {
                first_row = v;
                break;
            }
            if v < r {
                // Reverse arc column u -> row v.
                bottleneck = bottleneck.min(flow[v * c + (u - r)]);
            }
            v = u;
        }
        bottleneck = bottleneck.min(rem_supply[first_row]);

        rem_supply[first_row] = if bottleneck == rem_supply[first_row] {
            F::zero()
        } else {
            rem_supply[first_row] - bottleneck
        };
        rem_demand[last_col] = if bottleneck == rem_demand[last_col] {
            F::zero()
        } else {
            rem_demand[last_col] - bottleneck
        };
        let mut v = prev[sink];
        while prev[v] != NONE {
            let u = prev[v];
            if v >= r {
                flow[u * c + (v - r)] += bottleneck;
            } else {
                let cell = &mut flow[v * c + (u - r)];
                *cell = if *cell == bottleneck {
                    F::zero()
                } else {
                    (*cell - bottleneck).max(F::zero())
                };
            }
            v = u;
        }
    }
    Err(OtError::Infeasible(format!(
        "augmentation limit of {max_rounds} rounds exceeded"
    )))
}
