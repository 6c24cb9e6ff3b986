//! Entropy-regularized transport by Sinkhorn matrix balancing.
//!
//! Minimizes `tr(QᵀD) - H(Q)/lambda` over couplings of `p` and `q`. The
//! fixed point is `Q = diag(u) K diag(v)` with `K = exp(-lambda D)`. Once
//! `lambda * max(D)` exceeds [`LOG_DOMAIN_THRESHOLD`] the scalings are kept
//! as logarithms and the kernel products become log-sum-exps.

use super::{check_dims, DiscreteDistribution, GroundMetric, OtError, TransportPlan};
use crate::scalar::Real;

/// Above this value of `lambda * max(D)` balancing runs in the log domain.
pub const LOG_DOMAIN_THRESHOLD: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornConfig<F = f64> {
    /// Inverse entropy weight; larger is closer to exact transport.
    pub lambda: F,
    pub max_iter: usize,
    /// Stopping threshold on the L1 row-marginal residual.
    pub tol: F,
}

impl<F: Real> Default for SinkhornConfig<F> {
    fn default() -> Self {
        Self {
            lambda: F::lit(100.0),
            max_iter: 10_000,
            tol: F::tolerance(),
        }
    }
}

impl<F: Real> SinkhornConfig<F> {
    pub fn with_lambda(lambda: F) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), OtError> {
        if !(self.lambda > F::zero()) || !self.lambda.is_finite() {
            return Err(OtError::InvalidConfig(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )));
        }
        if !(self.tol > F::zero()) {
            return Err(OtError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(OtError::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Regularized plan; `cost()` is its transport term only.
pub fn sinkhorn_wasserstein<F: Real>(
    p: &DiscreteDistribution<F>,
    q: &DiscreteDistribution<F>,
    d: &GroundMetric<F>,
    cfg: &SinkhornConfig<F>,
) -> Result<TransportPlan<F>, OtError> {
    check_dims(p, q, d)?;
    cfg.validate()?;
    let n = p.len();
    let rows: Vec<usize> = (0..n).filter(|&i| p.get(i) > F::zero()).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| q.get(j) > F::zero()).collect();
    let a: Vec<F> = rows.iter().map(|&i| p.get(i)).collect();
    let b: Vec<F> = cols.iter().map(|&j| q.get(j)).collect();
    let cost: Vec<F> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| d.get(i, j)))
        .collect();
    let max_cost = cost.iter().copied().fold(F::zero(), F::max);

    let block = if cfg.lambda * max_cost > F::lit(LOG_DOMAIN_THRESHOLD) {
        balance_log(&a, &b, &cost, cfg)?
    } else {
        balance_plain(&a, &b, &cost, cfg, max_cost)?
    };

    let mut coupling = vec![F::zero(); n * n];
    let c = cols.len();
    for (x, &i) in rows.iter().enumerate() {
        for (y, &j) in cols.iter().enumerate() {
            coupling[i * n + j] = block[x * c + y];
        }
    }
    Ok(TransportPlan::new(coupling, n, d))
}

fn balance_plain<F: Real>(
    a: &[F],
    b: &[F],
    cost: &[F],
    cfg: &SinkhornConfig<F>,
    max_cost: F,
) -> Result<Vec<F>, OtError> {
    let (r, c) = (a.len(), b.len());
    let kernel: Vec<F> = cost.iter().map(|&x| (-cfg.lambda * x).exp()).collect();
    let underflow = || OtError::Underflow {
        lambda: cfg.lambda.as_f64(),
        max_cost: max_cost.as_f64(),
    };
    let mut u = vec![F::one(); r];
    let mut v = vec![F::one(); c];
    let mut residual = F::infinity();
    for _ in 0..cfg.max_iter {
        for i in 0..r {
            let kv: F = (0..c).map(|j| kernel[i * c + j] * v[j]).sum();
            if !(kv > F::zero()) || !kv.is_finite() {
                return Err(underflow());
            }
            u[i] = a[i] / kv;
        }
        for j in 0..c {
            let ku: F = (0..r).map(|i| kernel[i * c + j] * u[i]).sum();
            if !(ku > F::zero()) || !ku.is_finite() {
                return Err(underflow());
            }
            v[j] = b[j] / ku;
        }
        residual = (0..r)
            .map(|i| {
                let row: F = (0..c).map(|j| kernel[i * c + j] * v[j]).sum();
                (u[i] * row - a[i]).abs()
            })
            .sum();
        if residual <= cfg.tol {
            let mut plan = vec![F::zero(); r * c];
            for i in 0..r {
                for j in 0..c {
                    plan[i * c + j] = u[i] * kernel[i * c + j] * v[j];
                }
            }
            return Ok(plan);
        }
    }
    Err(OtError::NotConverged {
        iterations: cfg.max_iter,
        residual: residual.as_f64(),
    })
}

fn log_sum_exp<F: Real>(values: impl Iterator<Item = F> + Clone) -> F {
    let m = values.clone().fold(F::neg_infinity(), F::max);
    if m == F::neg_infinity() {
        return m;
    }
    m + values.map(|x| (x - m).exp()).sum::<F>().ln()
}

fn balance_log<F: Real>(a: &[F], b: &[F], cost: &[F], cfg: &SinkhornConfig<F>) -> Result<Vec<F>, OtError> {
    let (r, c) = (a.len(), b.len());
    let log_k: Vec<F> = cost.iter().map(|&x| -cfg.lambda * x).collect();
    let log_a: Vec<F> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<F> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![F::zero(); r];
    let mut g = vec![F::zero(); c];
    let underflow = || OtError::Underflow {
        lambda: cfg.lambda.as_f64(),
        max_cost: cost.iter().copied().fold(F::zero(), F::max).as_f64(),
    };
    let mut residual = F::infinity();
    let mut iter = 0;
    while iter < cfg.max_iter {
        iter += 1;
        for i in 0..r {
            f[i] = log_a[i] - log_sum_exp((0..c).map(|j| log_k[i * c + j] + g[j]));
        }
        for j in 0..c {
            g[j] = log_b[j] - log_sum_exp((0..r).map(|i| log_k[i * c + j] + f[i]));
        }
        residual = row_residual(a, &log_k, &f, &g);
        if !residual.is_finite() {
            return Err(underflow());
        }
        if residual <= cfg.tol {
            return Ok(log_plan(&log_k, &f, &g, c));
        }
        // Balancing crawls when the plan nearly splits into blocks; Newton
        // steps on the dual reach the same fixed point quickly.
        if iter % NEWTON_INTERVAL == 0 && r + c <= NEWTON_MAX_DIM {
            for _ in 0..NEWTON_STEPS {
                if iter >= cfg.max_iter || !newton_step(a, b, &log_k, &mut f, &mut g) {
                    break;
                }
                iter += 1;
            }
        }
    }
    Err(OtError::NotConverged {
        iterations: cfg.max_iter,
        residual: residual.as_f64(),
    })
}

/// Balancing iterations between attempts at Newton steps.
const NEWTON_INTERVAL: usize = 200;
const NEWTON_STEPS: usize = 30;
/// Newton solves a dense system of this many potentials at most.
const NEWTON_MAX_DIM: usize = 256;
/// Largest change of a log potential in one Newton step.
const NEWTON_MAX_MOVE: f64 = 4.0;

fn log_plan<F: Real>(log_k: &[F], f: &[F], g: &[F], c: usize) -> Vec<F> {
    let mut plan = vec![F::zero(); f.len() * c];
    for (i, fi) in f.iter().enumerate() {
        for j in 0..c {
            plan[i * c + j] = (*fi + log_k[i * c + j] + g[j]).exp();
        }
    }
    plan
}

fn row_residual<F: Real>(a: &[F], log_k: &[F], f: &[F], g: &[F]) -> F {
    let c = g.len();
    (0..a.len())
        .map(|i| {
            let row = (f[i] + log_sum_exp((0..c).map(|j| log_k[i * c + j] + g[j]))).exp();
            (row - a[i]).abs()
        })
        .sum()
}

/// Dual objective `<a,f> + <b,g> - sum(P)`, concave in the potentials.
fn dual<F: Real>(a: &[F], b: &[F], log_k: &[F], f: &[F], g: &[F]) -> F {
    let c = g.len();
    let mass: F = (0..f.len())
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|(i, j)| (f[i] + log_k[i * c + j] + g[j]).exp())
        .sum();
    a.iter().zip(f).map(|(&x, &y)| x * y).sum::<F>() + b.iter().zip(g).map(|(&x, &y)| x * y).sum::<F>() - mass
}

fn marginal_error<F: Real>(a: &[F], b: &[F], plan: &[F], c: usize) -> F {
    let rows: F = a
        .iter()
        .enumerate()
        .map(|(i, &x)| (plan[i * c..(i + 1) * c].iter().copied().sum::<F>() - x).abs())
        .sum();
    let cols: F = b
        .iter()
        .enumerate()
        .map(|(j, &x)| ((0..a.len()).map(|i| plan[i * c + j]).sum::<F>() - x).abs())
        .sum();
    rows + cols
}

/// One damped Newton ascent step. Returns false when no step improves the
/// dual.
fn newton_step<F: Real>(a: &[F], b: &[F], log_k: &[F], f: &mut [F], g: &mut [F]) -> bool {
    let (r, c) = (f.len(), g.len());
    let plan = log_plan(log_k, f, g, c);
    let row: Vec<F> = (0..r).map(|i| plan[i * c..(i + 1) * c].iter().copied().sum()).collect();
    let ra: Vec<F> = (0..r).map(|i| a[i] - row[i]).collect();
    // Eliminating the row potentials leaves a weighted Laplacian on the
    // columns, W[j][k] = sum_i P_ij P_ik / row_i.
    let mut w = vec![F::zero(); c * c];
    let mut rhs: Vec<F> = (0..c)
        .map(|j| b[j] - (0..r).map(|i| plan[i * c + j]).sum::<F>() - (0..r).map(|i| plan[i * c + j] * ra[i] / row[i]).sum::<F>())
        .collect();
    for i in 0..r {
        for j in 0..c {
            for k in j + 1..c {
                let x = plan[i * c + j] * plan[i * c + k] / row[i];
                w[j * c + k] += x;
                w[k * c + j] += x;
            }
        }
    }
    let Some(dg) = solve_laplacian(w, &mut rhs, c) else {
        return false;
    };
    let df: Vec<F> = (0..r)
        .map(|i| (ra[i] - (0..c).map(|j| plan[i * c + j] * dg[j]).sum::<F>()) / row[i])
        .collect();
    let mut step: Vec<F> = df.into_iter().chain(dg).collect();
    // Nearly decoupled blocks give huge but well-directed steps; bound the
    // move of any potential so the line search starts in a sane range.
    let largest = step.iter().fold(F::zero(), |m, v| m.max(v.abs()));
    if !largest.is_finite() {
        return false;
    }
    if largest > F::lit(NEWTON_MAX_MOVE) {
        let scale = F::lit(NEWTON_MAX_MOVE) / largest;
        step.iter_mut().for_each(|v| *v *= scale);
    }
    let base = dual(a, b, log_k, f, g);
    let base_err = marginal_error(a, b, &plan, c);
    let mut t = F::one();
    for _ in 0..40 {
        let nf: Vec<F> = (0..r).map(|i| f[i] + t * step[i]).collect();
        let ng: Vec<F> = (0..c).map(|j| g[j] + t * step[r + j]).collect();
        // Near the optimum dual gains fall below rounding; a smaller
        // marginal error is then the acceptance test.
        let value = dual(a, b, log_k, &nf, &ng);
        let err = marginal_error(a, b, &log_plan(log_k, &nf, &ng, c), c);
        if value.is_finite() && (value > base || (value >= base && err < base_err)) {
            f.copy_from_slice(&nf);
            g.copy_from_slice(&ng);
            return true;
        }
        t *= F::lit(0.5);
    }
    false
}

/// Solves `L x = rhs` for the Laplacian with off-diagonal weights `w`,
/// pinning the last node at zero. Diagonals are always recomputed as weight
/// sums, so tiny couplings survive elimination without cancellation.
fn solve_laplacian<F: Real>(mut w: Vec<F>, rhs: &mut [F], n: usize) -> Option<Vec<F>> {
    let last = n - 1;
    let mut pivots = vec![F::zero(); n];
    for e in 0..last {
        let d: F = (e + 1..n).map(|k| w[e * n + k]).sum();
        if !(d > F::zero()) {
            return None;
        }
        pivots[e] = d;
        for j in e + 1..n {
            let wj = w[e * n + j];
            if wj == F::zero() {
                continue;
            }
            rhs[j] += wj * rhs[e] / d;
            for k in j + 1..n {
                let x = wj * w[e * n + k] / d;
                w[j * n + k] += x;
                w[k * n + j] += x;
            }
        }
    }
    let mut x = vec![F::zero(); n];
    for e in (0..last).rev() {
        let tail: F = (e + 1..n).map(|k| w[e * n + k] * x[k]).sum();
        x[e] = (rhs[e] + tail) / pivots[e];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
