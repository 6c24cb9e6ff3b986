//! Exhaustive checks of the noisy-label bounds on exact population joints.
//!
//! Every quantity here is computed from the joint itself, never from
//! samples, so an observed violation can only be a bug.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{k_subsets, validate_transition, NoiseError};
use crate::metric::GroundMetric;
use crate::ot::{exact_wasserstein, DiscreteDistribution};

/// `p(X, Y)` over binary features. Configuration `x` is an index whose bit
/// `f` is the value of feature `f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationJoint {
    pub n_features: usize,
    pub n_classes: usize,
    pub p_x: Vec<f64>,
    pub p_y_given_x: Vec<Vec<f64>>,
}

/// How observed labels arise from true ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelChannel {
    Clean,
    /// `t[y][z] = p(Ỹ = z | Y = y)`.
    Nar(Vec<Vec<f64>>),
    /// One transition matrix per configuration.
    Nnar(Vec<Vec<Vec<f64>>>),
}

impl LabelChannel {
    fn name(&self) -> &'static str {
        match self {
            LabelChannel::Clean => "clean",
            LabelChannel::Nar(_) => "nar",
            LabelChannel::Nnar(_) => "nnar",
        }
    }
}

impl PopulationJoint {
    pub fn n_configs(&self) -> usize {
        1 << self.n_features
    }

    /// `p(Ỹ | x) = sum_y p(Ỹ | y, x) p(y | x)`.
    pub fn noisy(&self, channel: &LabelChannel) -> Result<PopulationJoint, NoiseError> {
        let pass = |cond: &[f64], t: &[Vec<f64>]| -> Vec<f64> {
            (0..self.n_classes)
                .map(|z| cond.iter().zip(t).map(|(p, row)| p * row[z]).sum())
                .collect()
        };
        let p_y_given_x = match channel {
            LabelChannel::Clean => self.p_y_given_x.clone(),
            LabelChannel::Nar(t) => {
                validate_transition(t, self.n_classes)?;
                self.p_y_given_x.iter().map(|c| pass(c, t)).collect()
            }
            LabelChannel::Nnar(ts) => {
                if ts.len() != self.n_configs() {
                    return Err(NoiseError::InvalidSpec {
                        field: "channel",
                        reason: format!("{} matrices for {} configurations", ts.len(), self.n_configs()),
                    });
                }
                ts.iter().try_for_each(|t| validate_transition(t, self.n_classes))?;
                self.p_y_given_x.iter().zip(ts).map(|(c, t)| pass(c, t)).collect()
            }
        };
        Ok(PopulationJoint {
            p_y_given_x,
            ..self.clone()
        })
    }

    fn group(&self, x: usize, theta: &[usize]) -> usize {
        theta
            .iter()
            .enumerate()
            .map(|(j, &f)| ((x >> f) & 1) << j)
            .sum()
    }

    /// `(p(x_θ), p(Y | x_θ))` for every configuration of θ.
    pub fn restrict(&self, theta: &[usize]) -> Vec<(f64, Vec<f64>)> {
        let mut mass = vec![(0.0, vec![0.0; self.n_classes]); 1 << theta.len()];
        for x in 0..self.n_configs() {
            let g = &mut mass[self.group(x, theta)];
            g.0 += self.p_x[x];
            for (acc, p) in g.1.iter_mut().zip(&self.p_y_given_x[x]) {
                *acc += self.p_x[x] * p;
            }
        }
        for (w, v) in &mut mass {
            if *w > 0.0 {
                v.iter_mut().for_each(|p| *p /= *w);
            }
        }
        mass
    }

    /// `E_X W[p(Y | X), p(Y | X_θ)]`.
    pub fn selection_distance(&self, theta: &[usize], metric: &GroundMetric) -> Result<f64, NoiseError> {
        let coarse = self.restrict(theta);
        let mut total = 0.0;
        for x in 0..self.n_configs() {
            if self.p_x[x] > 0.0 {
                total += self.p_x[x] * w(&self.p_y_given_x[x], &coarse[self.group(x, theta)].1, metric)?;
            }
        }
        Ok(total)
    }
}

fn w(p: &[f64], q: &[f64], metric: &GroundMetric) -> Result<f64, NoiseError> {
    let p = DiscreteDistribution::new(p.to_vec())?;
    let q = DiscreteDistribution::new(q.to_vec())?;
    Ok(exact_wasserstein(&p, &q, metric)?.cost())
}

/// `E_X W[p(Y | X), p(Ỹ | X)]`.
pub fn population_epsilon1(clean: &PopulationJoint, noisy: &PopulationJoint, metric: &GroundMetric) -> Result<f64, NoiseError> {
    let mut total = 0.0;
    for x in 0..clean.n_configs() {
        if clean.p_x[x] > 0.0 {
            total += clean.p_x[x] * w(&clean.p_y_given_x[x], &noisy.p_y_given_x[x], metric)?;
        }
    }
    Ok(total)
}

/// `E_{X_θ} W[p(Y | X_θ), p(Ỹ | X_θ)]`.
pub fn population_epsilon2(
    clean: &PopulationJoint,
    noisy: &PopulationJoint,
    theta: &[usize],
    metric: &GroundMetric,
) -> Result<f64, NoiseError> {
    let a = clean.restrict(theta);
    let b = noisy.restrict(theta);
    let mut total = 0.0;
    for ((wa, pa), (_, pb)) in a.iter().zip(&b) {
        if *wa > 0.0 {
            total += wa * w(pa, pb, metric)?;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremSpec {
    pub trials: usize,
    pub n_features: usize,
    pub k: usize,
    pub n_classes: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for TheoremSpec {
    fn default() -> Self {
        Self {
            trials: 200,
            n_features: 5,
            k: 2,
            n_classes: 3,
            seed: 0,
            tolerance: 1e-7,
        }
    }
}

pub const MAX_FEATURES: usize = 6;
pub const MAX_CLASSES: usize = 4;

impl TheoremSpec {
    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |field, reason: String| Err(NoiseError::InvalidSpec { field, reason });
        if self.trials == 0 {
            return bad("trials", "must be at least 1".into());
        }
        if self.n_features == 0 || self.n_features > MAX_FEATURES {
            return bad("n_features", format!("must lie in 1..={MAX_FEATURES}"));
        }
        if self.k == 0 || self.k > self.n_features {
            return bad("k", format!("must lie in 1..={}", self.n_features));
        }
        if self.n_classes < 2 || self.n_classes > MAX_CLASSES {
            return bad("n_classes", format!("must lie in 2..={MAX_CLASSES}"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance", "must be finite and nonnegative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub channel: &'static str,
    pub epsilon1: f64,
    /// ε₂ at the noisy optimum.
    pub epsilon2: f64,
    /// Largest ε₂(θ) − ε₁ over every θ of size k.
    pub theorem1_max_excess: f64,
    pub theta_clean: Vec<usize>,
    pub theta_noisy: Vec<usize>,
    pub d1_clean_opt: f64,
    pub d1_at_noisy_opt: f64,
    pub d2_noisy_opt: f64,
    pub regret: f64,
    pub four_epsilon1: f64,
    /// `regret / 4ε₁`, absent when ε₁ is zero.
    pub ratio: Option<f64>,
    pub theorem1_pass: bool,
    pub theorem2_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremSummary {
    pub trials: usize,
    pub theorem1_violations: usize,
    pub theorem2_violations: usize,
    pub max_theorem1_excess: f64,
    pub positive_regret_trials: usize,
    pub clean_trials: usize,
    pub max_ratio: f64,
    pub ratio_p50: f64,
    pub ratio_p90: f64,
    pub ratio_p99: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub spec: TheoremSpec,
    pub summary: TheoremSummary,
    pub trials: Vec<TrialReport>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.summary.theorem1_violations == 0 && self.summary.theorem2_violations == 0
    }
}

fn stochastic_row(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn noisy_identity(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let eta: f64 = rng.gen_range(0.0..0.5);
    (0..n)
        .map(|i| {
            let mut row: Vec<f64> = stochastic_row(n, rng).into_iter().map(|v| eta * v).collect();
            row[i] += 1.0 - eta;
            row
        })
        .collect()
}

/// Euclidean distances between random points in the unit square.
pub fn random_planar_metric(n: usize, rng: &mut ChaCha8Rng) -> GroundMetric {
    loop {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        let rows = pts
            .iter()
            .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect();
        if let Ok(m) = GroundMetric::new((0..n).map(|i| format!("c{i}")).collect(), rows) {
            return m;
        }
    }
}

/// A joint where `Y` depends mostly on a few random features.
pub fn random_joint(n_features: usize, n_classes: usize, rng: &mut ChaCha8Rng) -> PopulationJoint {
    let n_configs = 1usize << n_features;
    let raw: Vec<f64> = (0..n_configs).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let p_x = raw.into_iter().map(|v| v / s).collect();
    let n_rel = rng.gen_range(1..=n_features.min(3));
    let mut rel: Vec<usize> = (0..n_features).collect();
    for i in 0..n_rel {
        let j = rng.gen_range(i..n_features);
        rel.swap(i, j);
    }
    rel.truncate(n_rel);
    let logits: Vec<Vec<f64>> = (0..1 << n_rel)
        .map(|_| (0..n_classes).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let beta = rng.gen_range(0.5..4.0);
    let p_y_given_x = (0..n_configs)
        .map(|x| {
            let key: usize = rel.iter().enumerate().map(|(j, &f)| ((x >> f) & 1) << j).sum();
            let e: Vec<f64> = logits[key]
                .iter()
                .map(|l| (beta * l + 0.3 * rng.gen_range(-1.0..1.0)).exp())
                .collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| v / s).collect()
        })
        .collect();
    PopulationJoint {
        n_features,
        n_classes,
        p_x,
        p_y_given_x,
    }
}

fn run_trial(spec: &TheoremSpec, trial: usize) -> Result<TrialReport, NoiseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial as u64);
    let metric = random_planar_metric(spec.n_classes, &mut rng);
    let clean = random_joint(spec.n_features, spec.n_classes, &mut rng);
    let channel = match trial % 4 {
        0 => LabelChannel::Clean,
        3 => LabelChannel::Nnar(
            (0..clean.n_configs())
                .map(|_| noisy_identity(spec.n_classes, &mut rng))
                .collect(),
        ),
        _ => LabelChannel::Nar(noisy_identity(spec.n_classes, &mut rng)),
    };
    let noisy = clean.noisy(&channel)?;
    let eps1 = population_epsilon1(&clean, &noisy, &metric)?;

    let mut best1: Option<(Vec<usize>, f64)> = None;
    let mut best2: Option<(Vec<usize>, f64, f64, f64)> = None;
    let mut max_excess = f64::NEG_INFINITY;
    for theta in k_subsets(spec.n_features, spec.k) {
        let d1 = clean.selection_distance(&theta, &metric)?;
        let d2 = noisy.selection_distance(&theta, &metric)?;
        let eps2 = population_epsilon2(&clean, &noisy, &theta, &metric)?;
        max_excess = max_excess.max(eps2 - eps1);
        if best1.as_ref().is_none_or(|b| d1 < b.1) {
            best1 = Some((theta.clone(), d1));
        }
        if best2.as_ref().is_none_or(|b| d2 < b.1) {
            best2 = Some((theta, d2, d1, eps2));
        }
    }
    let (theta_clean, d1_opt) = best1.expect("k-subsets are nonempty");
    let (theta_noisy, d2_opt, d1_at_2, eps2) = best2.expect("k-subsets are nonempty");
    let regret = d1_at_2 - d1_opt;
    let four = 4.0 * eps1;
    Ok(TrialReport {
        trial,
        channel: channel.name(),
        epsilon1: eps1,
        epsilon2: eps2,
        theorem1_max_excess: max_excess,
        theta_clean,
        theta_noisy,
        d1_clean_opt: d1_opt,
        d1_at_noisy_opt: d1_at_2,
        d2_noisy_opt: d2_opt,
        regret,
        four_epsilon1: four,
        ratio: (four > 1e-12).then(|| regret / four),
        theorem1_pass: max_excess <= spec.tolerance,
        theorem2_pass: regret <= four + spec.tolerance,
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Runs `spec.trials` independent seeded trials. Each one draws a joint,
/// a planar ground metric and a label channel (clean, class-only or
/// feature-dependent), then finds both optima over every feature set of
/// size `k`.
pub fn verify_theorems(spec: &TheoremSpec) -> Result<VerificationReport, NoiseError> {
    spec.validate()?;
    let trials: Vec<TrialReport> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect::<Result<_, _>>()?;
    let mut ratios: Vec<f64> = trials.iter().filter_map(|t| t.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let summary = TheoremSummary {
        trials: trials.len(),
        theorem1_violations: trials.iter().filter(|t| !t.theorem1_pass).count(),
        theorem2_violations: trials.iter().filter(|t| !t.theorem2_pass).count(),
        max_theorem1_excess: trials.iter().map(|t| t.theorem1_max_excess).fold(f64::NEG_INFINITY, f64::max),
        positive_regret_trials: trials.iter().filter(|t| t.regret > 0.0).count(),
        clean_trials: trials.iter().filter(|t| t.channel == "clean").count(),
        max_ratio: ratios.last().copied().unwrap_or(0.0),
        ratio_p50: quantile(&ratios, 0.5),
        ratio_p90: quantile(&ratios, 0.9),
        ratio_p99: quantile(&ratios, 0.99),
    };
    Ok(VerificationReport {
        spec: spec.clone(),
        summary,
        trials,
    })
}
