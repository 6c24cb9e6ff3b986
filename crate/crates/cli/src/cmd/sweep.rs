use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wassfs::data::{split_indices, Dataset};
use wassfs::eval::{knn_rank_rows, top_k_loss, write_loss_tsv, KnnDistance, LossRow, DEFAULT_KNN};
use wassfs::noise::{flip_labels, DEFAULT_NEIGHBOR_THRESHOLD};
use wassfs::ot::Measure;
use wassfs::selector::select_features;
use wassfs::Metric;

use super::eval::{DEFAULT_TOP_K, DEFAULT_TRAIN_FRACTION};
use super::SelectionOpts;
use crate::error::CliError;
use crate::input::{merge, read_samples, write_config_echo, DataArgs};

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub selection: SelectionOpts,
    /// Clean-labelled test dataset; without it each seed splits the data.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Flip probabilities, comma separated.
    #[arg(long = "p-list", value_delimiter = ',')]
    pub p_list: Option<Vec<f64>>,
    /// Feature counts to evaluate, comma separated.
    #[arg(long = "n-features", value_delimiter = ',')]
    pub n_features: Option<Vec<usize>>,
    /// Measures to compare, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub measures: Option<Vec<Measure>>,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Single seed, used when --seeds is absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long = "top-k")]
    pub top_k: Option<usize>,
    /// Flip targets are classes within this distance.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Output directory for config.json, loss.tsv and averaged.tsv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

/// Resolved sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub p_list: Vec<f64>,
    pub n_features: Vec<usize>,
    pub measures: Vec<Measure>,
    pub seeds: Vec<u64>,
    pub knn: usize,
    pub top_k: usize,
    pub threshold: f64,
    pub selection: SelectionOpts,
}

/// One seed's data: noisy labels are drawn on `train`, `test` keeps clean
/// label sets.
pub struct SweepData {
    pub train: Dataset,
    pub test_rows: Vec<u8>,
    pub test_truth: Vec<Vec<usize>>,
    pub metric: Metric,
}

impl SweepData {
    pub fn split(full: &Dataset, metric: Metric, fraction: f64, seed: u64) -> Result<Self, CliError> {
        let (tr, te) = split_indices(full.n_samples(), fraction, seed).map_err(|e| CliError::input("fraction", e))?;
        let test = full.subset(&te);
        Ok(Self {
            train: full.subset(&tr),
            test_rows: test.features_flat().to_vec(),
            test_truth: test.label_sets(),
            metric,
        })
    }
}

/// Grid indices (measure, n_features, p, seed) with the row they produced.
type CellRow = (usize, usize, usize, usize, LossRow);

/// Stream for the labels flipped under seed `seed` at grid position `p_index`.
pub fn flip_seed(seed: u64, p_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ p_index as u64
}

impl SweepPlan {
    fn validate(&self) -> Result<(), CliError> {
        if self.p_list.is_empty() || self.p_list.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(CliError::input("p-list", "needs probabilities in [0, 1]"));
        }
        if self.n_features.is_empty() || self.n_features.contains(&0) {
            return Err(CliError::input("n-features", "needs feature counts >= 1"));
        }
        if self.measures.is_empty() {
            return Err(CliError::input("measures", "needs at least one measure"));
        }
        if self.seeds.is_empty() {
            return Err(CliError::input("seeds", "needs at least one seed"));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(CliError::input("threshold", "must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Runs every (seed, P, measure, feature count) cell. Rows come back
    /// ordered by measure (as listed), feature count, P and seed.
    pub fn run<L>(&self, load: L) -> Result<Vec<LossRow>, CliError>
    where
        L: Fn(u64) -> Result<SweepData, CliError> + Sync,
    {
        self.validate()?;
        let k_min = *self.n_features.iter().min().expect("validated nonempty");
        let cells: Vec<(usize, usize)> = (0..self.seeds.len())
            .flat_map(|s| (0..self.p_list.len()).map(move |p| (s, p)))
            .collect();
        let data: Vec<SweepData> = self.seeds.par_iter().map(|&s| load(s)).collect::<Result<_, _>>()?;
        for d in &data {
            if let Some(&nf) = self.n_features.iter().find(|&&nf| nf > d.train.n_features()) {
                return Err(CliError::input(
                    "n-features",
                    format!("{nf} exceeds the {} available features", d.train.n_features()),
                ));
            }
        }
        let results: Vec<Vec<CellRow>> = cells
            .par_iter()
            .map(|&(si, pi)| {
                let d = &data[si];
                let seed = self.seeds[si];
                let p = self.p_list[pi];
                let noisy = flip_labels(&d.train, &d.metric, p, self.threshold, flip_seed(seed, pi))
                    .map_err(CliError::from_noise)?;
                let mut rows = Vec::new();
                for (mi, &measure) in self.measures.iter().enumerate() {
                    let cfg = self.selection.config(k_min, d.metric.len(), Some(measure))?;
                    let trace = select_features(&noisy, &d.metric, &cfg).map_err(CliError::from_select)?;
                    for (ni, &nf) in self.n_features.iter().enumerate() {
                        let theta = trace.retained_at(nf).expect("feature count within the trace");
                        let ranking = knn_rank_rows(
                            &noisy,
                            &d.test_rows,
                            noisy.n_features(),
                            &theta,
                            self.knn,
                            KnnDistance::Hamming,
                        )
                        .map_err(CliError::from_eval)?;
                        let loss = top_k_loss(&ranking, &d.test_truth, &d.metric, self.top_k).map_err(CliError::from_eval)?;
                        rows.push((
                            mi,
                            ni,
                            pi,
                            si,
                            LossRow {
                                n_features: nf,
                                k: self.top_k,
                                p,
                                measure: measure.name().into(),
                                loss,
                                seed,
                            },
                        ));
                    }
                }
                Ok(rows)
            })
            .collect::<Result<_, CliError>>()?;
        let mut flat: Vec<_> = results.into_iter().flatten().collect();
        flat.sort_by_key(|r| (r.0, r.1, r.2, r.3));
        Ok(flat.into_iter().map(|r| r.4).collect())
    }
}

/// Mean loss over every P and seed for each (measure, feature count), in
/// first-appearance order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragedRow {
    pub n_features: usize,
    pub k: usize,
    pub measure: String,
    pub loss: f64,
    pub cells: usize,
}

pub fn average(rows: &[LossRow]) -> Vec<AveragedRow> {
    let mut order = Vec::new();
    let mut acc: BTreeMap<(String, usize), (f64, usize, usize)> = BTreeMap::new();
    for r in rows {
        let key = (r.measure.clone(), r.n_features);
        let e = acc.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (0.0, 0, r.k)
        });
        e.0 += r.loss;
        e.1 += 1;
    }
    order
        .into_iter()
        .map(|key| {
            let (sum, cells, k) = acc[&key];
            AveragedRow {
                n_features: key.1,
                k,
                measure: key.0,
                loss: sum / cells as f64,
                cells,
            }
        })
        .collect()
}

pub fn write_averaged<W: Write>(rows: &[AveragedRow], mut out: W) -> io::Result<()> {
    writeln!(out, "n_features\tk\tmeasure\tavg_loss\tcells")?;
    for r in rows {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", r.n_features, r.k, r.measure, r.loss, r.cells)?;
    }
    Ok(())
}

pub fn plan(a: &SweepArgs) -> Result<SweepPlan, CliError> {
    let n_features = a
        .n_features
        .clone()
        .ok_or_else(|| CliError::input("n-features", "required"))?;
    Ok(SweepPlan {
        p_list: a.p_list.clone().unwrap_or_else(|| vec![0.0]),
        n_features,
        measures: a
            .measures
            .clone()
            .unwrap_or_else(|| vec![Measure::WassersteinExact, Measure::Kl]),
        seeds: a.seeds.clone().unwrap_or_else(|| vec![a.seed.unwrap_or(0)]),
        knn: a.knn.unwrap_or(DEFAULT_KNN),
        top_k: a.top_k.unwrap_or(DEFAULT_TOP_K),
        threshold: a.threshold.unwrap_or(DEFAULT_NEIGHBOR_THRESHOLD),
        selection: a.selection.clone(),
    })
}

pub fn run(args: &SweepArgs) -> Result<(), CliError> {
    let a = merge(args, args.config.as_deref())?;
    let plan = plan(&a)?;
    if a.knn == Some(0) {
        return Err(CliError::input("knn", "must be at least 1"));
    }
    if let Some(out) = &a.out {
        write_config_echo(out, "noise-sweep", &a)?;
    }
    let fraction = a.fraction.unwrap_or(DEFAULT_TRAIN_FRACTION);
    let fixed_test = match &a.test {
        Some(path) => {
            let (train, metric) = a.data.load(0)?;
            let samples = read_samples(path, &a.data.schema(path)?, metric.labels(), "test")?;
            if samples.n_features != train.n_features() {
                return Err(CliError::input("test", "feature count differs from the training data"));
            }
            Some((train, metric, samples))
        }
        None => None,
    };
    let rows = plan.run(|seed| match &fixed_test {
        Some((train, metric, samples)) => Ok(SweepData {
            train: train.clone(),
            test_rows: samples.features.clone(),
            test_truth: samples.label_sets.clone(),
            metric: metric.clone(),
        }),
        None => {
            let (full, metric) = a.data.load(seed)?;
            SweepData::split(&full, metric, fraction, seed)
        }
    })?;
    let averaged = average(&rows);
    match &a.out {
        Some(out) => {
            let path = out.join("loss.tsv");
            let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_loss_tsv(&rows, BufWriter::new(f)).map_err(|e| CliError::input("out", e))?;
            let path = out.join("averaged.tsv");
            let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_averaged(&averaged, BufWriter::new(f)).map_err(|e| CliError::io(&path, e))?;
        }
        None => {
            let stdout = io::stdout();
            write_loss_tsv(&rows, stdout.lock()).map_err(|e| CliError::input("out", e))?;
        }
    }
    for r in &averaged {
        eprintln!("{}\t{} features\tavg top-{} loss {:.4}", r.measure, r.n_features, r.k, r.loss);
    }
    Ok(())
}
