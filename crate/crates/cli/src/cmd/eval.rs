use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use wassfs::data::split_indices;
use wassfs::eval::{knn_rank_rows, top_k_loss, KnnDistance, DEFAULT_KNN};
use wassfs::selector::SelectionTrace;

use crate::error::CliError;
use crate::input::{merge, read_samples, write_config_echo, write_json, DataArgs};

pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    /// Test dataset; without it the training data is split.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Training share when splitting.
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Feature indices to evaluate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<usize>>,
    /// Selection trace to take the feature set from.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Feature count to read from the trace (default: its retained set).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long = "top-k")]
    pub top_k: Option<usize>,
    /// hamming or l1.
    #[arg(long)]
    pub distance: Option<KnnDistance>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    features: Vec<usize>,
    knn: usize,
    top_k: usize,
    n_train: usize,
    n_test: usize,
    loss: f64,
}

fn theta(a: &EvalArgs) -> Result<Vec<usize>, CliError> {
    match (&a.features, &a.trace) {
        (Some(f), None) => Ok(f.clone()),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let trace: SelectionTrace = serde_json::from_str(&text).map_err(|e| CliError::input("trace", e))?;
            match a.k {
                None => Ok(trace.retained.clone()),
                Some(k) => trace.retained_at(k).ok_or_else(|| {
                    CliError::input(
                        "k",
                        format!("trace covers {}..={} features", trace.retained.len(), trace.n_features),
                    )
                }),
            }
        }
        _ => Err(CliError::input("features", "give exactly one of --features and --trace")),
    }
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let a = merge(args, args.config.as_deref())?;
    let theta = theta(&a)?;
    let knn = a.knn.unwrap_or(DEFAULT_KNN);
    let top_k = a.top_k.unwrap_or(DEFAULT_TOP_K);
    if let Some(out) = &a.out {
        write_config_echo(out, "eval", &a)?;
    }
    let seed = a.seed.unwrap_or(0);
    let (full, metric) = a.data.load(seed)?;
    let (train, rows, truth) = match &a.test {
        Some(path) => {
            let samples = read_samples(path, &a.data.schema(path)?, metric.labels(), "test")?;
            if samples.n_features != full.n_features() {
                return Err(CliError::input(
                    "test",
                    format!("{} features, training data has {}", samples.n_features, full.n_features()),
                ));
            }
            (full, samples.features, samples.label_sets)
        }
        None => {
            let fraction = a.fraction.unwrap_or(DEFAULT_TRAIN_FRACTION);
            let (tr, te) = split_indices(full.n_samples(), fraction, seed).map_err(|e| CliError::input("fraction", e))?;
            let test = full.subset(&te);
            (full.subset(&tr), test.features_flat().to_vec(), test.label_sets())
        }
    };
    let ranking = knn_rank_rows(&train, &rows, train.n_features(), &theta, knn, a.distance.unwrap_or_default())
        .map_err(CliError::from_eval)?;
    let loss = top_k_loss(&ranking, &truth, &metric, top_k).map_err(CliError::from_eval)?;
    println!("top-{top_k} loss\t{loss}");
    if let Some(out) = &a.out {
        let report = EvalReport {
            features: theta,
            knn,
            top_k,
            n_train: train.n_samples(),
            n_test: truth.len(),
            loss,
        };
        write_json(&out.join("eval.json"), &report)?;
    }
    Ok(())
}
