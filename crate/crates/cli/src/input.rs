//! Config merging and dataset/metric loading shared by subcommands.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use wassfs::data::{load_dataset, load_samples, BinStrategy, Dataset, DatasetSchema, DiscretizerSpec, LabeledSamples};
use wassfs::metric::load_metric_file;
use wassfs::synth::{hierarchical_dataset, HierarchicalSpec};
use wassfs::Metric;

use crate::error::CliError;

/// Overlays the flags that were given onto the JSON object in `config`.
/// Keys the subcommand does not know are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Result<T, CliError> {
    let mut base = match config {
        None => Map::new(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            match serde_json::from_str(&text) {
                Ok(Value::Object(map)) => map,
                Ok(_) => return Err(CliError::input("config", "expected a JSON object")),
                Err(e) => return Err(CliError::input("config", e)),
            }
        }
    };
    let known = match serde_json::to_value(flags).map_err(|e| CliError::input("config", e))? {
        Value::Object(map) => map,
        _ => unreachable!("argument structs serialize as objects"),
    };
    if let Some(unknown) = base.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::input("config", format!("unknown key `{unknown}`")));
    }
    for (k, v) in known {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| CliError::input("config", e))
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataArgs {
    /// Training dataset (CSV, or TSV by extension).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Ground metric file (JSON spec or CSV/TSV matrix).
    #[arg(long)]
    pub metric: Option<PathBuf>,
    /// Label column; repeat for several.
    #[arg(long = "label-col")]
    pub label_col: Option<Vec<String>>,
    /// Discretize raw features into this many bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Binning strategy used with --bins.
    #[arg(long)]
    pub discretize: Option<BinStrategy>,
    /// Level count of every pre-discretized feature.
    #[arg(long)]
    pub arity: Option<usize>,
    /// Generate data instead of reading it (`hierarchical`).
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Sample count of generated data.
    #[arg(long = "synthetic-samples")]
    pub synthetic_samples: Option<usize>,
}

impl DataArgs {
    pub fn schema(&self, path: &Path) -> Result<DatasetSchema, CliError> {
        let tab = matches!(path.extension().and_then(|e| e.to_str()), Some("tsv" | "tab"));
        let discretize = match (self.bins, self.discretize) {
            (None, None) => None,
            (bins, strategy) => Some(DiscretizerSpec {
                bins: bins.unwrap_or(10),
                strategy: strategy.unwrap_or_default(),
            }),
        };
        if let Some(spec) = &discretize {
            if !(2..=wassfs::data::MAX_ARITY).contains(&spec.bins) {
                return Err(CliError::input("bins", format!("must lie in 2..={}", wassfs::data::MAX_ARITY)));
            }
        }
        Ok(DatasetSchema {
            delimiter: if tab { b'\t' } else { b',' },
            label_columns: self.label_col.clone().unwrap_or_else(|| vec!["label".into()]),
            discretize,
            declared_arity: self.arity,
            ..DatasetSchema::default()
        })
    }

    pub fn load_metric(&self) -> Result<Metric, CliError> {
        let path = self
            .metric
            .as_ref()
            .ok_or_else(|| CliError::input("metric", "required"))?;
        if !path.exists() {
            return Err(CliError::input("metric", format!("{} does not exist", path.display())));
        }
        load_metric_file(path).map_err(CliError::from_metric)
    }

    /// The training set and its metric, generated when `--synthetic` is set.
    pub fn load(&self, seed: u64) -> Result<(Dataset, Metric), CliError> {
        if let Some(kind) = &self.synthetic {
            return self.generate(kind, seed);
        }
        let metric = self.load_metric()?;
        let path = self.data.as_ref().ok_or_else(|| CliError::input("data", "required"))?;
        let ds = read_dataset(path, &self.schema(path)?, metric.labels(), "data")?;
        Ok((ds, metric))
    }

    fn generate(&self, kind: &str, seed: u64) -> Result<(Dataset, Metric), CliError> {
        if kind != "hierarchical" {
            return Err(CliError::input("synthetic", format!("unknown generator `{kind}` (expected hierarchical)")));
        }
        if self.data.is_some() || self.metric.is_some() {
            return Err(CliError::input("synthetic", "conflicts with --data and --metric"));
        }
        let spec = HierarchicalSpec {
            n_samples: self.synthetic_samples.unwrap_or(HierarchicalSpec::default().n_samples),
            seed,
            ..HierarchicalSpec::default()
        };
        if spec.n_samples < 2 {
            return Err(CliError::input("synthetic-samples", "must be at least 2"));
        }
        hierarchical_dataset(&spec).map_err(CliError::from_metric)
    }
}

fn open(path: &Path, field: &str) -> Result<BufReader<File>, CliError> {
    if !path.exists() {
        return Err(CliError::input(field, format!("{} does not exist", path.display())));
    }
    Ok(BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?))
}

pub fn read_dataset(path: &Path, schema: &DatasetSchema, classes: &[String], field: &str) -> Result<Dataset, CliError> {
    load_dataset(open(path, field)?, schema, classes).map_err(|e| CliError::from_data(field, e))
}

pub fn read_samples(
    path: &Path,
    schema: &DatasetSchema,
    classes: &[String],
    field: &str,
) -> Result<LabeledSamples, CliError> {
    load_samples(open(path, field)?, schema, classes).map_err(|e| CliError::from_data(field, e))
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn prepare_out(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

/// Records the run's effective arguments before any computation.
pub fn write_config_echo<T: Serialize>(out: &Path, command: &str, args: &T) -> Result<(), CliError> {
    prepare_out(out)?;
    #[derive(Serialize)]
    struct Echo<'a, T> {
        command: &'a str,
        version: &'a str,
        args: &'a T,
    }
    write_json(
        &out.join("config.json"),
        &Echo {
            command,
            version: env!("CARGO_PKG_VERSION"),
            args,
        },
    )
}
