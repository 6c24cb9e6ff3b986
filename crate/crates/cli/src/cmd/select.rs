use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use wassfs::selector::select_features;

use super::{require_k, SelectionOpts};
use crate::error::CliError;
use crate::input::{merge, write_config_echo, write_json, DataArgs};

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub selection: SelectionOpts,
    /// Number of features to keep.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for generated data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for config.json, trace.json and timing.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with defaults for any of the flags above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &SelectArgs) -> Result<(), CliError> {
    let a = merge(args, args.config.as_deref())?;
    let k = require_k(a.k)?;
    if let Some(out) = &a.out {
        write_config_echo(out, "select", &a)?;
    }
    let (ds, metric) = a.data.load(a.seed.unwrap_or(0))?;
    let cfg = a.selection.config(k, metric.len(), None)?;
    let start = Instant::now();
    let trace = select_features(&ds, &metric, &cfg).map_err(CliError::from_select)?;
    let elapsed = start.elapsed();
    eprintln!("retained {:?} of {} features", trace.retained, trace.n_features);
    match &a.out {
        Some(out) => {
            write_json(&out.join("trace.json"), &trace)?;
            write_json(
                &out.join("timing.json"),
                &serde_json::json!({ "select_seconds": elapsed.as_secs_f64() }),
            )?;
        }
        None => println!("{}", serde_json::to_string_pretty(&trace).expect("trace serializes")),
    }
    Ok(())
}
