use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::input::{merge, DataArgs};

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricArgs {
    /// Ground metric file.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    /// Report each class's neighbors within this distance.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &MetricArgs) -> Result<(), CliError> {
    let a = merge(args, args.config.as_deref())?;
    let data = DataArgs {
        metric: a.metric.clone(),
        ..DataArgs::default()
    };
    let m = data.load_metric()?;
    println!("ok\t{} classes\tmax distance {}", m.len(), m.max_distance());
    if let Some(t) = a.threshold {
        for (c, label) in m.labels().iter().enumerate() {
            let nb: Vec<&str> = m.neighbors_within(c, t).into_iter().map(|o| m.labels()[o].as_str()).collect();
            println!("{label}\t{}", nb.join(","));
        }
    }
    Ok(())
}
