use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use wassfs::noise::{verify_theorems, TheoremSpec};

use crate::error::CliError;
use crate::input::{merge, write_config_echo, write_json};

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundsArgs {
    /// Number of random joints.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Binary features per joint.
    #[arg(long)]
    pub m: Option<usize>,
    /// Size of every enumerated feature set.
    #[arg(long)]
    pub k: Option<usize>,
    /// Classes per joint.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Slack allowed on every inequality.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Output directory for config.json and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl BoundsArgs {
    pub fn spec(&self) -> TheoremSpec {
        let d = TheoremSpec::default();
        TheoremSpec {
            trials: self.trials.unwrap_or(d.trials),
            n_features: self.m.unwrap_or(d.n_features),
            k: self.k.unwrap_or(d.k),
            n_classes: self.classes.unwrap_or(d.n_classes),
            seed: self.seed.unwrap_or(d.seed),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
        }
    }
}

pub fn run(args: &BoundsArgs) -> Result<(), CliError> {
    let a = merge(args, args.config.as_deref())?;
    let spec = a.spec();
    spec.validate().map_err(|e| match e {
        wassfs::noise::NoiseError::InvalidSpec { field: "n_features", .. } => CliError::input("m", e),
        wassfs::noise::NoiseError::InvalidSpec { field: "n_classes", .. } => CliError::input("classes", e),
        other => CliError::from_noise(other),
    })?;
    if let Some(out) = &a.out {
        write_config_echo(out, "verify-bounds", &a)?;
    }
    let report = verify_theorems(&spec).map_err(CliError::from_noise)?;
    let s = &report.summary;
    eprintln!(
        "{} trials: {} ordering violations, {} regret violations, max regret/(4 eps1) {:.4}",
        s.trials, s.theorem1_violations, s.theorem2_violations, s.max_ratio
    );
    match &a.out {
        Some(out) => write_json(&out.join("report.json"), &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
    }
    if !report.passed() {
        return Err(CliError::Violation(format!(
            "{} trials broke eps2 <= eps1, {} broke regret <= 4 eps1",
            s.theorem1_violations, s.theorem2_violations
        )));
    }
    Ok(())
}
