use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use wassfs::ot::{exact_wasserstein, kl_divergence, sinkhorn_wasserstein, DiscreteDistribution, KlMode, SinkhornConfig};
use wassfs::Metric;

use crate::error::CliError;
use crate::input::merge;

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OtArgs {
    /// First distribution, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Second distribution, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Ground metric file.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    /// Inline metric rows: `0,1;1,0`.
    #[arg(long)]
    pub matrix: Option<String>,
    /// exact, sinkhorn, kl or all.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Also print the exact coupling.
    #[arg(long)]
    pub plan: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn metric(a: &OtArgs, n: usize) -> Result<Metric, CliError> {
    match (&a.metric, &a.matrix) {
        (Some(path), None) => wassfs::metric::load_metric_file(path).map_err(CliError::from_metric),
        (None, Some(text)) => {
            let rows = text
                .split(';')
                .map(|r| r.split(',').map(|v| v.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::input("matrix", e))?;
            let labels = (0..rows.len()).map(|i| format!("c{i}")).collect();
            Metric::new(labels, rows).map_err(|e| CliError::input("matrix", e))
        }
        (None, None) => Ok(Metric::discrete((0..n).map(|i| format!("c{i}")).collect()).map_err(CliError::from_metric)?),
        (Some(_), Some(_)) => Err(CliError::input("matrix", "conflicts with --metric")),
    }
}

fn dist(v: &Option<Vec<f64>>, field: &str) -> Result<DiscreteDistribution, CliError> {
    let v = v.clone().ok_or_else(|| CliError::input(field, "required"))?;
    DiscreteDistribution::new(v).map_err(|e| CliError::input(field, e))
}

pub fn run(args: &OtArgs) -> Result<(), CliError> {
    let a = merge(args, args.config.as_deref())?;
    let p = dist(&a.p, "p")?;
    let q = dist(&a.q, "q")?;
    let d = metric(&a, p.len())?;
    let measure = a.measure.as_deref().unwrap_or("all");
    let (exact, sinkhorn, kl) = match measure {
        "all" => (true, true, true),
        "exact" | "wasserstein-exact" => (true, false, false),
        "sinkhorn" | "wasserstein-sinkhorn" => (false, true, false),
        "kl" => (false, false, true),
        other => return Err(CliError::input("measure", format!("unknown measure `{other}`"))),
    };
    if exact {
        let plan = exact_wasserstein(&p, &q, &d).map_err(CliError::from_ot)?;
        println!("wasserstein-exact\t{}", plan.cost());
        if a.plan.unwrap_or(false) {
            for i in 0..plan.len() {
                let row: Vec<String> = (0..plan.len()).map(|j| plan.get(i, j).to_string()).collect();
                println!("plan\t{}", row.join("\t"));
            }
        }
    }
    if sinkhorn {
        let cfg = match a.lambda {
            Some(l) => SinkhornConfig::with_lambda(l),
            None => SinkhornConfig::default(),
        };
        let plan = sinkhorn_wasserstein(&p, &q, &d, &cfg).map_err(CliError::from_ot)?;
        println!("wasserstein-sinkhorn\t{}", plan.cost());
    }
    if kl {
        let v = kl_divergence(&p, &q, KlMode::Saturate).map_err(CliError::from_ot)?;
        if v == f64::MAX {
            println!("kl\tinf");
        } else {
            println!("kl\t{v}");
        }
    }
    Ok(())
}
