use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{block_metric, tree_metric, BlockPartition, GroundMetric, LabelTree, MetricError, TreeNode};
use crate::scalar::Real;

/// JSON metric description, discriminated by `"type"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MetricSpec {
    Tree {
        layer_weights: Vec<f64>,
        nodes: Vec<TreeNode>,
    },
    Block {
        within: f64,
        between: f64,
        cells: Vec<Vec<String>>,
    },
    Matrix {
        labels: Vec<String>,
        dist: Vec<Vec<f64>>,
    },
}

impl MetricSpec {
    pub fn build<F: Real>(&self) -> Result<GroundMetric<F>, MetricError> {
        match self {
            MetricSpec::Tree { layer_weights, nodes } => tree_metric(&LabelTree::new(
                nodes.clone(),
                layer_weights.iter().map(|&w| F::lit(w)).collect(),
            )),
            MetricSpec::Block { within, between, cells } => block_metric(&BlockPartition {
                cells: cells.clone(),
                within: F::lit(*within),
                between: F::lit(*between),
            }),
            MetricSpec::Matrix { labels, dist } => GroundMetric::new(
                labels.clone(),
                dist.iter().map(|r| r.iter().map(|&d| F::lit(d)).collect()).collect(),
            ),
        }
    }
}

pub fn parse_metric_spec<F: Real>(json: &str) -> Result<GroundMetric<F>, MetricError> {
    let spec: MetricSpec = serde_json::from_str(json).map_err(|e| MetricError::Parse(e.to_string()))?;
    spec.build()
}

/// Reads a delimited square matrix whose header row lists the class labels.
///
/// Both layouts are accepted: a header of `n` labels followed by `n`
/// numeric rows, or a header with a leading corner cell and rows that begin
/// with their label (which must match the header order). Tabs are used as
/// the delimiter when the header contains one, commas otherwise.
pub fn load_metric_matrix<F: Real, R: Read>(mut reader: R) -> Result<GroundMetric<F>, MetricError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let header_line = text.lines().next().ok_or_else(|| MetricError::Parse("empty file".into()))?;
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| MetricError::Parse("missing header".into()))?
        .map_err(|e| MetricError::Parse(e.to_string()))?;
    let header: Vec<String> = header.iter().map(str::to_owned).collect();

    let mut rows_raw: Vec<Vec<String>> = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| MetricError::Parse(e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows_raw.push(rec.iter().map(str::to_owned).collect());
    }
    let row_labelled = header.len() == rows_raw.len() + 1;
    let labels: Vec<String> = if row_labelled {
        header[1..].to_vec()
    } else {
        header
    };
    let mut rows = Vec::with_capacity(rows_raw.len());
    for (r, raw) in rows_raw.iter().enumerate() {
        let cells: &[String] = if row_labelled {
            if raw.first().map(String::as_str) != labels.get(r).map(String::as_str) {
                return Err(MetricError::Parse(format!(
                    "row {} is labelled `{}`, expected `{}`",
                    r + 1,
                    raw.first().map(String::as_str).unwrap_or(""),
                    labels.get(r).map(String::as_str).unwrap_or("")
                )));
            }
            &raw[1..]
        } else {
            raw
        };
        let row: Vec<F> = cells
            .iter()
            .enumerate()
            .map(|(c, s)| {
                s.parse::<f64>()
                    .map(F::lit)
                    .map_err(|_| MetricError::Parse(format!("row {}, column {}: `{s}` is not numeric", r + 1, c + 1)))
            })
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    GroundMetric::new(labels, rows)
}

/// Loads a metric from a `.json` spec or a delimited matrix file.
pub fn load_metric_file<F: Real>(path: &Path) -> Result<GroundMetric<F>, MetricError> {
    let text = fs::read_to_string(path)?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    if is_json {
        parse_metric_spec(&text)
    } else {
        load_metric_matrix(text.as_bytes())
    }
}
