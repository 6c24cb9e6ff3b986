use std::io::Read;

use super::{discretize, expand_multilabel, infer_arity, DataError, Dataset, DiscretizerSpec, LabeledSamples, MAX_ARITY};

/// How to read a delimited dataset file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema {
    pub delimiter: u8,
    /// Columns holding labels. Every nonempty cell adds one label to the
    /// row's label set; a cell may hold several labels joined by
    /// `label_separator`.
    pub label_columns: Vec<String>,
    pub label_separator: char,
    /// `None` when features are already discrete levels.
    pub discretize: Option<DiscretizerSpec>,
    /// Declared level count for every feature of a pre-discretized file.
    pub declared_arity: Option<usize>,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            delimiter: b',',
            label_columns: vec!["label".into()],
            label_separator: ';',
            discretize: None,
            declared_arity: None,
        }
    }
}

impl DatasetSchema {
    pub fn with_label_column(mut self, name: impl Into<String>) -> Self {
        self.label_columns = vec![name.into()];
        self
    }
}

/// Reads samples with label sets. `classes` fixes the class order; any
/// label outside it is an error.
pub fn load_samples<R: Read>(reader: R, schema: &DatasetSchema, classes: &[String]) -> Result<LabeledSamples, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let label_idx: Vec<usize> = schema
        .label_columns
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| DataError::MissingColumn(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let feature_idx: Vec<usize> = (0..header.len()).filter(|i| !label_idx.contains(i)).collect();
    let m = feature_idx.len();
    if m == 0 {
        return Err(DataError::Empty);
    }

    let mut label_sets = Vec::new();
    let mut discrete: Vec<u8> = Vec::new();
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = r + 2;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != header.len() {
            return Err(DataError::Ragged {
                line,
                found: rec.len(),
                expected: header.len(),
            });
        }
        let mut set = Vec::new();
        for &c in &label_idx {
            for label in rec[c].split(schema.label_separator).map(str::trim).filter(|s| !s.is_empty()) {
                let idx = classes
                    .iter()
                    .position(|k| k == label)
                    .ok_or_else(|| DataError::UnknownLabel {
                        line,
                        label: label.to_owned(),
                    })?;
                if !set.contains(&idx) {
                    set.push(idx);
                }
            }
        }
        if set.is_empty() {
            return Err(DataError::EmptyLabelSet {
                sample: label_sets.len(),
            });
        }
        label_sets.push(set);

        let non_numeric = |c: usize| DataError::NonNumeric {
            line,
            column: header[c].clone(),
            value: rec[c].to_owned(),
        };
        if schema.discretize.is_some() {
            let row = feature_idx
                .iter()
                .map(|&c| rec[c].parse::<f64>().map_err(|_| non_numeric(c)))
                .collect::<Result<Vec<_>, _>>()?;
            raw.push(row);
        } else {
            for &c in &feature_idx {
                let v: usize = rec[c].parse().map_err(|_| non_numeric(c))?;
                if v >= MAX_ARITY {
                    return Err(DataError::ArityCap {
                        feature: feature_idx.iter().position(|&x| x == c).unwrap_or(0),
                        arity: v + 1,
                    });
                }
                discrete.push(v as u8);
            }
        }
    }
    if label_sets.is_empty() {
        return Err(DataError::Empty);
    }

    let (features, arity) = match &schema.discretize {
        Some(spec) => discretize(&raw, spec)?,
        None => {
            let arity = match schema.declared_arity {
                Some(a) => {
                    if a > MAX_ARITY {
                        return Err(DataError::ArityCap { feature: 0, arity: a });
                    }
                    vec![a; m]
                }
                None => infer_arity(&discrete, m),
            };
            (discrete, arity)
        }
    };
    let samples = LabeledSamples {
        features,
        n_features: m,
        arity,
        label_sets,
        classes: classes.to_vec(),
    };
    // Validates levels against the (possibly declared) arity.
    expand_multilabel(&samples)?;
    Ok(samples)
}

/// Reads a dataset, expanding multi-label rows into one row per label.
pub fn load_dataset<R: Read>(reader: R, schema: &DatasetSchema, classes: &[String]) -> Result<Dataset, DataError> {
    let samples = load_samples(reader, schema, classes)?;
    expand_multilabel(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classes() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn binary_file() {
        let csv = "x1,x2,label\n0,1,a\n1,1,b\n0,0,a\n";
        let ds = load_dataset(csv.as_bytes(), &DatasetSchema::default(), &classes()).unwrap();
        assert_eq!((ds.n_samples(), ds.n_features()), (3, 2));
        assert_eq!(ds.arity(), [2, 2]);
        assert_eq!(ds.labels(), [0, 1, 0]);
    }

    #[test]
    fn unknown_label_is_named() {
        let csv = "x1,label\n0,a\n1,zebra\n";
        let err = load_dataset(csv.as_bytes(), &DatasetSchema::default(), &classes()).unwrap_err();
        assert!(err.to_string().contains("zebra"), "{err}");
        assert!(matches!(err, DataError::UnknownLabel { line: 3, .. }));
    }

    #[test]
    fn declared_binary_rejects_level_seven() {
        let csv = "x1,label\n0,a\n7,b\n";
        let schema = DatasetSchema {
            declared_arity: Some(2),
            ..DatasetSchema::default()
        };
        let err = load_dataset(csv.as_bytes(), &schema, &classes()).unwrap_err();
        assert!(matches!(err, DataError::ArityViolation { value: 7, arity: 2, .. }), "{err}");
    }

    #[test]
    fn ragged_and_non_numeric() {
        let ragged = "x1,x2,label\n0,1,a\n1,b\n";
        assert!(matches!(
            load_dataset(ragged.as_bytes(), &DatasetSchema::default(), &classes()),
            Err(DataError::Ragged { line: 3, .. })
        ));
        let text = "x1,label\nhigh,a\n";
        assert!(matches!(
            load_dataset(text.as_bytes(), &DatasetSchema::default(), &classes()),
            Err(DataError::NonNumeric { .. })
        ));
    }

    #[test]
    fn multilabel_cells_and_tsv_with_discretization() {
        let tsv = "f\ttags\n0.5\ta;b\n1.5\tb\n2.5\ta\n3.5\tb\n";
        let schema = DatasetSchema {
            delimiter: b'\t',
            label_columns: vec!["tags".into()],
            discretize: Some(DiscretizerSpec::quantile(2)),
            ..DatasetSchema::default()
        };
        let samples = load_samples(tsv.as_bytes(), &schema, &classes()).unwrap();
        assert_eq!(samples.label_sets[0], [0, 1]);
        assert_eq!(samples.features, [0, 0, 1, 1]);
        let ds = load_dataset(tsv.as_bytes(), &schema, &classes()).unwrap();
        assert_eq!(ds.n_samples(), 5);
    }

    #[test]
    fn missing_label_column() {
        let schema = DatasetSchema::default().with_label_column("class");
        assert!(matches!(
            load_dataset("x,label\n0,a\n".as_bytes(), &schema, &classes()),
            Err(DataError::MissingColumn(_))
        ));
    }
}
