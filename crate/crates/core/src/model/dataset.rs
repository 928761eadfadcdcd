use std::path::Path;

use super::BlrDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPosition {
    First,
    Last,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub label_position: LabelPosition,
    /// Center each non-constant feature column and scale it to unit sample variance.
    pub standardize: bool,
    /// Append a column of ones after standardization.
    pub intercept: bool,
    pub has_header: bool,
    pub prior_precision: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            label_position: LabelPosition::Last,
            standardize: false,
            intercept: false,
            has_header: false,
            prior_precision: 1.0,
        }
    }
}

/// Reads a numeric CSV file into a logistic-regression dataset.
///
/// Labels must take at most two distinct values. Values already in {-1, +1}
/// are kept; otherwise the smaller value maps to -1 and the larger to +1.
pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<BlrDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut width = None;
    let mut raw_features = Vec::new();
    let mut raw_labels = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1 + usize::from(opts.has_header);
        let record = record.map_err(|e| Error::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RowWidth {
                row,
                found: record.len(),
                expected,
            });
        }
        if expected < 2 {
            return Err(Error::Parse {
                row,
                column: 1,
                message: "need at least one feature and one label".into(),
            });
        }
        let label_col = match opts.label_position {
            LabelPosition::First => 0,
            LabelPosition::Last => expected - 1,
        };
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                column: col + 1,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: col + 1,
                    message: "missing or non-finite value".into(),
                });
            }
            if col == label_col {
                raw_labels.push(value);
            } else {
                raw_features.push(value);
            }
        }
    }
    let Some(width) = width else {
        return Err(Error::Parse {
            row: 1,
            column: 0,
            message: "file contains no data rows".into(),
        });
    };
    let n_obs = raw_labels.len();
    let mut n_features = width - 1;
    let labels = map_labels(&raw_labels)?;

    if opts.standardize {
        standardize_columns(&mut raw_features, n_obs, n_features);
    }
    let features = if opts.intercept {
        let mut with_one = Vec::with_capacity(n_obs * (n_features + 1));
        for row in raw_features.chunks_exact(n_features) {
            with_one.extend_from_slice(row);
            with_one.push(1.0);
        }
        n_features += 1;
        with_one
    } else {
        raw_features
    };
    BlrDataset::new(features, n_obs, n_features, labels, opts.prior_precision)
}

fn map_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = raw.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.iter().all(|&v| v == 1.0 || v == -1.0) {
        return Ok(raw.to_vec());
    }
    match distinct.as_slice() {
        [lo, hi] => Ok(raw
            .iter()
            .map(|v| if v == lo { -1.0 } else { debug_assert_eq!(v, hi); 1.0 })
            .collect()),
        [0.0] => Ok(vec![-1.0; raw.len()]),
        _ => Err(Error::InvalidArgument(format!(
            "labels must take two distinct values, found {}",
            distinct.len()
        ))),
    }
}

fn standardize_columns(x: &mut [f64], n_obs: usize, n_features: usize) {
    if n_obs < 2 {
        return;
    }
    for j in 0..n_features {
        let mean = (0..n_obs).map(|i| x[i * n_features + j]).sum::<f64>() / n_obs as f64;
        let var = (0..n_obs)
            .map(|i| (x[i * n_features + j] - mean).powi(2))
            .sum::<f64>()
            / (n_obs - 1) as f64;
        if var <= 0.0 {
            continue;
        }
        let sd = var.sqrt();
        for i in 0..n_obs {
            let v = &mut x[i * n_features + j];
            *v = (*v - mean) / sd;
        }
    }
}
