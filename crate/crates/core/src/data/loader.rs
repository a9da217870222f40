use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetColumn {
    Last,
    Named(String),
}

/// Loads a comma-separated file with a header row.
pub fn load_csv(path: &Path, target: &TargetColumn) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    parse_table(&bytes, b',', target, &name)
}

/// Parses delimited text into a [`Dataset`].
///
/// Target values are re-encoded to `0..c` in sorted order of the distinct raw
/// values: numerically when every raw value parses as a number, otherwise
/// lexicographically. Errors report 1-based file line numbers (header = 1).
pub fn parse_table(
    bytes: &[u8],
    delimiter: u8,
    target: &TargetColumn,
    name: &str,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .from_reader(bytes);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            column: String::new(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Parse {
            line: 1,
            column: String::new(),
            message: "missing header row".into(),
        });
    }
    let target_idx = match target {
        TargetColumn::Last => headers.len() - 1,
        TargetColumn::Named(n) => headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| Error::Dataset(format!("target column '{n}' not found")))?,
    };
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut raw_targets = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Parse {
            line,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if j == target_idx {
                raw_targets.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: headers[j].clone(),
                message: format!("non-numeric value '{cell}'"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: headers[j].clone(),
                    message: format!("non-finite value '{cell}'"),
                });
            }
            values.push(v);
        }
    }

    let (labels, n_classes) = encode_labels(&raw_targets);
    if n_classes < 2 {
        return Err(Error::Dataset(format!(
            "target column '{}' has {} distinct value(s); need at least 2",
            headers[target_idx], n_classes
        )));
    }
    let features = Matrix::new(raw_targets.len(), feature_names.len(), values)?;
    Dataset::new(name, features, labels, feature_names, n_classes)
}

fn encode_labels(raw: &[String]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<&str> = raw.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        let mut order: Vec<usize> = (0..distinct.len()).collect();
        order.sort_by(|&a, &b| nums[a].total_cmp(&nums[b]).then(a.cmp(&b)));
        distinct = order.into_iter().map(|i| distinct[i]).collect();
    }
    let labels = raw
        .iter()
        .map(|r| distinct.iter().position(|d| d == r).unwrap())
        .collect();
    (labels, distinct.len())
}
