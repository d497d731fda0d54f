//! Regression data files for the GP workload.
//!
//! A dataset file is CSV with the covariates first and the response in the
//! last column. A header line is allowed and detected by its first field not
//! being a number.

use std::path::Path;

use cfqmc_core::gp::{choose_subset, Dataset};
use cfqmc_core::linalg::Matrix;

use crate::error::{Error, Result};
use crate::formats::read_file;

/// A training subset and the rows left over, which can serve as test
/// inputs.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Row indices (0-based, data rows only) used for training.
    pub train_rows: Vec<usize>,
    /// Raw covariates of the unused rows, in file order.
    pub held_out: Vec<Vec<f64>>,
}

/// Parses every data row of a dataset file.
pub fn parse_rows(text: &str, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if rows.is_empty() && width.is_none() && fields[0].parse::<f64>().is_err() {
            width = Some(fields.len());
            continue;
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, line, format!("non-numeric cell `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected {
            return Err(Error::parse(
                path,
                line,
                format!("expected {expected} columns, found {}", values.len()),
            ));
        }
        if values.len() < 2 {
            return Err(Error::parse(
                path,
                line,
                "need at least one covariate and a response",
            ));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 1, "no data rows"));
    }
    Ok(rows)
}

/// Builds a standardized training set from at most `cap` rows drawn with
/// `seed`.
pub fn dataset_from_rows(rows: &[Vec<f64>], cap: usize, seed: u64) -> Result<LoadedData> {
    let mut train_rows = choose_subset(rows.len(), cap.min(rows.len()), seed);
    train_rows.sort_unstable();
    let p = rows[0].len() - 1;
    let covariates = Matrix::from_fn(train_rows.len(), p, |i, j| rows[train_rows[i]][j]);
    let responses = train_rows.iter().map(|&i| rows[i][p]).collect();
    let dataset = Dataset::from_raw(covariates, responses)?;
    let mut used = vec![false; rows.len()];
    for &i in &train_rows {
        used[i] = true;
    }
    let held_out = rows
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .map(|(r, _)| r[..p].to_vec())
        .collect();
    Ok(LoadedData {
        dataset,
        train_rows,
        held_out,
    })
}

pub fn load_dataset(path: &Path, cap: usize, seed: u64) -> Result<LoadedData> {
    let rows = parse_rows(&read_file(path)?, path)?;
    dataset_from_rows(&rows, cap, seed)
}
