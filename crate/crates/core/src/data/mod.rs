//! Dataset ingestion and preparation: CSV loading with missing-row removal,
//! quantile binarization, stratified splitting, and the on-disk formats.

mod binarize;
mod io;
pub mod split;

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::bits::{BitMatrix, BitVector};
use crate::error::{Error, Result};
use crate::formula::FeatureNames;

pub use binarize::{binarize, BinKind, BinarizedMatrix, FeatureDescriptor};
pub use io::{load_dataset, read_xbf, save_dataset, write_xbf, DatasetDescriptor, XBF_MAGIC};
pub use split::{stratified_split, stratified_subsample};

pub use crate::metrics::ClassWeights;

/// Balanced class weights for `y`.
pub fn class_weights(y: &BitVector) -> Result<ClassWeights> {
    ClassWeights::balanced(y)
}

const MISSING: &[&str] = &["", "na", "n/a", "nan", "?", "null", "none"];

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    MISSING.iter().any(|m| c.eq_ignore_ascii_case(m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
    /// Numeric with values in {0, 1}.
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub values: ColumnValues,
}

/// A rectangular table of feature columns with binary labels, after rows
/// with missing cells have been dropped.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub columns: Vec<RawColumn>,
    pub labels: BitVector,
    pub label_column: String,
    pub positive_label: String,
    pub dropped_rows: usize,
}

impl RawTable {
    pub fn rows(&self) -> usize {
        self.labels.len()
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str, positive_label: &str) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    read_csv(file, label_column, positive_label)
}

/// Parses CSV text with a header row. Rows with any missing cell are dropped
/// and counted.
pub fn read_csv(reader: impl Read, label_column: &str, positive_label: &str) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::data(format!("label column `{label_column}` not found")))?;

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    let mut dropped = 0;
    for record in rdr.records() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::data(format!(
                "row has {} cells, header has {}",
                record.len(),
                headers.len()
            )));
        }
        if record.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        for (col, cell) in cells.iter_mut().zip(record.iter()) {
            col.push(cell.to_string());
        }
    }
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing values");
    }

    let label_cells = &cells[label_idx];
    let labels = map_labels(label_cells, positive_label)?;

    let columns = headers
        .iter()
        .zip(cells.iter())
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, (name, values))| typed_column(name, values))
        .collect();

    Ok(RawTable {
        columns,
        labels,
        label_column: label_column.to_string(),
        positive_label: positive_label.to_string(),
        dropped_rows: dropped,
    })
}

fn label_matches(cell: &str, positive: &str) -> bool {
    if cell == positive {
        return true;
    }
    match (cell.parse::<f64>(), positive.parse::<f64>()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn map_labels(cells: &[String], positive: &str) -> Result<BitVector> {
    let mut distinct: Vec<&str> = cells.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() > 2 {
        return Err(Error::data(format!(
            "label column has {} distinct values; a binary label is required",
            distinct.len()
        )));
    }
    if !cells.is_empty() && !distinct.iter().any(|d| label_matches(d, positive)) {
        return Err(Error::data(format!(
            "positive label `{positive}` does not occur in the label column"
        )));
    }
    Ok(BitVector::from_bools(
        &cells.iter().map(|c| label_matches(c, positive)).collect::<Vec<_>>(),
    ))
}

fn typed_column(name: &str, values: &[String]) -> RawColumn {
    let numeric: Option<Vec<f64>> = values.iter().map(|v| v.parse::<f64>().ok()).collect();
    match numeric {
        Some(nums) if nums.iter().all(|v| v.is_finite()) => {
            let kind = if nums.iter().all(|&v| v == 0.0 || v == 1.0) {
                ColumnKind::Binary
            } else {
                ColumnKind::Numeric
            };
            RawColumn {
                name: name.to_string(),
                kind,
                values: ColumnValues::Numeric(nums),
            }
        }
        _ => RawColumn {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
            values: ColumnValues::Categorical(values.to_vec()),
        },
    }
}

/// Binary features, labels and feature descriptors, ready for training.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: BitMatrix,
    pub y: BitVector,
    pub features: Vec<FeatureDescriptor>,
}

impl Dataset {
    pub fn new(x: BitMatrix, y: BitVector, features: Vec<FeatureDescriptor>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::LengthMismatch {
                rows: x.rows(),
                labels: y.len(),
            });
        }
        if features.len() != x.cols() {
            return Err(Error::data(format!(
                "{} descriptors for {} columns",
                features.len(),
                x.cols()
            )));
        }
        Ok(Self { x, y, features })
    }

    /// Dataset with generic feature names `f0`, `f1`, ...
    pub fn unnamed(x: BitMatrix, y: BitVector) -> Result<Self> {
        let features = (0..x.cols()).map(FeatureDescriptor::unnamed).collect();
        Self::new(x, y, features)
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn cols(&self) -> usize {
        self.x.cols()
    }

    pub fn names(&self) -> FeatureNames {
        FeatureNames::Named(self.features.iter().map(|f| f.name.clone()).collect())
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: self.y.select(rows),
            features: self.features.clone(),
        }
    }

    /// Errors unless the dataset is non-empty and has both classes.
    pub fn require_both_classes(&self) -> Result<()> {
        if self.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        let pos = self.y.count_ones();
        if pos == 0 || pos == self.rows() {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}
