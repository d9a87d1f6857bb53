//! Conversion of raw columns to binary features.
//!
//! Numeric columns with more than `num_bins` distinct values get "up-bins"
//! `col > t` at the quantile levels `i / (num_bins + 1)`; columns with at
//! most `num_bins` distinct values, and all categorical columns, are one-hot
//! encoded; 0/1 columns pass through unchanged. Constant columns yield no
//! features and a warning.

use serde::{Deserialize, Serialize};

use super::{ColumnKind, ColumnValues, RawColumn, RawTable};
use crate::bits::{BitMatrix, BitVector};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinKind {
    /// `source > threshold`.
    UpBin { threshold: f64 },
    /// `source == category`.
    OneHot { category: String },
    Passthrough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub source: String,
    #[serde(flatten)]
    pub kind: BinKind,
}

impl FeatureDescriptor {
    pub fn unnamed(index: usize) -> Self {
        let name = format!("f{index}");
        FeatureDescriptor {
            source: name.clone(),
            name,
            kind: BinKind::Passthrough,
        }
    }

    fn up_bin(source: &str, threshold: f64) -> Self {
        FeatureDescriptor {
            name: format!("{source} > {threshold:.4}"),
            source: source.to_string(),
            kind: BinKind::UpBin { threshold },
        }
    }

    fn one_hot(source: &str, category: String) -> Self {
        FeatureDescriptor {
            name: format!("{source} == {category}"),
            source: source.to_string(),
            kind: BinKind::OneHot { category },
        }
    }
}

#[derive(Clone, Debug)]
pub struct BinarizedMatrix {
    pub bits: BitMatrix,
    pub descriptors: Vec<FeatureDescriptor>,
    pub warnings: Vec<String>,
}

/// Linear-interpolated quantile of sorted data (the common "linear" method).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn format_number(v: f64) -> String {
    // Shortest representation that round-trips; integers print without ".0".
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

pub fn binarize(table: &RawTable, num_bins: usize) -> Result<BinarizedMatrix> {
    if num_bins == 0 {
        return Err(Error::config("num_bins must be at least 1"));
    }
    let rows = table.rows();
    if rows == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut columns = Vec::new();
    let mut descriptors = Vec::new();
    let mut warnings = Vec::new();
    for col in &table.columns {
        let before = columns.len();
        binarize_column(col, num_bins, &mut columns, &mut descriptors);
        if columns.len() == before {
            let msg = format!("column `{}` is constant and produces no features", col.name);
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let bits = BitMatrix::from_columns(rows, columns);
    Ok(BinarizedMatrix {
        bits,
        descriptors,
        warnings,
    })
}

fn binarize_column(
    col: &RawColumn,
    num_bins: usize,
    out: &mut Vec<BitVector>,
    descriptors: &mut Vec<FeatureDescriptor>,
) {
    match (&col.values, col.kind) {
        (ColumnValues::Numeric(v), ColumnKind::Binary) => {
            let bits: Vec<bool> = v.iter().map(|&x| x == 1.0).collect();
            if bits.iter().all(|&b| b) || bits.iter().all(|&b| !b) {
                return;
            }
            out.push(BitVector::from_bools(&bits));
            descriptors.push(FeatureDescriptor {
                name: col.name.clone(),
                source: col.name.clone(),
                kind: BinKind::Passthrough,
            });
        }
        (ColumnValues::Numeric(v), _) => {
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let mut distinct = sorted.clone();
            distinct.dedup();
            if distinct.len() <= 1 {
                return;
            }
            if distinct.len() <= num_bins {
                for &d in &distinct {
                    out.push(BitVector::from_bools(&v.iter().map(|&x| x == d).collect::<Vec<_>>()));
                    descriptors.push(FeatureDescriptor::one_hot(&col.name, format_number(d)));
                }
                return;
            }
            let mut thresholds: Vec<f64> = (1..=num_bins)
                .map(|i| quantile(&sorted, i as f64 / (num_bins + 1) as f64))
                .collect();
            thresholds.dedup();
            for t in thresholds {
                out.push(BitVector::from_bools(&v.iter().map(|&x| x > t).collect::<Vec<_>>()));
                descriptors.push(FeatureDescriptor::up_bin(&col.name, t));
            }
        }
        (ColumnValues::Categorical(v), _) => {
            let mut distinct: Vec<&String> = v.iter().collect();
            distinct.sort();
            distinct.dedup();
            if distinct.len() <= 1 {
                return;
            }
            for d in distinct {
                out.push(BitVector::from_bools(&v.iter().map(|x| x == d).collect::<Vec<_>>()));
                descriptors.push(FeatureDescriptor::one_hot(&col.name, d.clone()));
            }
        }
    }
}
