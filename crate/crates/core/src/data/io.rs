//! Binary matrix files and their JSON sidecars.
//!
//! `XBF1` layout: the magic `XBF1`, row and column counts as little-endian
//! `u64`, then the matrix in row-major order, each row packed into
//! little-endian `u64` words (bit `j % 64` of word `j / 64` is column `j`).
//! The sidecar `<stem>.json` holds feature descriptors and labels.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureDescriptor};
use crate::bits::{BitMatrix, BitVector};
use crate::error::{Error, Result};

pub const XBF_MAGIC: &[u8; 4] = b"XBF1";

pub fn write_xbf(mut w: impl Write, x: &BitMatrix) -> Result<()> {
    w.write_all(XBF_MAGIC)?;
    w.write_all(&(x.rows() as u64).to_le_bytes())?;
    w.write_all(&(x.cols() as u64).to_le_bytes())?;
    for word in x.to_row_major_words() {
        w.write_all(&word.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_xbf(mut r: impl Read) -> Result<BitMatrix> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[..4] != XBF_MAGIC {
        return Err(Error::data("not an XBF1 file"));
    }
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let rows = usize::try_from(u64_at(4)).map_err(|_| Error::data("row count too large"))?;
    let cols = usize::try_from(u64_at(12)).map_err(|_| Error::data("column count too large"))?;
    let words_per_row = cols.div_ceil(64);
    let expected = rows
        .checked_mul(words_per_row)
        .and_then(|w| w.checked_mul(8))
        .ok_or_else(|| Error::data("matrix dimensions overflow"))?;
    let body = &bytes[20..];
    if body.len() != expected {
        return Err(Error::data(format!(
            "XBF1 body has {} bytes, expected {expected}",
            body.len()
        )));
    }
    let words: Vec<u64> = body
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(BitMatrix::from_row_major_words(rows, cols, &words))
}

/// Sidecar metadata for an `XBF1` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub schema: u32,
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub label_column: String,
    #[serde(default)]
    pub positive_label: String,
    #[serde(default)]
    pub dropped_rows: usize,
    /// One `'0'`/`'1'` character per row.
    pub labels: String,
    pub features: Vec<FeatureDescriptor>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl DatasetDescriptor {
    pub fn for_dataset(data: &Dataset) -> Self {
        DatasetDescriptor {
            schema: 1,
            rows: data.rows(),
            cols: data.cols(),
            label_column: String::new(),
            positive_label: String::new(),
            dropped_rows: 0,
            labels: data.y.iter().map(|b| if b { '1' } else { '0' }).collect(),
            features: data.features.clone(),
            warnings: Vec::new(),
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` (the matrix) and its `.json` sidecar.
pub fn save_dataset(path: impl AsRef<Path>, data: &Dataset, descriptor: &DatasetDescriptor) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_xbf(&mut buf, &data.x)?;
    fs::write(path, buf)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(descriptor)? + "\n")?;
    Ok(())
}

/// Reads a matrix file and its `.json` sidecar.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<(Dataset, DatasetDescriptor)> {
    let path = path.as_ref();
    let file = fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    let x = read_xbf(std::io::BufReader::new(file))?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", side.display())))?;
    let desc: DatasetDescriptor = serde_json::from_str(&text)?;
    if desc.schema != 1 {
        return Err(Error::data(format!("unsupported sidecar schema {}", desc.schema)));
    }
    if desc.rows != x.rows() || desc.cols != x.cols() {
        return Err(Error::data("sidecar dimensions do not match the matrix"));
    }
    let labels: Vec<bool> = desc
        .labels
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::data(format!("invalid label character `{other}`"))),
        })
        .collect::<Result<_>>()?;
    let data = Dataset::new(x, BitVector::from_bools(&labels), desc.features.clone())?;
    Ok((data, desc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let x = BitMatrix::from_rows(&[vec![true, false, true], vec![false, true, false]]);
        let mut buf = Vec::new();
        write_xbf(&mut buf, &x).unwrap();
        assert_eq!(&buf[..4], b"XBF1");
        assert_eq!(u64::from_le_bytes(buf[4..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[20..28].try_into().unwrap()), 0b101);
        assert_eq!(u64::from_le_bytes(buf[28..36].try_into().unwrap()), 0b010);
        assert_eq!(buf.len(), 36);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_xbf(&b"XBF2aaaaaaaaaaaaaaaaaaaa"[..]).is_err());
        let x = BitMatrix::zeros(3, 70);
        let mut buf = Vec::new();
        write_xbf(&mut buf, &x).unwrap();
        buf.pop();
        assert!(read_xbf(&buf[..]).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.xbf");
        let x = BitMatrix::truth_table(3);
        let y = BitVector::from_bools(&[true, false, true, false, false, true, true, false]);
        let data = Dataset::unnamed(x, y).unwrap();
        save_dataset(&path, &data, &DatasetDescriptor::for_dataset(&data)).unwrap();
        let (back, desc) = load_dataset(&path).unwrap();
        assert_eq!(back.x, data.x);
        assert_eq!(back.y, data.y);
        assert_eq!(desc.labels, "10100110");
        assert_eq!(back.features, data.features);
    }

    proptest! {
        #[test]
        fn xbf_round_trip(rows in 0usize..80, cols in 0usize..150, seed: u64) {
            let mut x = BitMatrix::zeros(rows, cols);
            let mut s = seed;
            for r in 0..rows {
                for c in 0..cols {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    x.set(r, c, s >> 63 == 1);
                }
            }
            let mut buf = Vec::new();
            write_xbf(&mut buf, &x).unwrap();
            let back = read_xbf(&buf[..]).unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
