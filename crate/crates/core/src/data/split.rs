use rand::seq::SliceRandom;

use crate::bits::BitVector;
use crate::error::{Error, Result};
use crate::rng;

/// Splits row indices into (train, test) so both keep the class ratio.
/// Each class contributes `round(n_c * test_fraction)` rows to the test set.
/// Both index lists are sorted.
pub fn stratified_split(y: &BitVector, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::config(format!("test fraction {test_fraction} is not in [0, 1)")));
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut r = rng::seeded(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y.get(i) == class).collect();
        idx.shuffle(&mut r);
        let n_test = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// A class-stratified subsample of `indices` with at most `max` rows.
/// Returns `indices` unchanged (sorted) when it is already small enough.
pub fn stratified_subsample(y: &BitVector, indices: &[usize], max: usize, seed: u64) -> Vec<usize> {
    let mut out: Vec<usize> = indices.to_vec();
    if out.len() > max {
        let mut r = rng::seeded(seed);
        let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = out.iter().partition(|&&i| y.get(i));
        pos.shuffle(&mut r);
        neg.shuffle(&mut r);
        let total = out.len() as f64;
        let mut n_pos = ((pos.len() as f64 / total) * max as f64).round() as usize;
        n_pos = n_pos.min(pos.len()).min(max);
        let n_neg = (max - n_pos).min(neg.len());
        out = pos[..n_pos].iter().chain(&neg[..n_neg]).copied().collect();
    }
    out.sort_unstable();
    out
}
