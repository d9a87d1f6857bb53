//! Bit-packed vectors and column-major binary matrices.
//!
//! Rows are packed 64 per `u64` word. Bits past `len` in the last word are
//! always zero, so word-wise popcounts never need masking.

use std::fmt;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % WORD_BITS {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// A fixed-length vector of bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.clear_tail();
        v
    }

    pub fn constant(len: usize, value: bool) -> Self {
        if value {
            Self::ones(len)
        } else {
            Self::zeros(len)
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
        v
    }

    /// Builds a vector from raw words; bits beyond `len` are discarded.
    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(words_for(len), 0);
        let mut v = Self { len, words };
        v.clear_tail();
        v
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_zeros(&self) -> usize {
        self.len - self.count_ones()
    }

    /// Number of positions where both `self` and `other` are set.
    pub fn count_and(&self, other: &BitVector) -> usize {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Number of positions where `self` is set and `other` is not.
    pub fn count_and_not(&self, other: &BitVector) -> usize {
        self.check_len(other);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    pub fn negate_in_place(&mut self) {
        for w in &mut self.words {
            *w = !*w;
        }
        self.clear_tail();
    }

    pub fn not(&self) -> BitVector {
        let mut out = self.clone();
        out.negate_in_place();
        out
    }

    pub fn and_assign(&mut self, other: &BitVector) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn or_assign(&mut self, other: &BitVector) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn xor_assign(&mut self, other: &BitVector) {
        self.check_len(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of set bits in increasing order.
    pub fn ones_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_ones());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let tz = w.trailing_zeros() as usize;
                out.push(wi * WORD_BITS + tz);
                w &= w - 1;
            }
        }
        out
    }

    /// Gathers the given positions into a new vector.
    pub fn select(&self, indices: &[usize]) -> BitVector {
        let mut out = BitVector::zeros(indices.len());
        for (dst, &src) in indices.iter().enumerate() {
            if self.get(src) {
                out.words[dst / WORD_BITS] |= 1 << (dst % WORD_BITS);
            }
        }
        out
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    fn clear_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }

    #[inline]
    fn check_len(&self, other: &BitVector) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector[")?;
        for b in self.iter() {
            write!(f, "{}", b as u8)?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

/// Binary feature matrix stored column by column.
///
/// Each column is a [`BitVector`] over the rows, which is the layout rule
/// evaluation wants: a literal is just a (possibly complemented) column.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    columns: Vec<BitVector>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            columns: vec![BitVector::zeros(rows); cols],
        }
    }

    /// Builds a matrix from columns that all have the same length.
    pub fn from_columns(rows: usize, columns: Vec<BitVector>) -> Self {
        for c in &columns {
            assert_eq!(c.len(), rows, "column length mismatch");
        }
        Self { rows, columns }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(n, cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged row {i}");
            for (j, &b) in row.iter().enumerate() {
                if b {
                    m.columns[j].set(i, true);
                }
            }
        }
        m
    }

    /// All `2^cols` assignments, row `i` holding the binary digits of `i`
    /// (column 0 is the least significant bit).
    pub fn truth_table(cols: usize) -> Self {
        assert!(cols < 24, "truth table too large");
        let n = 1usize << cols;
        let columns = (0..cols)
            .map(|j| BitVector::from_bools(&(0..n).map(|i| i >> j & 1 == 1).collect::<Vec<_>>()))
            .collect();
        Self::from_columns(n, columns)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn column(&self, j: usize) -> &BitVector {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[BitVector] {
        &self.columns
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.columns[j].get(i)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.columns[j].set(i, value);
    }

    pub fn row(&self, i: usize) -> Vec<bool> {
        self.columns.iter().map(|c| c.get(i)).collect()
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> BitMatrix {
        BitMatrix {
            rows: indices.len(),
            columns: self.columns.iter().map(|c| c.select(indices)).collect(),
        }
    }

    /// New matrix holding the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> BitMatrix {
        BitMatrix {
            rows: self.rows,
            columns: indices.iter().map(|&j| self.columns[j].clone()).collect(),
        }
    }

    /// Row-major packing used by the on-disk format: each row occupies
    /// `ceil(cols / 64)` words, column `j` at bit `j % 64` of word `j / 64`.
    pub fn to_row_major_words(&self) -> Vec<u64> {
        let per_row = words_for(self.cols());
        let mut out = vec![0u64; per_row * self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for i in col.ones_indices() {
                out[i * per_row + j / WORD_BITS] |= 1 << (j % WORD_BITS);
            }
        }
        out
    }

    pub fn from_row_major_words(rows: usize, cols: usize, words: &[u64]) -> Self {
        let per_row = words_for(cols);
        assert_eq!(words.len(), per_row * rows, "word count mismatch");
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if words[i * per_row + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1 {
                    m.columns[j].set(i, true);
                }
            }
        }
        m
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.rows, self.cols())?;
        for i in 0..self.rows.min(16) {
            for j in 0..self.cols() {
                write!(f, "{}", self.get(i, j) as u8)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-row counter over many bit vectors, kept as bit-sliced binary planes.
///
/// Plane `p` holds bit `p` of each row's running count, so adding a vector is
/// a ripple-carry over the planes, 64 rows at a time.
#[derive(Clone, Debug)]
pub struct RowCounter {
    len: usize,
    planes: Vec<Vec<u64>>,
}

impl RowCounter {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            planes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn add(&mut self, v: &BitVector) {
        assert_eq!(v.len(), self.len, "counter length mismatch");
        let nwords = words_for(self.len);
        let mut carry: Vec<u64> = v.words().to_vec();
        for plane in &mut self.planes {
            let mut any = 0u64;
            for w in 0..nwords {
                let c = plane[w] & carry[w];
                plane[w] ^= carry[w];
                carry[w] = c;
                any |= c;
            }
            if any == 0 {
                return;
            }
        }
        if carry.iter().any(|&w| w != 0) {
            self.planes.push(carry);
        }
    }

    /// Rows whose count is at least `k`.
    pub fn at_least(&self, k: usize) -> BitVector {
        if k == 0 {
            return BitVector::ones(self.len);
        }
        let (gt, eq) = self.compare(k);
        let words = gt.iter().zip(&eq).map(|(g, e)| g | e).collect();
        BitVector::from_words(self.len, words)
    }

    /// Rows whose count is at most `k`.
    pub fn at_most(&self, k: usize) -> BitVector {
        let (gt, _) = self.compare(k);
        let mut v = BitVector::from_words(self.len, gt);
        v.negate_in_place();
        v
    }

    /// Rows whose count is exactly `k`.
    pub fn exactly(&self, k: usize) -> BitVector {
        let (_, eq) = self.compare(k);
        BitVector::from_words(self.len, eq)
    }

    /// Word-wise (count > k, count == k) masks, scanning planes from the
    /// most significant bit down.
    fn compare(&self, k: usize) -> (Vec<u64>, Vec<u64>) {
        let nwords = words_for(self.len);
        let width = self.planes.len();
        if width < usize::BITS as usize && k >> width != 0 {
            // k needs more bits than any count has: nothing is >= k.
            return (vec![0; nwords], vec![0; nwords]);
        }
        let mut gt = vec![0u64; nwords];
        let mut eq = vec![u64::MAX; nwords];
        for p in (0..width).rev() {
            let plane = &self.planes[p];
            let k_bit = k >> p & 1 == 1;
            for w in 0..nwords {
                if k_bit {
                    eq[w] &= plane[w];
                } else {
                    gt[w] |= eq[w] & plane[w];
                    eq[w] &= !plane[w];
                }
            }
        }
        (gt, eq)
    }
}
