//! Batches of binary chain states.

use crate::error::{Error, Result};

/// `C` binary states of width `d`, stored row-major as bytes in `{0, 1}`.
///
/// Each row carries a chain id. Per-chain random streams are keyed by that id,
/// so reordering rows does not change what happens to a given chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateBatch {
    width: usize,
    data: Vec<u8>,
    ids: Vec<u64>,
}

impl StateBatch {
    /// Builds a batch from row-major bits; ids default to `0..C`.
    pub fn new(width: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidParameter("state width must be positive".into()));
        }
        if data.is_empty() {
            return Err(Error::Empty("state batch"));
        }
        if !data.len().is_multiple_of(width) {
            return Err(Error::DimensionMismatch {
                expected: width * (data.len() / width + 1),
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!("state entry {bad} is not binary")));
        }
        let ids = (0..(data.len() / width) as u64).collect();
        Ok(Self { width, data, ids })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("state batch"))?;
        let width = first.as_ref().len();
        let mut data = Vec::with_capacity(width * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(width, data)
    }

    pub fn zeros(chains: usize, width: usize) -> Result<Self> {
        Self::new(width, vec![0; chains * width])
    }

    /// Internal constructor for data already known to be valid.
    pub(crate) fn from_parts(width: usize, data: Vec<u8>, ids: Vec<u64>) -> Self {
        debug_assert_eq!(data.len(), width * ids.len());
        debug_assert!(data.iter().all(|&b| b <= 1));
        Self { width, data, ids }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn chains(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, c: usize) -> &[u8] {
        &self.data[c * self.width..(c + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.data.chunks_exact(self.width)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn with_ids(mut self, ids: Vec<u64>) -> Result<Self> {
        if ids.len() != self.chains() {
            return Err(Error::DimensionMismatch {
                expected: self.chains(),
                actual: ids.len(),
            });
        }
        self.ids = ids;
        Ok(self)
    }

    /// New batch with rows taken in the given order (ids travel with rows).
    pub fn select_rows(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.width);
        let mut ids = Vec::with_capacity(order.len());
        for &r in order {
            data.extend_from_slice(self.row(r));
            ids.push(self.ids[r]);
        }
        Self::from_parts(self.width, data, ids)
    }

    /// Mean of every column.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0u64; self.width];
        for row in self.rows() {
            for (s, &b) in sums.iter_mut().zip(row) {
                *s += b as u64;
            }
        }
        sums.into_iter()
            .map(|s| s as f64 / self.chains() as f64)
            .collect()
    }

    /// Fraction of ones over all entries.
    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&b| b as u64).sum::<u64>() as f64 / self.data.len() as f64
    }
}

/// `C` spin states of width `N`, entries in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinBatch {
    width: usize,
    data: Vec<i8>,
}

impl SpinBatch {
    pub fn new(width: usize, data: Vec<i8>) -> Result<Self> {
        if width == 0 || data.is_empty() {
            return Err(Error::Empty("spin batch"));
        }
        if !data.len().is_multiple_of(width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: data.len() % width,
            });
        }
        if let Some(bad) = data.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("spin entry {bad} is not ±1")));
        }
        Ok(Self { width, data })
    }

    pub(crate) fn from_parts(width: usize, data: Vec<i8>) -> Self {
        Self { width, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn chains(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn row(&self, c: usize) -> &[i8] {
        &self.data[c * self.width..(c + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i8]> + '_ {
        self.data.chunks_exact(self.width)
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [i8] {
        &mut self.data
    }

    /// Concatenates batches of equal width.
    pub fn concat(parts: Vec<SpinBatch>) -> Result<Self> {
        let width = parts.first().ok_or(Error::Empty("spin batch"))?.width;
        let mut data = Vec::new();
        for p in parts {
            if p.width != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: p.width,
                });
            }
            data.extend(p.data);
        }
        Ok(Self { width, data })
    }
}

/// Index of a binary row read as a big-endian integer (first entry is the MSB).
pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Inverse of [`bits_to_index`] for a given width.
pub fn index_to_bits(index: usize, width: usize) -> Vec<u8> {
    (0..width)
        .map(|k| ((index >> (width - 1 - k)) & 1) as u8)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_binary_and_ragged_data() {
        assert!(StateBatch::new(2, vec![0, 1, 2, 0]).is_err());
        assert!(StateBatch::new(3, vec![0, 1, 1, 0]).is_err());
        assert!(StateBatch::new(0, vec![]).is_err());
        assert!(StateBatch::from_rows(&[vec![0u8, 1], vec![1]]).is_err());
        assert!(SpinBatch::new(2, vec![1, 0]).is_err());
    }

    #[test]
    fn select_rows_keeps_ids() {
        let b = StateBatch::from_rows(&[[0u8, 0], [0, 1], [1, 1]]).unwrap();
        let p = b.select_rows(&[2, 0, 1]);
        assert_eq!(p.row(0), &[1, 1]);
        assert_eq!(p.ids(), &[2, 0, 1]);
        assert_eq!(b.column_means(), vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn index_round_trip() {
        for i in 0..32 {
            assert_eq!(bits_to_index(&index_to_bits(i, 5)), i);
        }
        assert_eq!(index_to_bits(1, 3), vec![0, 0, 1]);
    }
}
