//! Bars-and-Stripes and Labeled Shifter Ensemble: generators, membership
//! predicates and edit-distance oracles.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::SeedSequence;
use crate::state::StateBatch;

pub const MAX_BAS_SIDE: usize = 16;
pub const MAX_SHIFTER_BITS: usize = 12;

/// Shifter control patterns, in order: shift left, no shift, shift right.
const SHIFTER_CONTROLS: [([u8; 3], isize); 3] = [([1, 0, 0], 1), ([0, 1, 0], 0), ([0, 0, 1], -1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    /// `n × n` Bars and Stripes.
    Bas(usize),
    /// Shifter with `n` original bits (`2n + 3` bits per example).
    Shifter(usize),
}

impl DatasetKind {
    pub fn dim(&self) -> usize {
        match *self {
            DatasetKind::Bas(n) => n * n,
            DatasetKind::Shifter(n) => 2 * n + 3,
        }
    }

    pub fn positives(&self) -> Result<PositiveSet> {
        match *self {
            DatasetKind::Bas(n) => bas_positives(n),
            DatasetKind::Shifter(n) => shifter_positives(n),
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetKind::Bas(n) => write!(f, "bas:{n}"),
            DatasetKind::Shifter(n) => write!(f, "shifter:{n}"),
        }
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    /// Accepts `bas:12`, `bas(12)`, `shifter:8`, `shifter(8)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, rest) = s
            .split_once([':', '('])
            .ok_or_else(|| Error::InvalidParameter(format!("dataset '{s}' needs a size, e.g. bas:12")))?;
        let size: usize = rest
            .trim_end_matches(')')
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad dataset size in '{s}'")))?;
        match name.trim() {
            "bas" => Ok(DatasetKind::Bas(size)),
            "shifter" => Ok(DatasetKind::Shifter(size)),
            other => Err(Error::InvalidParameter(format!("unknown dataset '{other}'"))),
        }
    }
}

/// The complete set of positive examples of a dataset, with an exact lookup index.
#[derive(Clone, Debug)]
pub struct PositiveSet {
    kind: DatasetKind,
    members: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl PositiveSet {
    fn from_candidates(kind: DatasetKind, candidates: impl IntoIterator<Item = Vec<u8>>) -> Self {
        let mut members = Vec::new();
        let mut index = HashMap::new();
        for c in candidates {
            if !index.contains_key(&c) {
                index.insert(c.clone(), members.len());
                members.push(c);
            }
        }
        Self { kind, members, index }
    }

    pub fn kind(&self) -> DatasetKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Vec<u8>] {
        &self.members
    }

    /// Position of `x` in [`PositiveSet::members`], if it is a positive.
    pub fn index_of(&self, x: &[u8]) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn contains(&self, x: &[u8]) -> bool {
        self.index.contains_key(x)
    }

    /// Minimum number of bit flips turning `x` into a positive example.
    pub fn edit_distance(&self, x: &[u8]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(match self.kind {
            DatasetKind::Bas(n) => bas_distance_closed_form(x, n),
            DatasetKind::Shifter(_) => self.nearest_member_distance(x),
        })
    }

    /// Minimum Hamming distance to any member, by exhaustive scan.
    pub fn nearest_member_distance(&self, x: &[u8]) -> usize {
        self.members
            .iter()
            .map(|m| m.iter().zip(x).filter(|(a, b)| a != b).count())
            .min()
            .unwrap_or(x.len())
    }
}

fn check_bits(bits: &[u8]) -> Result<()> {
    match bits.iter().find(|&&b| b > 1) {
        Some(b) => Err(Error::InvalidParameter(format!("entry {b} is not binary"))),
        None => Ok(()),
    }
}

/// All `n × n` images (row-major) whose rows are all constant or whose columns are all constant.
pub fn bas_positives(n: usize) -> Result<PositiveSet> {
    if n == 0 || n > MAX_BAS_SIDE {
        return Err(Error::TooLarge {
            units: n,
            limit: MAX_BAS_SIDE,
        });
    }
    let rows = (0..1usize << n).map(move |code| {
        let mut img = vec![0u8; n * n];
        for r in 0..n {
            if (code >> (n - 1 - r)) & 1 == 1 {
                img[r * n..(r + 1) * n].fill(1);
            }
        }
        img
    });
    let cols = (0..1usize << n).map(move |code| {
        let mut img = vec![0u8; n * n];
        for r in 0..n {
            for c in 0..n {
                img[r * n + c] = ((code >> (n - 1 - c)) & 1) as u8;
            }
        }
        img
    });
    Ok(PositiveSet::from_candidates(DatasetKind::Bas(n), rows.chain(cols)))
}

fn bas_side(image: &[u8], n: usize) -> Result<()> {
    if image.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            actual: image.len(),
        });
    }
    check_bits(image)
}

pub fn bas_is_positive(image: &[u8], n: usize) -> Result<bool> {
    bas_side(image, n)?;
    let rows_constant = image.chunks_exact(n).all(|row| row.iter().all(|&b| b == row[0]));
    let cols_constant = (0..n).all(|c| (0..n).all(|r| image[r * n + c] == image[c]));
    Ok(rows_constant || cols_constant)
}

fn bas_distance_closed_form(image: &[u8], n: usize) -> usize {
    let mut row_cost = 0;
    let mut col_cost = 0;
    for k in 0..n {
        let row_ones: usize = image[k * n..(k + 1) * n].iter().map(|&b| b as usize).sum();
        let col_ones: usize = (0..n).map(|r| image[r * n + k] as usize).sum();
        row_cost += row_ones.min(n - row_ones);
        col_cost += col_ones.min(n - col_ones);
    }
    row_cost.min(col_cost)
}

/// Bit flips to the nearest BaS positive: repair every row, or every column,
/// whichever is cheaper.
pub fn bas_edit_distance(image: &[u8], n: usize) -> Result<usize> {
    bas_side(image, n)?;
    Ok(bas_distance_closed_form(image, n))
}

fn cyclic_shift(original: &[u8], offset: isize) -> Vec<u8> {
    let n = original.len() as isize;
    (0..n)
        .map(|i| original[(i + offset).rem_euclid(n) as usize])
        .collect()
}

/// `3 · 2^n` strings: one-hot control (left, none, right), `n` original bits,
/// then the original cyclically shifted by one position as the control says.
pub fn shifter_positives(n: usize) -> Result<PositiveSet> {
    if n == 0 || n > MAX_SHIFTER_BITS {
        return Err(Error::TooLarge {
            units: n,
            limit: MAX_SHIFTER_BITS,
        });
    }
    let candidates = SHIFTER_CONTROLS.iter().flat_map(move |&(control, offset)| {
        (0..1usize << n).map(move |code| {
            let original: Vec<u8> = (0..n).map(|k| ((code >> (n - 1 - k)) & 1) as u8).collect();
            let mut bits = control.to_vec();
            bits.extend_from_slice(&original);
            bits.extend(cyclic_shift(&original, offset));
            bits
        })
    });
    Ok(PositiveSet::from_candidates(DatasetKind::Shifter(n), candidates))
}

fn shifter_width(bits: &[u8]) -> Result<usize> {
    check_bits(bits)?;
    if bits.len() < 5 || !(bits.len() - 3).is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "a Shifter string has 2n+3 bits with n ≥ 1, got {}",
            bits.len()
        )));
    }
    Ok((bits.len() - 3) / 2)
}

pub fn shifter_is_positive(bits: &[u8]) -> Result<bool> {
    let n = shifter_width(bits)?;
    let control = &bits[..3];
    let original = &bits[3..3 + n];
    let shifted = &bits[3 + n..];
    Ok(SHIFTER_CONTROLS
        .iter()
        .any(|&(c, offset)| control == c && cyclic_shift(original, offset) == shifted))
}

/// Nearest-member Hamming distance over the enumerated Shifter positives.
pub fn shifter_edit_distance(bits: &[u8]) -> Result<usize> {
    let n = shifter_width(bits)?;
    Ok(shifter_positives(n)?.nearest_member_distance(bits))
}

/// `count` distinct members drawn uniformly without replacement.
pub fn sample_training_set(set: &PositiveSet, count: usize, seeds: SeedSequence) -> Result<StateBatch> {
    if count == 0 {
        return Err(Error::Empty("training set"));
    }
    if count > set.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {count} distinct examples from {} positives",
            set.len()
        )));
    }
    let picks = rand::seq::index::sample(&mut seeds.rng(), set.len(), count);
    let rows: Vec<&Vec<u8>> = picks.iter().map(|k| &set.members[k]).collect();
    StateBatch::from_rows(&rows)
}
