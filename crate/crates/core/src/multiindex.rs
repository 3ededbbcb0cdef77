//! Multi-indices over the base coordinates.
//!
//! A multi-index records how many derivatives are taken along each base
//! direction. Base directions are addressed with zero-based indices
//! throughout the crate.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Errors raised by multi-index arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiIndexError {
    /// A base direction outside `0..m` was requested.
    #[error("base direction {index} out of range for dimension {dim}")]
    OutOfRange { index: usize, dim: usize },
}

/// A vector of nonnegative derivative counts, one per base direction.
///
/// Ordering is by total length first and then lexicographically decreasing
/// entries, so that `enumerate(m, k)` lists indices in ascending order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    /// Builds a multi-index from its entries.
    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    /// The zero multi-index of dimension `m`.
    pub fn zero(m: usize) -> Self {
        Self { entries: vec![0; m] }
    }

    /// The unit multi-index `1_i` of dimension `m`.
    pub fn unit(m: usize, i: usize) -> Self {
        let mut entries = vec![0; m];
        entries[i] = 1;
        Self { entries }
    }

    /// The sum `1_i + 1_j` of two unit multi-indices.
    pub fn pair(m: usize, i: usize, j: usize) -> Self {
        let mut entries = vec![0; m];
        entries[i] += 1;
        entries[j] += 1;
        Self { entries }
    }

    /// Number of base directions.
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// The raw entries.
    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    /// Entry for base direction `i`.
    pub fn get(&self, i: usize) -> u32 {
        self.entries[i]
    }

    /// Total order `|I|`, the sum of the entries.
    pub fn length(&self) -> u32 {
        self.entries.iter().sum()
    }

    /// True for the zero multi-index.
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// `I + 1_i`.
    pub fn add_unit(&self, i: usize) -> Result<Self, MultiIndexError> {
        if i >= self.dim() {
            return Err(MultiIndexError::OutOfRange { index: i, dim: self.dim() });
        }
        let mut entries = self.entries.clone();
        entries[i] += 1;
        Ok(Self { entries })
    }

    /// `I - 1_i`, if that is still nonnegative.
    pub fn sub_unit(&self, i: usize) -> Option<Self> {
        if i >= self.dim() || self.entries[i] == 0 {
            return None;
        }
        let mut entries = self.entries.clone();
        entries[i] -= 1;
        Some(Self { entries })
    }

    /// Entrywise sum of two multi-indices of equal dimension.
    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "multi-index dimension mismatch");
        Self {
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    /// `I! = Π_i I(i)!`.
    pub fn factorial(&self) -> u64 {
        self.entries
            .iter()
            .map(|&e| (1..=u64::from(e)).product::<u64>())
            .product()
    }

    /// Ordered pairs `(i, j)` with `1_i + 1_j = I`; empty unless `|I| = 2`.
    pub fn unit_pairs(&self) -> Vec<(usize, usize)> {
        if self.length() != 2 {
            return Vec::new();
        }
        let m = self.dim();
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if Self::pair(m, i, j) == *self {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Expands the multi-index into a list of directions, e.g. `(2,1)` to `[0,0,1]`.
    pub fn directions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.length() as usize);
        for (i, &e) in self.entries.iter().enumerate() {
            out.extend(std::iter::repeat_n(i, e as usize));
        }
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.length()
            .cmp(&other.length())
            .then_with(|| other.entries.cmp(&self.entries))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, e) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

/// All multi-indices of dimension `m` and length exactly `k`, in
/// lexicographically decreasing order of entries.
pub fn enumerate(m: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; m];
    fill(&mut current, 0, k, &mut out);
    out
}

fn fill(current: &mut Vec<u32>, slot: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    let m = current.len();
    if m == 0 {
        if remaining == 0 {
            out.push(MultiIndex::new(Vec::new()));
        }
        return;
    }
    if slot == m - 1 {
        current[slot] = remaining;
        out.push(MultiIndex::new(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[slot] = e;
        fill(current, slot + 1, remaining - e, out);
    }
    current[slot] = 0;
}

/// All multi-indices of dimension `m` with `lo ≤ |I| ≤ hi`, ascending by length.
pub fn enumerate_range(m: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
    (lo..=hi).flat_map(|k| enumerate(m, k)).collect()
}

/// The symmetry factor `n(ij)`: 1 on the diagonal, 2 off it.
pub fn sym_factor(i: usize, j: usize) -> u32 {
    if i == j {
        1
    } else {
        2
    }
}

/// `binomial(n, k)` in exact integer arithmetic.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for t in 0..k {
        acc = acc * (n - t) / (t + 1);
    }
    acc
}
