//! Randomised scalar bucketing and the per-leaf count tables built from it.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::seed::Rng;
use crate::tstree::Segment;

/// `hash(p) = floor((p + r) / w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HashFn {
    w: f64,
    r: f64,
}

/// Closed interval `[1/log2(n), 1 - 1/log2(n)]` that bucket widths are drawn
/// from. Requires `n >= 5`; at `n = 4` the interval collapses to a point.
pub fn width_range(n: usize) -> Result<(f64, f64)> {
    if n <= 4 {
        return Err(Error::config(format!(
            "dataset too small for hash-width sampling range: N = {n}, need at least 5 subsequences"
        )));
    }
    let inv = 1.0 / (n as f64).log2();
    Ok((inv, 1.0 - inv))
}

impl HashFn {
    /// A hash function with explicit width and offset.
    pub fn new(w: f64, r: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::config(format!("hash width must be positive and finite, got {w}")));
        }
        if !(r.is_finite() && (0.0..=w).contains(&r)) {
            return Err(Error::config(format!("hash offset must lie in [0, {w}], got {r}")));
        }
        Ok(Self { w, r })
    }

    /// Draws `w` uniformly from [`width_range`] and then `r` uniformly from
    /// `[0, w]`.
    pub fn sample(n: usize, rng: &mut Rng) -> Result<Self> {
        let (lo, hi) = width_range(n)?;
        let w = rng.random_range(lo..=hi);
        let r = rng.random_range(0.0..=w);
        Ok(Self { w, r })
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    pub fn offset(&self) -> f64 {
        self.r
    }

    /// Bucket key of `p`.
    pub fn key(&self, p: f64) -> Result<i64> {
        if !p.is_finite() {
            return Err(Error::InvalidValue(p));
        }
        Ok(self.bucket(p))
    }

    /// Bucket key of a value already known to be finite.
    #[inline]
    pub(crate) fn bucket(&self, p: f64) -> i64 {
        ((p + self.r) / self.w).floor() as i64
    }
}

pub fn sample_hash_fn(n: usize, rng: &mut Rng) -> Result<HashFn> {
    HashFn::sample(n, rng)
}

pub fn hash_value(f: &HashFn, p: f64) -> Result<i64> {
    f.key(p)
}

/// Key -> occurrence count for one time column under one hash function.
/// Entries are sorted by key and every count is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ColumnTable {
    entries: Vec<(i64, u32)>,
}

impl ColumnTable {
    fn from_keys(mut keys: Vec<i64>) -> Self {
        keys.sort_unstable();
        let mut entries: Vec<(i64, u32)> = Vec::new();
        for k in keys {
            match entries.last_mut() {
                Some((last, c)) if *last == k => *c += 1,
                _ => entries.push((k, 1)),
            }
        }
        Self { entries }
    }

    /// Count stored under `key`, 0 when absent.
    #[inline]
    pub fn count(&self, key: i64) -> u32 {
        match self.entries.binary_search_by_key(&key, |&(k, _)| k) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, key: i64) -> bool {
        self.count(key) > 0
    }

    pub fn entries(&self) -> &[(i64, u32)] {
        &self.entries
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c)).sum()
    }
}

/// The `h` hash functions of one leaf and, for each of them, a count
/// table per time column of the leaf segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafTables {
    segment: Segment,
    fns: Vec<HashFn>,
    /// `tables[j][t - segment.start]`
    tables: Vec<Vec<ColumnTable>>,
}

impl LeafTables {
    pub fn segment(&self) -> Segment {
        self.segment
    }

    pub fn hash_fns(&self) -> &[HashFn] {
        &self.fns
    }

    pub fn hash_count(&self) -> usize {
        self.fns.len()
    }

    /// Table of hash `j` (0-based) at time `t` (1-based, inside the segment).
    pub fn column(&self, j: usize, t: usize) -> &ColumnTable {
        &self.tables[j][t - self.segment.start]
    }

    pub(crate) fn columns(&self, j: usize) -> &[ColumnTable] {
        &self.tables[j]
    }
}

/// Inserts every row's value at every time of `segment` into one table per
/// hash function and column.
pub fn build_leaf_tables(dataset: &LabeledDataset, segment: Segment, fns: Vec<HashFn>) -> Result<LeafTables> {
    if segment.start == 0 || segment.end > dataset.d() {
        return Err(Error::Shape {
            expected: format!("segment within 1..={}", dataset.d()),
            found: format!("{}..={}", segment.start, segment.end),
        });
    }
    if fns.is_empty() {
        return Err(Error::config("at least one hash function is required"));
    }
    let tables = fns
        .iter()
        .map(|f| {
            segment
                .times()
                .map(|t| ColumnTable::from_keys(dataset.rows().map(|row| f.bucket(row[t - 1])).collect()))
                .collect()
        })
        .collect();
    Ok(LeafTables { segment, fns, tables })
}
