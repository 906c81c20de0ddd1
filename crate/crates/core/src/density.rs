//! Dynamic local density of points and subsequences under one tree.
//!
//! For a value `q` observed at time `t_i`, only the leaf segment holding
//! `t_i` is searched. Under hash function `j`, the columns of that segment
//! whose table contains `hash_j(q)` form `N_j(q)`; the intersection over all
//! `j` is `TN(q)`. Each column of `TN(q)` contributes the sum over `j` of the
//! stored count for `hash_j(q)`, and the point density is the mean of those
//! contributions over `TN(q)`. A subsequence's density is the mean point
//! density over its `d` samples.

use crate::error::{Error, Result};
use crate::hashing::LeafTables;
use crate::tstree::TsTree;

/// Sorted set of 1-based time indices inside one leaf segment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimilaritySet(Vec<usize>);

impl SimilaritySet {
    pub fn times(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.0.binary_search(&t).is_ok()
    }

    pub fn is_subset(&self, other: &SimilaritySet) -> bool {
        self.0.iter().all(|&t| other.contains(t))
    }

    fn intersect(&mut self, other: &SimilaritySet) {
        self.0.retain(|&t| other.contains(t));
    }
}

/// Mean bucket count of a point over its true similarity columns.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PointDensity(pub f64);

impl PointDensity {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `N_j(q)`: columns of the leaf whose table for hash `j` holds `hash_j(q)`.
pub fn similar_time_points(q: f64, tables: &LeafTables, j: usize) -> SimilaritySet {
    let key = tables.hash_fns()[j].bucket(q);
    let start = tables.segment().start;
    SimilaritySet(
        tables
            .columns(j)
            .iter()
            .enumerate()
            .filter(|(_, col)| col.contains(key))
            .map(|(c, _)| start + c)
            .collect(),
    )
}

/// `TN(q)`: the whole segment intersected with every `N_j(q)`.
pub fn true_similar_set(q: f64, t_i: usize, tables: &LeafTables) -> Result<SimilaritySet> {
    let segment = tables.segment();
    if !segment.contains(t_i) {
        return Err(Error::InvalidIndex { t: t_i, d: segment.end });
    }
    let mut tn = SimilaritySet(segment.times().collect());
    for j in 0..tables.hash_count() {
        tn.intersect(&similar_time_points(q, tables, j));
    }
    Ok(tn)
}

/// Density of `q` in one leaf, or `None` when `TN(q)` is empty.
///
/// `keys` is scratch space reused across calls.
#[inline]
fn leaf_density(q: f64, tables: &LeafTables, keys: &mut Vec<i64>) -> Option<f64> {
    keys.clear();
    keys.extend(tables.hash_fns().iter().map(|f| f.bucket(q)));
    let width = tables.segment().len();
    let mut total: u64 = 0;
    let mut members: u64 = 0;
    'columns: for c in 0..width {
        let mut sum: u64 = 0;
        for (j, &key) in keys.iter().enumerate() {
            let count = tables.columns(j)[c].count(key);
            if count == 0 {
                continue 'columns;
            }
            sum += u64::from(count);
        }
        total += sum;
        members += 1;
    }
    (members > 0).then(|| total as f64 / members as f64)
}

fn check_tables(tree: &TsTree, tables: &[LeafTables]) -> Result<()> {
    if tables.len() != tree.leaves().len() {
        return Err(Error::Shape {
            expected: format!("{} leaf tables", tree.leaves().len()),
            found: format!("{}", tables.len()),
        });
    }
    Ok(())
}

/// Dynamic local density of value `q` observed at time `t_i`.
pub fn point_density(q: f64, t_i: usize, tree: &TsTree, tables: &[LeafTables]) -> Result<PointDensity> {
    check_tables(tree, tables)?;
    if !q.is_finite() {
        return Err(Error::InvalidValue(q));
    }
    let leaf = tree.leaf_index(t_i)?;
    leaf_density(q, &tables[leaf], &mut Vec::new())
        .map(PointDensity)
        .ok_or(Error::OutOfSample { t: t_i })
}

/// Mean point density over all samples of `row`.
pub fn subsequence_density(row: &[f64], tree: &TsTree, tables: &[LeafTables]) -> Result<f64> {
    check_tables(tree, tables)?;
    let span = tree.span();
    if span.start != 1 || row.len() != span.end {
        return Err(Error::Shape {
            expected: format!("row of length {}", span.end),
            found: format!("row of length {}", row.len()),
        });
    }
    let mut keys = Vec::new();
    let mut sum = 0.0;
    for lt in tables {
        for t in lt.segment().times() {
            let q = row[t - 1];
            if !q.is_finite() {
                return Err(Error::InvalidValue(q));
            }
            sum += leaf_density(q, lt, &mut keys).ok_or(Error::OutOfSample { t })?;
        }
    }
    Ok(sum / row.len() as f64)
}
