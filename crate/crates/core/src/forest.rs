//! The tree ensemble: fitting, transductive scoring and score normalisation.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::LabeledDataset;
use crate::density::subsequence_density;
use crate::error::{Error, Result};
use crate::hashing::{build_leaf_tables, width_range, HashFn, LeafTables};
use crate::seed::{derive_seed, rng_from_seed};
use crate::tstree::{default_hlimit, TsTree, DEFAULT_SLIMIT};

/// Version tag written into forest dumps.
pub const FOREST_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_TREES: usize = 10;
pub const DEFAULT_HASHES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    /// Number of trees, `m`.
    pub trees: usize,
    /// Hash functions per leaf, `h`.
    pub hashes: usize,
    pub slimit: usize,
    /// Depth limit; `None` means `floor(log2(d))`.
    pub hlimit: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: DEFAULT_TREES,
            hashes: DEFAULT_HASHES,
            slimit: DEFAULT_SLIMIT,
            hlimit: None,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_trees(mut self, m: usize) -> Self {
        self.trees = m;
        self
    }

    pub fn with_hashes(mut self, h: usize) -> Self {
        self.hashes = h;
        self
    }

    pub fn with_slimit(mut self, slimit: usize) -> Self {
        self.slimit = slimit;
        self
    }

    pub fn with_hlimit(mut self, hlimit: Option<usize>) -> Self {
        self.hlimit = hlimit;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolved_hlimit(&self, d: usize) -> usize {
        self.hlimit.unwrap_or_else(|| default_hlimit(d))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::config("tree count must be at least 1"));
        }
        if self.hashes == 0 {
            return Err(Error::config("hash count must be at least 1"));
        }
        if self.slimit == 0 {
            return Err(Error::config("slimit must be at least 1"));
        }
        Ok(())
    }
}

/// One tree together with the hash tables of each of its leaves, in leaf
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTree {
    tree: TsTree,
    tables: Vec<LeafTables>,
}

impl FittedTree {
    pub fn tree(&self) -> &TsTree {
        &self.tree
    }

    pub fn leaf_tables(&self) -> &[LeafTables] {
        &self.tables
    }

    pub fn density(&self, row: &[f64]) -> Result<f64> {
        subsequence_density(row, &self.tree, &self.tables)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsForest {
    format_version: u32,
    params: ForestParams,
    n: usize,
    d: usize,
    /// SHA-256 over the fitted samples, hex encoded.
    fingerprint: String,
    trees: Vec<FittedTree>,
}

/// Per-subsequence ensemble densities and their normalised anomaly scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    /// Mean density over trees; lower means more anomalous.
    pub scores: Vec<f64>,
    /// Min-max normalised and complemented scores in `[0, 1]`; higher means
    /// more anomalous.
    pub anomaly_scores: Vec<f64>,
}

fn fingerprint(dataset: &LabeledDataset) -> String {
    let mut hasher = Sha256::new();
    hasher.update((dataset.len() as u64).to_le_bytes());
    hasher.update((dataset.d() as u64).to_le_bytes());
    for v in dataset.values() {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

fn fit_tree(dataset: &LabeledDataset, params: &ForestParams, hlimit: usize, index: usize) -> Result<FittedTree> {
    let tree_seed = derive_seed(params.seed, index as u64);
    let tree = TsTree::build(1, dataset.d(), hlimit, params.slimit, &mut rng_from_seed(derive_seed(tree_seed, 0)))?;
    let hash_seed = derive_seed(tree_seed, 1);
    let tables = tree
        .leaves()
        .iter()
        .enumerate()
        .map(|(leaf, &segment)| {
            let leaf_seed = derive_seed(hash_seed, leaf as u64);
            let fns = (0..params.hashes)
                .map(|j| HashFn::sample(dataset.len(), &mut rng_from_seed(derive_seed(leaf_seed, j as u64))))
                .collect::<Result<Vec<_>>>()?;
            build_leaf_tables(dataset, segment, fns)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FittedTree { tree, tables })
}

impl TsForest {
    /// Builds `params.trees` trees over `dataset`, each from its own random
    /// stream derived from `params.seed`, and fills every leaf's hash tables
    /// with all rows.
    pub fn fit(dataset: &LabeledDataset, params: &ForestParams) -> Result<Self> {
        params.validate()?;
        width_range(dataset.len())?;
        let hlimit = params.resolved_hlimit(dataset.d());
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|i| fit_tree(dataset, params, hlimit, i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            format_version: FOREST_FORMAT_VERSION,
            params: params.clone().with_hlimit(Some(hlimit)),
            n: dataset.len(),
            d: dataset.d(),
            fingerprint: fingerprint(dataset),
            trees,
        })
    }

    /// Parameters with `hlimit` resolved.
    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn trees(&self) -> &[FittedTree] {
        &self.trees
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.d)
    }

    fn check_dataset(&self, dataset: &LabeledDataset) -> Result<()> {
        if (dataset.len(), dataset.d()) != (self.n, self.d) {
            return Err(Error::Shape {
                expected: format!("{} x {} dataset", self.n, self.d),
                found: format!("{} x {}", dataset.len(), dataset.d()),
            });
        }
        if fingerprint(dataset) != self.fingerprint {
            return Err(Error::Shape {
                expected: "the dataset the forest was fitted on".into(),
                found: "different sample values".into(),
            });
        }
        Ok(())
    }

    /// Density of every row under every tree: `out[k][i]` is row `k`, tree `i`.
    pub fn tree_densities(&self, dataset: &LabeledDataset) -> Result<Vec<Vec<f64>>> {
        self.check_dataset(dataset)?;
        (0..dataset.len())
            .into_par_iter()
            .map(|k| self.trees.iter().map(|t| t.density(dataset.row(k))).collect())
            .collect()
    }

    /// Scores every row of the fitted dataset.
    pub fn score(&self, dataset: &LabeledDataset) -> Result<ScoreVector> {
        let m = self.trees.len() as f64;
        let scores: Vec<f64> = self
            .tree_densities(dataset)?
            .into_iter()
            .map(|per_tree| per_tree.iter().sum::<f64>() / m)
            .collect();
        let anomaly_scores = anomaly_scores(&scores);
        Ok(ScoreVector { scores, anomaly_scores })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let forest: Self = serde_json::from_str(text)?;
        if forest.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported forest format version {} (expected {FOREST_FORMAT_VERSION})",
                forest.format_version
            )));
        }
        Ok(forest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Fits a forest with explicit parameters.
pub fn fit(
    dataset: &LabeledDataset,
    m: usize,
    h: usize,
    slimit: usize,
    hlimit: Option<usize>,
    seed: u64,
) -> Result<TsForest> {
    let params = ForestParams {
        trees: m,
        hashes: h,
        slimit,
        hlimit,
        seed,
    };
    TsForest::fit(dataset, &params)
}

pub fn score(forest: &TsForest, dataset: &LabeledDataset) -> Result<ScoreVector> {
    forest.score(dataset)
}

/// `1 - (s - min) / (max - min)` per score; `0.5` everywhere when all
/// scores are equal.
pub fn anomaly_scores(scores: &[f64]) -> Vec<f64> {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return vec![0.5; scores.len()];
    }
    scores.iter().map(|s| 1.0 - (s - min) / range).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wavy(n: usize, d: usize) -> LabeledDataset {
        let rows = (0..n)
            .map(|k| {
                (0..d)
                    .map(|t| ((t as f64) * 0.6 + (k % 3) as f64 * 0.2).sin() + if k == 0 { 1.5 } else { 0.0 })
                    .collect()
            })
            .collect();
        LabeledDataset::unlabeled(rows).unwrap()
    }

    #[test]
    fn single_tree_single_leaf() {
        let ds = wavy(8, 12);
        let forest = fit(&ds, 1, 2, 3, Some(0), 4).unwrap();
        assert_eq!(forest.trees().len(), 1);
        assert_eq!(forest.trees()[0].tree().leaves().len(), 1);
        assert_eq!(forest.trees()[0].leaf_tables()[0].hash_count(), 2);
    }

    #[test]
    fn defaults() {
        let p = ForestParams::default();
        assert_eq!((p.trees, p.hashes, p.slimit, p.hlimit), (10, 10, 3, None));
        assert_eq!(p.resolved_hlimit(96), 6);
    }

    #[test]
    fn rejects_bad_configuration() {
        let ds = wavy(4, 8);
        assert!(matches!(TsForest::fit(&ds, &ForestParams::default()), Err(Error::Config(_))));
        let ds = wavy(6, 8);
        for p in [
            ForestParams::default().with_trees(0),
            ForestParams::default().with_hashes(0),
            ForestParams::default().with_slimit(0),
        ] {
            assert!(matches!(TsForest::fit(&ds, &p), Err(Error::Config(_))));
        }
    }

    #[test]
    fn fit_and_score_are_deterministic() {
        let ds = wavy(20, 16);
        let p = ForestParams::default().with_seed(77);
        let a = TsForest::fit(&ds, &p).unwrap().score(&ds).unwrap();
        let b = TsForest::fit(&ds, &p).unwrap().score(&ds).unwrap();
        assert_eq!(a, b);
        let bits = |v: &ScoreVector| v.scores.iter().map(|s| s.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn adding_trees_keeps_existing_ones() {
        let ds = wavy(12, 10);
        let small = fit(&ds, 3, 2, 3, None, 5).unwrap();
        let large = fit(&ds, 7, 2, 3, None, 5).unwrap();
        assert_eq!(small.trees(), &large.trees()[..3]);
    }

    #[test]
    fn identical_rows_score_n_regardless_of_m() {
        let ds = LabeledDataset::unlabeled(vec![vec![0.1, 0.5, -0.3, 0.9, 1.2]; 7]).unwrap();
        for m in [1, 4, 9] {
            let sv = fit(&ds, m, 1, 3, None, 1).unwrap().score(&ds).unwrap();
            assert!(sv.scores.iter().all(|&s| s == 7.0));
            assert!(sv.anomaly_scores.iter().all(|&a| a == 0.5));
        }
    }

    #[test]
    fn shifted_row_is_most_anomalous() {
        let ds = wavy(15, 24);
        let sv = TsForest::fit(&ds, &ForestParams::default()).unwrap().score(&ds).unwrap();
        let argmax = (0..15).max_by(|&a, &b| sv.anomaly_scores[a].total_cmp(&sv.anomaly_scores[b])).unwrap();
        assert_eq!(argmax, 0);
        assert!(sv.scores.iter().all(|&s| s >= 1.0));
    }

    #[test]
    fn score_rejects_other_data() {
        let ds = wavy(10, 8);
        let forest = fit(&ds, 2, 2, 3, None, 0).unwrap();
        assert!(matches!(forest.score(&wavy(11, 8)), Err(Error::Shape { .. })));
        let mut rows: Vec<Vec<f64>> = ds.rows().map(<[f64]>::to_vec).collect();
        rows[3][2] += 1.0;
        let other = LabeledDataset::unlabeled(rows).unwrap();
        assert!(matches!(forest.score(&other), Err(Error::Shape { .. })));
    }

    #[test]
    fn json_dump_round_trips() {
        let ds = wavy(9, 10);
        let forest = fit(&ds, 3, 2, 3, None, 8).unwrap();
        let back = TsForest::from_json(&forest.to_json().unwrap()).unwrap();
        assert_eq!(back, forest);
        assert_eq!(back.score(&ds).unwrap(), forest.score(&ds).unwrap());
        let bumped = forest.to_json().unwrap().replacen("\"format_version\":1", "\"format_version\":99", 1);
        assert!(matches!(TsForest::from_json(&bumped), Err(Error::Config(_))));
    }

    #[test]
    fn anomaly_score_examples() {
        assert_eq!(anomaly_scores(&[2.0, 4.0, 6.0]), vec![1.0, 0.5, 0.0]);
        assert_eq!(anomaly_scores(&[5.0, 5.0, 5.0]), vec![0.5, 0.5, 0.5]);
        assert_eq!(anomaly_scores(&[3.0]), vec![0.5]);
    }

    #[test]
    fn ensemble_spread_shrinks_with_more_trees() {
        let ds = wavy(16, 20);
        let spread = |m: usize| {
            let runs: Vec<Vec<f64>> = (0..30)
                .map(|s| fit(&ds, m, 4, 3, None, 1000 + s).unwrap().score(&ds).unwrap().scores)
                .collect();
            let mut total = 0.0;
            for k in 0..ds.len() {
                let vals: Vec<f64> = runs.iter().map(|r| r[k]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
                total += var.sqrt();
            }
            total / ds.len() as f64
        };
        let spreads: Vec<f64> = [1, 5, 10, 25].into_iter().map(spread).collect();
        for w in spreads.windows(2) {
            assert!(w[1] <= w[0], "spread increased: {spreads:?}");
        }
    }

    proptest! {
        #[test]
        fn anomaly_scores_reverse_the_ranking(scores in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let a = anomaly_scores(&scores);
            prop_assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
            let distinct = scores.iter().any(|&s| s != scores[0]);
            if distinct {
                prop_assert!(a.contains(&0.0) && a.contains(&1.0));
            }
            for i in 0..scores.len() {
                for j in 0..scores.len() {
                    if scores[i] < scores[j] {
                        prop_assert!(a[i] > a[j]);
                    } else if scores[i] == scores[j] {
                        prop_assert_eq!(a[i], a[j]);
                    }
                }
            }
        }
    }
}
