//! Anomaly subsequence detection by dynamic local density estimation.
//!
//! A forest of random time split trees partitions the time axis of a set of
//! equal-length subsequences into short segments. Within each segment,
//! randomised scalar hash functions bucket the samples of every time column,
//! and a point's density is the mean bucket count over the columns of its
//! segment where it finds similar values under all hash functions.
//! Subsequences whose points sit in sparse buckets get low density and are
//! reported as anomalies.
//!
//! ```
//! use dlde::{ForestParams, LabeledDataset, TsForest};
//!
//! let mut rows: Vec<Vec<f64>> = (0..12)
//!     .map(|k| (0..16).map(|t| (t as f64 * 0.4 + k as f64 * 0.01).sin()).collect())
//!     .collect();
//! rows[5].iter_mut().for_each(|v| *v += 3.0);
//! let data = LabeledDataset::unlabeled(rows).unwrap();
//!
//! let forest = TsForest::fit(&data, &ForestParams::default().with_seed(1)).unwrap();
//! let scores = forest.score(&data).unwrap();
//! let worst = (0..12)
//!     .max_by(|&a, &b| scores.anomaly_scores[a].total_cmp(&scores.anomaly_scores[b]))
//!     .unwrap();
//! assert_eq!(worst, 5);
//! ```

pub mod cli;
pub mod dataset;
pub mod density;
pub mod error;
pub mod eval;
pub mod forest;
pub mod hashing;
pub mod seed;
pub mod tstree;

pub use dataset::{Delimiter, LabeledDataset, RawSeries};
pub use error::{Error, Result};
pub use eval::{auc, ExperimentConfig, ExperimentReport};
pub use forest::{anomaly_scores, ForestParams, ScoreVector, TsForest};
pub use hashing::{HashFn, LeafTables};
pub use tstree::{Segment, TsTree};
