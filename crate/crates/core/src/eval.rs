//! AUC and the repeated-run evaluation protocol.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{parse_labeled_file, znormalize, Delimiter, LabeledDataset};
use crate::error::{Error, Result};
use crate::forest::{ForestParams, TsForest};
use crate::seed::derive_seed;

/// Area under the ROC curve where a LOWER score marks an anomaly
/// (`labels[k] == true`).
///
/// Equals the probability that a random anomaly scores strictly below a
/// random normal subsequence, counting ties as one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            expected: format!("{} labels", scores.len()),
            found: format!("{}", labels.len()),
        });
    }
    if let Some(&bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::InvalidValue(bad));
    }
    let anomalies = labels.iter().filter(|&&a| a).count();
    let normals = labels.len() - anomalies;
    if anomalies == 0 || normals == 0 {
        return Err(Error::UndefinedMetric(format!(
            "AUC needs both classes, found {anomalies} anomalies and {normals} normal subsequences"
        )));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of ascending mid-ranks held by the normal class.
    let mut normal_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_normals = order[i..=j].iter().filter(|&&k| !labels[k]).count();
        normal_rank_sum += mid_rank * tied_normals as f64;
        i = j + 1;
    }
    let n = normals as f64;
    let u = normal_rank_sum - n * (n + 1.0) / 2.0;
    Ok(u / (n * anomalies as f64))
}

/// Everything needed to reproduce one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub input: PathBuf,
    pub delimiter: Delimiter,
    pub anomaly_class: f64,
    /// Forest parameters; `params.seed` is the base seed for all runs.
    pub params: ForestParams,
    pub repeats: usize,
    pub normalize: bool,
}

impl ExperimentConfig {
    pub fn new(input: impl Into<PathBuf>, anomaly_class: f64) -> Self {
        Self {
            input: input.into(),
            delimiter: Delimiter::Auto,
            anomaly_class,
            params: ForestParams::default(),
            repeats: 50,
            normalize: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        self.params.validate()
    }
}

/// Seed of run `run` (1-based) under `base`.
pub fn run_seed(base: u64, run: usize) -> u64 {
    derive_seed(base, run as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub auc: f64,
    /// Wall-clock seconds for fit + score.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
    pub mean_auc: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std_auc: f64,
    pub min_auc: f64,
    pub max_auc: f64,
}

impl ExperimentReport {
    fn from_runs(config: ExperimentConfig, runs: Vec<RunResult>) -> Self {
        let aucs: Vec<f64> = runs.iter().map(|r| r.auc).collect();
        let (mean_auc, std_auc) = mean_std(&aucs);
        Self {
            config,
            mean_auc,
            std_auc,
            min_auc: aucs.iter().copied().fold(f64::INFINITY, f64::min),
            max_auc: aucs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            runs,
        }
    }

    pub fn aucs(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.auc).collect()
    }

    /// Per-run rows `run,seed,auc,seconds`. The `seconds` field is left
    /// empty unless `timings` is set, so reruns produce identical text.
    pub fn runs_csv(&self, timings: bool) -> String {
        let mut out = String::from("run,seed,auc,seconds\n");
        for r in &self.runs {
            let secs = if timings { format!("{:.6}", r.seconds) } else { String::new() };
            let _ = writeln!(out, "{},{},{},{}", r.run, r.seed, r.auc, secs);
        }
        out
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<LabeledDataset> {
    let ds = parse_labeled_file(&config.input, config.delimiter, config.anomaly_class)?;
    Ok(if config.normalize { znormalize(&ds) } else { ds })
}

/// Fits and scores once with `seed`, returning the AUC.
pub fn single_run(dataset: &LabeledDataset, params: &ForestParams, seed: u64) -> Result<f64> {
    let params = params.clone().with_seed(seed);
    let scores = TsForest::fit(dataset, &params)?.score(dataset)?.scores;
    auc(&scores, dataset.labels())
}

/// Runs the protocol on an already loaded dataset. `config.input` is only
/// echoed into the report.
pub fn run_on_dataset(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    // fail on a single-class dataset before spending any time fitting
    auc(&vec![0.0; dataset.len()], dataset.labels())?;

    let mut config = config.clone();
    config.params.hlimit = Some(config.params.resolved_hlimit(dataset.d()));
    let base = config.params.seed;

    let runs = (1..=config.repeats)
        .into_par_iter()
        .map(|run| {
            let seed = run_seed(base, run);
            let started = Instant::now();
            let auc = single_run(dataset, &config.params, seed)?;
            Ok(RunResult {
                run,
                seed,
                auc,
                seconds: started.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::from_runs(config, runs))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    run_on_dataset(&dataset, config)
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    /// Tree count.
    M,
    /// Hash functions per leaf.
    H,
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" | "trees" => Ok(SweepParam::M),
            "h" | "hashes" => Ok(SweepParam::H),
            other => Err(Error::config(format!("unknown sweep parameter {other:?} (expected m or h)"))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepParam::M => "m",
            SweepParam::H => "h",
        })
    }
}

fn sweep_configs(config: &ExperimentConfig, param: SweepParam, values: &[usize]) -> Result<Vec<ExperimentConfig>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    values
        .iter()
        .map(|&v| {
            if v == 0 {
                return Err(Error::config(format!("sweep value for {param} must be at least 1")));
            }
            let mut c = config.clone();
            match param {
                SweepParam::M => c.params.trees = v,
                SweepParam::H => c.params.hashes = v,
            }
            Ok(c)
        })
        .collect()
}

/// One report per value, in input order, all sharing the base seed.
pub fn sweep_on_dataset(
    dataset: &LabeledDataset,
    config: &ExperimentConfig,
    param: SweepParam,
    values: &[usize],
) -> Result<Vec<ExperimentReport>> {
    sweep_configs(config, param, values)?
        .iter()
        .map(|c| run_on_dataset(dataset, c))
        .collect()
}

pub fn sweep(config: &ExperimentConfig, param: SweepParam, values: &[usize]) -> Result<Vec<ExperimentReport>> {
    sweep_configs(config, param, values)?;
    let dataset = load_dataset(config)?;
    sweep_on_dataset(&dataset, config, param, values)
}
