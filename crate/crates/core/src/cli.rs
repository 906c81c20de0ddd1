//! Command-line surface: `detect`, `evaluate` and `sweep`.
//!
//! Every artifact starts with the fully resolved configuration, so an output
//! file is enough to regenerate itself. CSV artifacts carry it on a leading
//! `# config: {...}` line; JSON artifacts under a `config` key.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::dataset::{parse_labeled_file, parse_series_file, window_series, znormalize, Delimiter, LabeledDataset};
use crate::error::{Error, Result};
use crate::eval::{load_dataset, run_on_dataset, sweep_on_dataset, ExperimentConfig, ExperimentReport, SweepParam};
use crate::forest::{ForestParams, TsForest, DEFAULT_HASHES, DEFAULT_TREES};
use crate::tstree::DEFAULT_SLIMIT;

#[derive(Debug, Parser)]
#[command(name = "dlde", version, about = "Anomaly subsequence detection with dynamic local density")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every subsequence of a labeled file or a windowed raw series.
    Detect(DetectArgs),
    /// Repeated seeded runs reporting AUC against the labels.
    Evaluate(EvaluateArgs),
    /// Evaluate over a list of tree counts or hash counts.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input file.
    #[arg(long)]
    pub input: PathBuf,
    /// Field separator: auto, comma, tab or whitespace.
    #[arg(long, default_value = "auto")]
    pub delimiter: Delimiter,
    /// Number of trees (m).
    #[arg(long, default_value_t = DEFAULT_TREES)]
    pub trees: usize,
    /// Hash functions per leaf (h).
    #[arg(long, default_value_t = DEFAULT_HASHES)]
    pub hashes: usize,
    /// Leaf length threshold.
    #[arg(long, default_value_t = DEFAULT_SLIMIT)]
    pub slimit: usize,
    /// Tree depth limit [default: floor(log2(d))].
    #[arg(long)]
    pub hlimit: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// z-normalize every subsequence before fitting.
    #[arg(long)]
    pub normalize: bool,
    /// Artifact path; written atomically.
    #[arg(long)]
    pub output: PathBuf,
    /// Artifact format [default: from the output extension, else csv].
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Treat the input as one raw series and cut it into windows of this length.
    #[arg(long)]
    pub subseq_len: Option<usize>,
    /// Label value of the anomaly class (labeled input only; labels do not affect scores).
    #[arg(long, allow_hyphen_values = true)]
    pub anomaly_class: Option<f64>,
    /// Also write the fitted forest as JSON.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
    /// Score with a previously saved forest instead of fitting.
    #[arg(long, conflicts_with = "save_model")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Label value of the anomaly class.
    #[arg(long, allow_hyphen_values = true)]
    pub anomaly_class: f64,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    /// Record per-run wall-clock seconds (makes artifacts differ between runs).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub eval: EvaluateArgs,
    /// Parameter to vary: m or h.
    #[arg(long)]
    pub param: SweepParam,
    /// Comma-separated values, e.g. 1,5,10,25,50.
    #[arg(long, value_delimiter = ',', required = true)]
    pub values: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct ResolvedConfig {
    command: &'static str,
    version: &'static str,
    input: PathBuf,
    delimiter: Delimiter,
    #[serde(skip_serializing_if = "Option::is_none")]
    anomaly_class: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subseq_len: Option<usize>,
    trees: usize,
    hashes: usize,
    slimit: usize,
    hlimit: usize,
    seed: u64,
    normalize: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    param: Option<SweepParam>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<usize>>,
    format: OutputFormat,
    output: PathBuf,
}

impl ResolvedConfig {
    fn new(command: &'static str, common: &CommonArgs, d: usize, format: OutputFormat) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            input: common.input.clone(),
            delimiter: common.delimiter,
            anomaly_class: None,
            subseq_len: None,
            trees: common.trees,
            hashes: common.hashes,
            slimit: common.slimit,
            hlimit: forest_params(common).resolved_hlimit(d),
            seed: common.seed,
            normalize: common.normalize,
            repeats: None,
            timings: None,
            model: None,
            param: None,
            values: None,
            format,
            output: common.output.clone(),
        }
    }
}

fn forest_params(common: &CommonArgs) -> ForestParams {
    ForestParams {
        trees: common.trees,
        hashes: common.hashes,
        slimit: common.slimit,
        hlimit: common.hlimit,
        seed: common.seed,
    }
}

fn output_format(common: &CommonArgs) -> OutputFormat {
    common.format.unwrap_or_else(|| {
        match common.output.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    })
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_with_config(config: &ResolvedConfig, extra: &[(&str, serde_json::Value)], body: &str) -> Result<String> {
    let mut out = format!("# config: {}\n", serde_json::to_string(config)?);
    for (key, value) in extra {
        out.push_str(&format!("# {key}: {}\n", serde_json::to_string(value)?));
    }
    out.push_str(body);
    Ok(out)
}

fn to_json_text(value: &serde_json::Value) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn load_detect_input(args: &DetectArgs) -> Result<LabeledDataset> {
    let common = &args.common;
    let ds = match args.subseq_len {
        Some(s) => window_series(&parse_series_file(&common.input, common.delimiter)?, s)?,
        None => parse_labeled_file(&common.input, common.delimiter, args.anomaly_class.unwrap_or(1.0))?,
    };
    Ok(if common.normalize { znormalize(&ds) } else { ds })
}

/// Scores every subsequence and writes `index,score,anomaly_score` rows
/// (`index` is 0-based).
pub fn cmd_detect(args: &DetectArgs) -> Result<PathBuf> {
    let common = &args.common;
    let format = output_format(common);
    let dataset = load_detect_input(args)?;
    let forest = match &args.model {
        Some(path) => TsForest::load(path)?,
        None => TsForest::fit(&dataset, &forest_params(common))?,
    };
    let sv = forest.score(&dataset)?;

    let mut config = ResolvedConfig::new("detect", common, dataset.d(), format);
    config.anomaly_class = args.anomaly_class.filter(|_| args.subseq_len.is_none());
    config.subseq_len = args.subseq_len;
    config.model = args.model.clone();
    if args.model.is_some() {
        let p = forest.params();
        config.trees = p.trees;
        config.hashes = p.hashes;
        config.slimit = p.slimit;
        config.hlimit = p.resolved_hlimit(dataset.d());
        config.seed = p.seed;
    }

    let text = match format {
        OutputFormat::Csv => {
            let mut body = String::from("index,score,anomaly_score\n");
            for (k, (s, a)) in sv.scores.iter().zip(&sv.anomaly_scores).enumerate() {
                body.push_str(&format!("{k},{s},{a}\n"));
            }
            csv_with_config(&config, &[], &body)?
        }
        OutputFormat::Json => {
            let rows: Vec<_> = sv
                .scores
                .iter()
                .zip(&sv.anomaly_scores)
                .enumerate()
                .map(|(k, (s, a))| json!({ "index": k, "score": s, "anomaly_score": a }))
                .collect();
            to_json_text(&json!({ "config": config, "rows": rows }))?
        }
    };
    if let Some(path) = &args.save_model {
        write_atomic(path, forest.to_json()?.as_bytes())?;
    }
    write_atomic(&common.output, text.as_bytes())?;
    Ok(common.output.clone())
}

fn experiment_config(args: &EvaluateArgs) -> ExperimentConfig {
    let common = &args.common;
    ExperimentConfig {
        input: common.input.clone(),
        delimiter: common.delimiter,
        anomaly_class: args.anomaly_class,
        params: forest_params(common),
        repeats: args.repeats,
        normalize: common.normalize,
    }
}

fn summary(report: &ExperimentReport) -> serde_json::Value {
    json!({
        "runs": report.runs.len(),
        "mean_auc": report.mean_auc,
        "std_auc": report.std_auc,
        "min_auc": report.min_auc,
        "max_auc": report.max_auc,
    })
}

fn evaluate_config(args: &EvaluateArgs, command: &'static str, d: usize) -> ResolvedConfig {
    let mut config = ResolvedConfig::new(command, &args.common, d, output_format(&args.common));
    config.anomaly_class = Some(args.anomaly_class);
    config.repeats = Some(args.repeats);
    config.timings = Some(args.timings);
    config
}

/// Runs the repeated-run protocol and writes `run,seed,auc,seconds` rows.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<PathBuf> {
    let exp = experiment_config(args);
    exp.validate()?;
    let dataset = load_dataset(&exp)?;
    let report = run_on_dataset(&dataset, &exp)?;
    let config = evaluate_config(args, "evaluate", dataset.d());

    let text = match config.format {
        OutputFormat::Csv => csv_with_config(&config, &[("summary", summary(&report))], &report.runs_csv(args.timings))?,
        OutputFormat::Json => {
            let runs: Vec<_> = report
                .runs
                .iter()
                .map(|r| {
                    json!({
                        "run": r.run,
                        "seed": r.seed,
                        "auc": r.auc,
                        "seconds": if args.timings { json!(r.seconds) } else { serde_json::Value::Null },
                    })
                })
                .collect();
            to_json_text(&json!({ "config": config, "summary": summary(&report), "runs": runs }))?
        }
    };
    write_atomic(&args.common.output, text.as_bytes())?;
    Ok(args.common.output.clone())
}

/// Writes one `param,value,runs,mean_auc,std_auc,min_auc,max_auc` row per
/// swept value.
pub fn cmd_sweep(args: &SweepArgs) -> Result<PathBuf> {
    let exp = experiment_config(&args.eval);
    exp.validate()?;
    let dataset = load_dataset(&exp)?;
    let reports = sweep_on_dataset(&dataset, &exp, args.param, &args.values)?;
    let mut config = evaluate_config(&args.eval, "sweep", dataset.d());
    config.param = Some(args.param);
    config.values = Some(args.values.clone());

    let rows: Vec<(usize, &ExperimentReport)> = args.values.iter().copied().zip(&reports).collect();
    let text = match config.format {
        OutputFormat::Csv => {
            let mut body = String::from("param,value,runs,mean_auc,std_auc,min_auc,max_auc\n");
            for (v, r) in &rows {
                body.push_str(&format!(
                    "{},{v},{},{},{},{},{}\n",
                    args.param,
                    r.runs.len(),
                    r.mean_auc,
                    r.std_auc,
                    r.min_auc,
                    r.max_auc
                ));
            }
            csv_with_config(&config, &[], &body)?
        }
        OutputFormat::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|(v, r)| {
                    let mut row = summary(r);
                    row["param"] = json!(args.param);
                    row["value"] = json!(v);
                    row
                })
                .collect();
            to_json_text(&json!({ "config": config, "rows": rows }))?
        }
    };
    write_atomic(&args.eval.common.output, text.as_bytes())?;
    Ok(args.eval.common.output.clone())
}

pub fn run(cli: &Cli) -> Result<PathBuf> {
    match &cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}
