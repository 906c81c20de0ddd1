#![allow(dead_code)]

use std::path::{Path, PathBuf};

use dlde::seed::{rng_from_seed, Rng};
use dlde::{Delimiter, LabeledDataset};
use rand::Rng as _;

pub fn gaussian(rng: &mut Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn bump(x: f64, centre: f64, width: f64, amp: f64) -> f64 {
    amp * (-((x - centre) / width).powi(2) / 2.0).exp()
}

/// One heartbeat sampled at `len` points. `ectopic` draws a wide,
/// P-less beat with an inverted T wave.
pub fn beat(len: usize, ectopic: bool, rng: &mut Rng) -> Vec<f64> {
    let shift = rng.random_range(-0.015..0.015);
    let gain = 1.0 + 0.05 * gaussian(rng);
    (0..len)
        .map(|i| {
            let x = i as f64 / len as f64 - shift;
            let clean = if ectopic {
                bump(x, 0.38, 0.04, -0.35) + bump(x, 0.45, 0.045, 1.1) + bump(x, 0.7, 0.07, -0.45)
            } else {
                bump(x, 0.2, 0.025, 0.15) + bump(x, 0.37, 0.01, -0.12) + bump(x, 0.4, 0.012, 1.0)
                    + bump(x, 0.43, 0.01, -0.25)
                    + bump(x, 0.65, 0.04, 0.3)
            };
            gain * clean + 0.02 * gaussian(rng)
        })
        .collect()
}

/// A 15-beat recording with one ectopic beat; returns the series and the
/// index of the anomalous window.
pub fn ecg_minute(beat_len: usize, seed: u64) -> (Vec<f64>, usize) {
    let mut rng = rng_from_seed(seed);
    let anomalous = rng.random_range(0..15);
    let wander_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let mut series = Vec::with_capacity(15 * beat_len);
    for b in 0..15 {
        series.extend(beat(beat_len, b == anomalous, &mut rng));
    }
    for (i, v) in series.iter_mut().enumerate() {
        *v += 0.05 * (i as f64 / (15 * beat_len) as f64 * std::f64::consts::TAU + wander_phase).sin();
    }
    (series, anomalous)
}

pub fn workspace_root() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

/// Directory holding UCR data: `$DLDE_UCR_DIR`, else `<workspace>/data/ucr`.
pub fn ucr_dir() -> PathBuf {
    std::env::var_os("DLDE_UCR_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data/ucr"))
}

/// Label-first lines of a dataset, from either a prepared single file
/// (`<name>.tsv|csv|txt`) or the UCR layout `<base>/<base>_TRAIN.tsv` plus
/// `<base>_TEST.tsv` (train first).
fn dataset_lines(dir: &Path, name: &str, base: &str) -> Option<Vec<String>> {
    for ext in ["tsv", "csv", "txt"] {
        let p = dir.join(format!("{name}.{ext}"));
        if let Ok(text) = std::fs::read_to_string(&p) {
            return Some(text.lines().map(str::to_owned).collect());
        }
    }
    for ext in ["tsv", "txt", "csv", ""] {
        let dot = if ext.is_empty() { "" } else { "." };
        let train = dir.join(base).join(format!("{base}_TRAIN{dot}{ext}"));
        let test = dir.join(base).join(format!("{base}_TEST{dot}{ext}"));
        if let (Ok(a), Ok(b)) = (std::fs::read_to_string(&train), std::fs::read_to_string(&test)) {
            return Some(a.lines().chain(b.lines()).map(str::to_owned).collect());
        }
    }
    None
}

fn label_of(line: &str) -> Option<f64> {
    line.split(|c: char| c == ',' || c == '\t' || c.is_whitespace())
        .find(|f| !f.is_empty())
        .and_then(|f| f.parse().ok())
}

pub struct UcrCase {
    pub name: &'static str,
    /// UCR archive directory name.
    pub base: &'static str,
    /// `(normal, anomaly)` classes to keep; `None` keeps both classes of a
    /// two-class file and treats the minority class as the anomaly.
    pub classes: Option<(f64, f64)>,
    pub n: usize,
    pub d: usize,
}

pub struct LoadedCase {
    pub dataset: LabeledDataset,
    pub anomaly_class: f64,
}

pub fn load_ucr(case: &UcrCase) -> Result<LoadedCase, String> {
    let dir = ucr_dir();
    let lines = dataset_lines(&dir, case.name, case.base)
        .ok_or_else(|| format!("{} not found under {}", case.name, dir.display()))?;
    let lines: Vec<String> = lines.into_iter().filter(|l| !l.trim().is_empty()).collect();
    let labels: Vec<f64> = lines
        .iter()
        .map(|l| label_of(l).ok_or_else(|| format!("bad label in {l:.40}")))
        .collect::<Result<_, _>>()?;

    let (kept, anomaly_class): (Vec<&String>, f64) = match case.classes {
        Some((normal, anomaly)) => (
            lines.iter().zip(&labels).filter(|(_, &l)| l == normal || l == anomaly).map(|(s, _)| s).collect(),
            anomaly,
        ),
        None => {
            let mut classes: Vec<f64> = labels.clone();
            classes.sort_by(f64::total_cmp);
            classes.dedup();
            if classes.len() != 2 {
                return Err(format!("{} has {} classes, expected 2", case.name, classes.len()));
            }
            let count = |c: f64| labels.iter().filter(|&&l| l == c).count();
            let minority = if count(classes[0]) <= count(classes[1]) { classes[0] } else { classes[1] };
            (lines.iter().collect(), minority)
        }
    };
    let text: String = kept.iter().map(|l| format!("{l}\n")).collect();
    let dataset = dlde::dataset::parse_labeled_str(&text, Delimiter::Auto, anomaly_class).map_err(|e| e.to_string())?;
    Ok(LoadedCase { dataset, anomaly_class })
}
