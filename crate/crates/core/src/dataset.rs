//! Labeled subsequence sets and the text formats they are read from.
//!
//! Labeled files carry one subsequence per line, label first, followed by
//! the samples. Fields are separated by a comma, a tab or a run of
//! whitespace. Raw series files are a flat stream of samples in temporal
//! order, using the same separators (line breaks are also separators).

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Shortest subsequence length accepted anywhere in the crate.
pub const MIN_SUBSEQUENCE_LEN: usize = 4;

/// Field separator of a text input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    /// Pick from the first non-blank line: tab, then comma, then whitespace.
    #[default]
    Auto,
    Comma,
    Tab,
    Whitespace,
}

impl Delimiter {
    fn resolve(self, text: &str) -> Delimiter {
        if self != Delimiter::Auto {
            return self;
        }
        let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        if first.contains('\t') {
            Delimiter::Tab
        } else if first.contains(',') {
            Delimiter::Comma
        } else {
            Delimiter::Whitespace
        }
    }

    fn split<'a>(self, line: &'a str) -> Box<dyn Iterator<Item = &'a str> + 'a> {
        match self {
            Delimiter::Comma => Box::new(line.split(',').map(str::trim)),
            Delimiter::Tab => Box::new(line.split('\t').map(str::trim)),
            Delimiter::Whitespace | Delimiter::Auto => Box::new(line.split_whitespace()),
        }
    }

    fn as_char(self) -> char {
        match self {
            Delimiter::Tab => '\t',
            Delimiter::Whitespace => ' ',
            Delimiter::Comma | Delimiter::Auto => ',',
        }
    }
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Delimiter::Auto),
            "comma" | "," => Ok(Delimiter::Comma),
            "tab" | "\t" | "\\t" => Ok(Delimiter::Tab),
            "whitespace" | "space" | " " => Ok(Delimiter::Whitespace),
            other => Err(Error::config(format!(
                "unknown delimiter {other:?} (expected auto, comma, tab or whitespace)"
            ))),
        }
    }
}

impl fmt::Display for Delimiter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Delimiter::Auto => "auto",
            Delimiter::Comma => "comma",
            Delimiter::Tab => "tab",
            Delimiter::Whitespace => "whitespace",
        })
    }
}

/// `N` subsequences of common length `d`, each flagged normal or anomalous.
///
/// Values are stored row-major in one buffer. Every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    values: Vec<f64>,
    labels: Vec<bool>,
    d: usize,
}

impl LabeledDataset {
    /// Builds a dataset from rows and anomaly flags (`true` = anomaly).
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        if labels.len() != rows.len() {
            return Err(Error::Shape {
                expected: format!("{} labels", rows.len()),
                found: format!("{} labels", labels.len()),
            });
        }
        let d = rows[0].len();
        if d < MIN_SUBSEQUENCE_LEN {
            return Err(Error::config(format!(
                "subsequence length {d} is below the minimum of {MIN_SUBSEQUENCE_LEN}"
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Shape {
                    expected: format!("row length {d}"),
                    found: format!("row {k} of length {}", row.len()),
                });
            }
            if let Some(&bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidValue(bad));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { values, labels, d })
    }

    /// Builds a dataset with every label set to normal.
    pub fn unlabeled(rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = vec![false; rows.len()];
        Self::new(rows, labels)
    }

    /// Number of subsequences, `N`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Subsequence length, `d`.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.d..(k + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    /// Sample of row `k` at 1-based time index `t`.
    pub fn value(&self, k: usize, t: usize) -> f64 {
        self.values[k * self.d + t - 1]
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|&&a| a).count()
    }

    /// All samples, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Appends the rows of `other` (e.g. a test split after a train split).
    pub fn concat(&self, other: &LabeledDataset) -> Result<Self> {
        if other.d != self.d {
            return Err(Error::Shape {
                expected: format!("subsequence length {}", self.d),
                found: format!("subsequence length {}", other.d),
            });
        }
        let mut out = self.clone();
        out.values.extend_from_slice(&other.values);
        out.labels.extend_from_slice(&other.labels);
        Ok(out)
    }

    /// Writes the label-first text format. Anomalies are written with
    /// label `1`, normal rows with `0`; values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn write_labeled<W: Write>(&self, mut out: W, delimiter: Delimiter) -> std::io::Result<()> {
        let sep = delimiter.as_char();
        for (row, &label) in self.rows().zip(&self.labels) {
            write!(out, "{}", u8::from(label))?;
            for v in row {
                write!(out, "{sep}{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// A single long series, before windowing.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub values: Vec<f64>,
    pub label: Option<f64>,
}

impl RawSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(bad));
        }
        Ok(Self { values, label: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn parse_field(field: &str, line: usize, column: usize) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Parse {
        line,
        column,
        field: field.to_string(),
    })
}

/// Parses label-first text. Rows whose label equals `anomaly_class` are
/// flagged anomalous; all others are normal.
pub fn parse_labeled_str(text: &str, delimiter: Delimiter, anomaly_class: f64) -> Result<LabeledDataset> {
    let delimiter = delimiter.resolve(text);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<(usize, usize)> = None;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = delimiter.split(line);
        let label_field = fields.next().unwrap_or("");
        let label = parse_field(label_field, lineno, 1)?;
        let row = fields
            .enumerate()
            .map(|(i, f)| parse_field(f, lineno, i + 2))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(&bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Malformed {
                line: lineno,
                message: format!("non-finite sample {bad}"),
            });
        }
        match width {
            None => {
                if row.len() < MIN_SUBSEQUENCE_LEN {
                    return Err(Error::Malformed {
                        line: lineno,
                        message: format!(
                            "expected a label and at least {MIN_SUBSEQUENCE_LEN} values, found {} values",
                            row.len()
                        ),
                    });
                }
                width = Some((row.len(), lineno));
            }
            Some((w, first)) if w != row.len() => {
                return Err(Error::Malformed {
                    line: lineno,
                    message: format!("{} values, but line {first} has {w}", row.len()),
                });
            }
            Some(_) => {}
        }
        labels.push(label == anomaly_class);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    LabeledDataset::new(rows, labels)
}

/// Reads a label-first file; see [`parse_labeled_str`].
pub fn parse_labeled_file(path: impl AsRef<Path>, delimiter: Delimiter, anomaly_class: f64) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labeled_str(&text, delimiter, anomaly_class)
}

pub fn parse_series_str(text: &str, delimiter: Delimiter) -> Result<RawSeries> {
    let delimiter = delimiter.resolve(text);
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        for (col, field) in delimiter.split(line).enumerate() {
            values.push(parse_field(field, idx + 1, col + 1)?);
        }
    }
    RawSeries::new(values).map_err(|e| match e {
        Error::InvalidValue(v) => Error::Malformed {
            line: 0,
            message: format!("non-finite sample {v}"),
        },
        other => other,
    })
}

pub fn parse_series_file(path: impl AsRef<Path>, delimiter: Delimiter) -> Result<RawSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series_str(&text, delimiter)
}

/// Cuts `series` into consecutive non-overlapping windows of length `s`.
/// A trailing remainder shorter than `s` is dropped.
pub fn window_series(series: &RawSeries, s: usize) -> Result<LabeledDataset> {
    if s < MIN_SUBSEQUENCE_LEN {
        return Err(Error::config(format!(
            "subsequence length {s} is below the minimum of {MIN_SUBSEQUENCE_LEN}"
        )));
    }
    if s > series.len() {
        return Err(Error::config(format!(
            "subsequence length {s} exceeds series length {}",
            series.len()
        )));
    }
    let rows: Vec<Vec<f64>> = series.values.chunks_exact(s).map(<[f64]>::to_vec).collect();
    LabeledDataset::unlabeled(rows)
}

/// Rescales every row to zero mean and unit (population) standard
/// deviation. Constant rows become all zeros.
pub fn znormalize(dataset: &LabeledDataset) -> LabeledDataset {
    let d = dataset.d as f64;
    let mut values = Vec::with_capacity(dataset.values.len());
    for row in dataset.rows() {
        let mean = row.iter().sum::<f64>() / d;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
        let std = var.sqrt();
        if std <= 1e-12 * mean.abs().max(1.0) {
            values.extend(std::iter::repeat_n(0.0, row.len()));
        } else {
            values.extend(row.iter().map(|v| (v - mean) / std));
        }
    }
    LabeledDataset {
        values,
        labels: dataset.labels.clone(),
        d: dataset.d,
    }
}
