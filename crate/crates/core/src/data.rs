//! Labeled samples, CSV ingestion, standardization and train/test splitting.
//!
//! CSV rows are `label,f1,...,fd` with no header. Labels are `+1`, `1` or `-1`.
//! Features are stored raw; the intercept column is added by the linear models
//! themselves so that kernel and neighbor computations see the plain geometry.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A signed binary label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// `+1.0` or `-1.0`.
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    /// Sign with the tie at zero resolved to `Positive`.
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl From<Label> for i8 {
    fn from(label: Label) -> i8 {
        match label {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(value: i8) -> std::result::Result<Self, Self::Error> {
        match value {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label {other} is not one of -1, +1")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => f.write_str("+1"),
            Label::Negative => f.write_str("-1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Clean,
    Noisy,
    Distilled,
}

/// Feature rows plus signed labels. Rows share one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    features: Vec<Vec<f64>>,
    labels: Vec<Label>,
    dim: usize,
    kind: SampleKind,
}

impl LabeledSample {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<Label>, kind: SampleKind) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Parameter(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features.first().map_or(0, Vec::len);
        for row in &features {
            if row.len() != dim {
                return Err(Error::Dimension { expected: dim, found: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter("non-finite feature value".into()));
            }
        }
        Ok(Self { features, labels, dim, kind })
    }

    /// An empty sample with a known feature dimension.
    pub fn empty(dim: usize, kind: SampleKind) -> Self {
        Self { features: Vec::new(), labels: Vec::new(), dim, kind }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> SampleKind {
        self.kind
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn with_kind(mut self, kind: SampleKind) -> Self {
        self.kind = kind;
        self
    }

    /// Same features, new labels.
    pub fn relabeled(&self, labels: Vec<Label>, kind: SampleKind) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Parameter(format!(
                "{} labels for {} rows",
                labels.len(),
                self.len()
            )));
        }
        Ok(Self { features: self.features.clone(), labels, dim: self.dim, kind })
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
            kind: self.kind,
        }
    }

    pub(crate) fn push(&mut self, row: Vec<f64>, label: Label) {
        debug_assert_eq!(row.len(), self.dim);
        self.features.push(row);
        self.labels.push(label);
    }
}

fn parse_label(text: &str, line: usize) -> Result<Label> {
    match text.trim() {
        "+1" | "1" => Ok(Label::Positive),
        "-1" => Ok(Label::Negative),
        other => Err(Error::Label { line, found: other.to_string() }),
    }
}

/// Parses CSV text from any reader. Blank lines are skipped.
pub fn read_csv<R: BufRead>(reader: R) -> Result<LabeledSample> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label = parse_label(fields.next().unwrap_or_default(), lineno)?;
        let row = fields
            .map(|f| {
                f.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad feature `{}`: {e}", f.trim()),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(Error::Parse { line: lineno, message: "row has no features".into() });
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse { line: lineno, message: format!("non-finite feature {v}") });
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Dimension { expected: d, found: row.len() })
            }
            _ => {}
        }
        features.push(row);
        labels.push(label);
    }
    Ok(LabeledSample { features, labels, dim: dim.unwrap_or(0), kind: SampleKind::Clean })
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledSample> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv(BufReader::new(file))
}

/// Writes rows in the same format `read_csv` accepts. Floats use the
/// shortest representation that round-trips exactly.
pub fn write_csv<W: Write>(sample: &LabeledSample, mut out: W) -> std::io::Result<()> {
    for (row, label) in sample.features.iter().zip(&sample.labels) {
        write!(out, "{label}")?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Per-column affine map `(x - mean) / std` fitted on a training sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Population statistics; constant columns get `std = 1`.
    pub fn fit(train: &LabeledSample) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("standardization needs a non-empty train sample"));
        }
        let n = train.len() as f64;
        let d = train.dim();
        let mut mean = vec![0.0; d];
        for row in train.features() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in train.features() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { mean, std })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn transform(&self, sample: &LabeledSample) -> Result<LabeledSample> {
        if !sample.is_empty() && sample.dim() != self.mean.len() {
            return Err(Error::Dimension { expected: self.mean.len(), found: sample.dim() });
        }
        Ok(LabeledSample {
            features: sample.features.iter().map(|r| self.transform_row(r)).collect(),
            labels: sample.labels.clone(),
            dim: self.mean.len(),
            kind: sample.kind,
        })
    }
}

/// Fits a [`Scaler`] on `train` only and applies it to `train` and every
/// sample in `others`.
pub fn standardize(
    train: &LabeledSample,
    others: &[&LabeledSample],
) -> Result<(LabeledSample, Vec<LabeledSample>, Scaler)> {
    let scaler = Scaler::fit(train)?;
    let train = scaler.transform(train)?;
    let others = others.iter().map(|s| scaler.transform(s)).collect::<Result<Vec<_>>>()?;
    Ok((train, others, scaler))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::Parameter(format!(
                "train_fraction must lie in (0, 1), got {train_fraction}"
            )));
        }
        Ok(Self { train_fraction, seed })
    }
}

/// Random permutation driven by `cfg.seed`; the first `floor(fraction * n)`
/// rows go to train.
pub fn split(sample: &LabeledSample, cfg: SplitConfig) -> Result<(LabeledSample, LabeledSample)> {
    if sample.is_empty() {
        return Err(Error::Empty("cannot split an empty sample"));
    }
    let cfg = SplitConfig::new(cfg.train_fraction, cfg.seed)?;
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.shuffle(&mut rng::stream(cfg.seed, rng::SPLIT));
    let cut = (cfg.train_fraction * sample.len() as f64).floor() as usize;
    Ok((sample.select(&order[..cut]), sample.select(&order[cut..])))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LabeledSample> {
        read_csv(text.as_bytes())
    }

    #[test]
    fn parses_two_rows() {
        let s = parse("+1,0.5,0.2\n-1,-0.3,0.1").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.labels(), &[Label::Positive, Label::Negative]);
        assert_eq!(s.features()[1], vec![-0.3, 0.1]);
        assert_eq!(s.kind(), SampleKind::Clean);
    }

    #[test]
    fn empty_file_is_empty_sample() {
        let s = parse("").unwrap();
        assert!(s.is_empty());
        assert!(Scaler::fit(&s).is_err());
    }

    #[test]
    fn bad_label_names_line() {
        match parse("2,0.1") {
            Err(Error::Label { line: 1, found }) => assert_eq!(found, "2"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("1,0.1\n0,0.2"), Err(Error::Label { line: 2, .. })));
    }

    #[test]
    fn malformed_and_ragged_rows() {
        assert!(matches!(parse("1,0.1\n-1,abc"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse("1,0.1,0.2\n-1,0.3"),
            Err(Error::Dimension { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let text = "+1,0.123456789012345,-2e-7\n-1,3.5,1e300\n";
        let s = parse(text).unwrap();
        let mut buf = Vec::new();
        write_csv(&s, &mut buf).unwrap();
        let back = parse(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn standardize_two_points() {
        let train = parse("1,1,5\n-1,3,5").unwrap();
        let test = parse("1,2,7").unwrap();
        let (t, others, scaler) = standardize(&train, &[&test]).unwrap();
        assert_eq!(t.features()[0], vec![-1.0, 0.0]);
        assert_eq!(t.features()[1], vec![1.0, 0.0]);
        assert_eq!(scaler.std, vec![1.0, 1.0]);
        // test point at the train mean in column 0 maps to exactly 0
        assert_eq!(others[0].features()[0][0], 0.0);
        assert_eq!(others[0].features()[0][1], 2.0);
    }

    #[test]
    fn standardize_rejects_mismatch() {
        let train = parse("1,1,5\n-1,3,5").unwrap();
        let test = parse("1,2").unwrap();
        assert!(matches!(standardize(&train, &[&test]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let s = parse("1,1\n-1,2\n1,3\n-1,4").unwrap();
        let cfg = SplitConfig::new(0.75, 11).unwrap();
        let (a, b) = split(&s, cfg).unwrap();
        assert_eq!((a.len(), b.len()), (3, 1));
        let (a2, b2) = split(&s, cfg).unwrap();
        assert_eq!((a, b), (a2, b2));
        assert!(SplitConfig::new(1.0, 0).is_err());
        assert!(SplitConfig::new(0.0, 0).is_err());
    }

    #[test]
    fn label_serde() {
        assert_eq!(serde_json::to_string(&Label::Negative).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Label>("1").unwrap(), Label::Positive);
        assert!(serde_json::from_str::<Label>("0").is_err());
    }
}
