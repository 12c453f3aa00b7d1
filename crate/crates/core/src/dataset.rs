//! Labeled real-valued datasets: CSV I/O, min-max scaling, stratified
//! splitting and a seeded synthetic generator.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>, features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::structural(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::input(format!("duplicate feature name {name:?}")));
            }
        }
        if let Some((r, row)) = features
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != feature_names.len())
        {
            return Err(Error::structural(format!(
                "row {r} has {} values, expected {}",
                row.len(),
                feature_names.len()
            )));
        }
        Ok(Self {
            feature_names,
            features,
            labels,
        })
    }

    /// Dataset with generated names `f0, f1, ...`.
    pub fn unnamed(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let width = features.first().map_or(0, Vec::len);
        let names = (0..width).map(|k| format!("f{k}")).collect();
        Self::new(names, features, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.features
            .iter()
            .map(Vec::as_slice)
            .zip(self.labels.iter().copied())
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &k in indices {
            if k >= self.len() {
                return Err(Error::input(format!("row index {k} out of range")));
            }
            features.push(self.features[k].clone());
            labels.push(self.labels[k]);
        }
        Ok(Self {
            feature_names: self.feature_names.clone(),
            features,
            labels,
        })
    }

    /// Comma-separated text: header row, label in the last column.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::parse(1, e.to_string()))?
            .clone();
        if header.len() < 2 {
            return Err(Error::parse(1, "need at least one feature and a label column"));
        }
        let names: Vec<String> = header.iter().take(header.len() - 1).map(str::to_owned).collect();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let line = k + 2;
            let record = record.map_err(|e| Error::parse(line, e.to_string()))?;
            if record.len() != header.len() {
                return Err(Error::parse(
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            let row = record
                .iter()
                .take(names.len())
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(line, format!("invalid number {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let raw_label = &record[names.len()];
            let label = raw_label
                .parse::<usize>()
                .map_err(|_| Error::parse(line, format!("invalid label {raw_label:?}")))?;
            features.push(row);
            labels.push(label);
        }
        Self::new(names, features, labels)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.feature_names.join(",");
        out.push_str(",label\n");
        for (row, label) in self.rows() {
            for v in row {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&label.to_string());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Per-feature affine map of `[min, max]` onto `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMaxScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &LabeledDataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::input("cannot fit a scaler on an empty dataset"));
        }
        let n = data.num_features();
        let mut mins = vec![f64::INFINITY; n];
        let mut maxs = vec![f64::NEG_INFINITY; n];
        for row in data.features() {
            for (k, &v) in row.iter().enumerate() {
                mins[k] = mins[k].min(v);
                maxs[k] = maxs[k].max(v);
            }
        }
        Ok(Self { mins, maxs })
    }

    pub fn width(&self) -> usize {
        self.mins.len()
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mins.iter().zip(&self.maxs))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    2.0 * (v - lo) / (hi - lo) - 1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Train/test row indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitManifest {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitManifest {
    /// Stratified split: each class contributes `round(test_fraction * n_c)`
    /// rows to the test side. Indices are returned sorted.
    pub fn stratified(labels: &[usize], test_fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::input(format!("test fraction {test_fraction} not in [0, 1)")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let num_classes = labels.iter().max().map_or(0, |&c| c + 1);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for class in 0..num_classes {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&k| labels[k] == class).collect();
            idx.shuffle(&mut rng);
            let n_test = (test_fraction * idx.len() as f64).round() as usize;
            test.extend_from_slice(&idx[..n_test]);
            train.extend_from_slice(&idx[n_test..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok(Self { train, test })
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        format!("train {}\ntest {}\n", join(&self.train), join(&self.test))
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut train = None;
        let mut test = None;
        for (k, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(tag) = parts.next() else { continue };
            let values = parts
                .map(|p| p.parse::<usize>().map_err(|_| Error::parse(k + 1, format!("invalid index {p:?}"))))
                .collect::<Result<Vec<_>>>()?;
            match tag {
                "train" => train = Some(values),
                "test" => test = Some(values),
                other => return Err(Error::parse(k + 1, format!("unknown section {other:?}"))),
            }
        }
        match (train, test) {
            (Some(train), Some(test)) => Ok(Self { train, test }),
            _ => Err(Error::parse(0, "manifest needs both train and test lines")),
        }
    }
}

/// Two overlapping Gaussian classes.
///
/// Class 0 is centred at the origin and class 1 at a mean vector whose
/// first `informative` coordinates are `separation / sqrt(informative)`, so
/// the Bayes accuracy is `Phi(separation / 2)`. Remaining features are pure
/// unit-variance noise. Every feature gets a seeded offset and scale so the
/// raw columns do not share a range. Classes are balanced.
#[derive(Clone, Debug)]
pub struct GaussianBlobs {
    pub samples: usize,
    pub features: usize,
    pub informative: usize,
    pub separation: f64,
}

impl Default for GaussianBlobs {
    fn default() -> Self {
        Self {
            samples: 3000,
            features: 27,
            informative: 8,
            separation: 2.3,
        }
    }
}

impl GaussianBlobs {
    pub fn generate(&self, seed: u64) -> Result<LabeledDataset> {
        if self.informative > self.features || self.features == 0 {
            return Err(Error::input("informative features must be within 1..=features"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let shift = self.separation / (self.informative.max(1) as f64).sqrt();
        let offsets: Vec<f64> = (0..self.features).map(|_| rng.random_range(-50.0..50.0)).collect();
        let scales: Vec<f64> = (0..self.features).map(|_| rng.random_range(0.5..20.0)).collect();
        let mut rows = Vec::with_capacity(self.samples);
        let mut labels = Vec::with_capacity(self.samples);
        for s in 0..self.samples {
            let label = s % 2;
            let row = (0..self.features)
                .map(|f| {
                    let mean = if label == 1 && f < self.informative { shift } else { 0.0 };
                    offsets[f] + scales[f] * (mean + unit.sample(&mut rng))
                })
                .collect();
            rows.push(row);
            labels.push(label);
        }
        LabeledDataset::unnamed(rows, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let data = LabeledDataset::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.5, -1.25], vec![3.0, 1e-3]],
            vec![1, 0],
        )
        .unwrap();
        let back = LabeledDataset::from_csv_str(&data.to_csv_string()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = LabeledDataset::from_csv_str("a,label\n1,0\nx,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = LabeledDataset::from_csv_str("a,label\n1,0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(LabeledDataset::new(vec!["a".into(), "a".into()], vec![], vec![]).is_err());
    }

    #[test]
    fn scaler_maps_to_unit_interval() {
        let data = LabeledDataset::unnamed(vec![vec![2.0, 5.0], vec![4.0, 5.0], vec![3.0, 5.0]], vec![0, 1, 0]).unwrap();
        let s = MinMaxScaler::fit(&data).unwrap();
        assert_eq!(s.transform(&[2.0, 5.0]), vec![-1.0, 0.0]);
        assert_eq!(s.transform(&[4.0, 5.0]), vec![1.0, 0.0]);
        assert_eq!(s.transform(&[3.0, 7.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn stratified_split_keeps_class_ratio() {
        let labels: Vec<usize> = (0..100).map(|k| usize::from(k % 4 == 0)).collect();
        let split = SplitManifest::stratified(&labels, 0.2, 3).unwrap();
        assert_eq!(split.test.len(), 20);
        assert_eq!(split.test.iter().filter(|&&k| labels[k] == 1).count(), 5);
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(SplitManifest::from_text(&split.to_text()).unwrap(), split);
        assert_eq!(split, SplitManifest::stratified(&labels, 0.2, 3).unwrap());
    }

    #[test]
    fn blobs_are_balanced_and_seeded() {
        let cfg = GaussianBlobs { samples: 200, ..Default::default() };
        let a = cfg.generate(7).unwrap();
        assert_eq!(a.len(), 200);
        assert_eq!(a.num_features(), 27);
        assert_eq!(a.labels().iter().filter(|&&l| l == 1).count(), 100);
        assert_eq!(a, cfg.generate(7).unwrap());
        assert_ne!(a, cfg.generate(8).unwrap());
    }
}
