//! Dataset ingestion: LIBSVM sparse text and dense CSV, with a seeded
//! shuffled train/test split.
//!
//! LIBSVM lines look like `label idx:val idx:val ...` with 1-based indices;
//! the dimension is inferred as the largest index seen. Dense CSV expects a
//! header row and puts the label in the last column. Classification labels
//! are mapped to ±1: natively binary label sets directly ({−1,+1} or {0,1}),
//! or by digit parity with even → +1 (the documented convention).

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::io::BufRead;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    LibSvm,
    DenseCsv,
}

/// How raw labels become ±1 classification targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelMapping {
    /// Accept {−1, +1} as-is and map {0, 1} to {−1, +1}; anything else errors.
    #[default]
    Binary,
    /// Integer labels mapped by parity: even → +1, odd → −1.
    Parity,
    /// Keep labels as parsed (regression-style).
    Raw,
}

/// Loaded samples plus a train/test split over row indices.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, |f| f.len())
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    /// In-memory constructor with the same seeded split as `load_dataset`.
    pub fn from_parts(
        features: Vec<Vec<f64>>,
        labels: Vec<f64>,
        split_fraction: f64,
        seed: u64,
    ) -> Result<Dataset> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if features.is_empty() {
            return Err(Error::InsufficientData("dataset is empty".into()));
        }
        let (train, test) = split_indices(features.len(), split_fraction, seed)?;
        Ok(Dataset {
            features,
            labels,
            train,
            test,
        })
    }

    /// Rescale every sample to unit ℓ₂ norm (zero rows are left untouched).
    pub fn normalized(mut self) -> Dataset {
        for row in self.features.iter_mut() {
            let n = crate::linalg::norm(row);
            if n > 0.0 {
                for v in row.iter_mut() {
                    *v /= n;
                }
            }
        }
        self
    }
}

fn split_indices(n: usize, split_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&split_fraction) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must be in [0, 1], got {split_fraction}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = seeded_rng(seed);
    indices.shuffle(&mut rng);
    let n_train = (split_fraction * n as f64).round() as usize;
    let test = indices.split_off(n_train);
    Ok((indices, test))
}

fn map_labels(labels: &mut [f64], mapping: LabelMapping) -> Result<()> {
    match mapping {
        LabelMapping::Raw => Ok(()),
        LabelMapping::Binary => {
            for (i, l) in labels.iter_mut().enumerate() {
                *l = match *l {
                    v if v == 1.0 || v == -1.0 => v,
                    0.0 => -1.0,
                    v => {
                        return Err(Error::Parse {
                            line: i + 1,
                            message: format!(
                                "non-binary label {v}; supply a label mapping (e.g. parity)"
                            ),
                        })
                    }
                };
            }
            Ok(())
        }
        LabelMapping::Parity => {
            for (i, l) in labels.iter_mut().enumerate() {
                let v = *l;
                if v.fract() != 0.0 {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("parity mapping needs integer labels, got {v}"),
                    });
                }
                *l = if (v as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            }
            Ok(())
        }
    }
}

/// Parse a file, map labels, and perform a seeded shuffled split.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    split_fraction: f64,
    seed: u64,
    mapping: LabelMapping,
) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let (features, mut labels) = match format {
        DatasetFormat::LibSvm => parse_libsvm(reader)?,
        DatasetFormat::DenseCsv => parse_dense_csv(reader)?,
    };
    map_labels(&mut labels, mapping)?;
    Dataset::from_parts(features, labels, split_fraction, seed)
}

fn parse_libsvm(reader: impl BufRead) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label: f64 = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno + 1,
                message: "label is not a number".into(),
            })?;
        let mut row = Vec::new();
        for tok in parts {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                message: format!("expected idx:val, got `{tok}`"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad feature index `{idx}`"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: "LIBSVM indices are 1-based".into(),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("bad feature value `{val}`"),
            })?;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(label);
        rows.push(row);
    }
    let features = rows
        .into_iter()
        .map(|row| {
            let mut dense = vec![0.0; max_index];
            for (i, v) in row {
                dense[i] = v;
            }
            dense
        })
        .collect();
    Ok((features, labels))
}

fn parse_dense_csv(reader: impl BufRead) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if lineno == 0 {
            // Header row.
            width = Some(line.split(',').count());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if Some(cells.len()) != width {
            return Err(Error::Parse {
                line: lineno + 1,
                message: format!(
                    "expected {} columns, got {}",
                    width.unwrap(),
                    cells.len()
                ),
            });
        }
        if cells.len() < 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                message: "need at least one feature column and a label column".into(),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("`{s}` is not a number"),
            })
        };
        let (feat, label) = cells.split_at(cells.len() - 1);
        features.push(feat.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?);
        labels.push(parse(label[0])?);
    }
    Ok((features, labels))
}
