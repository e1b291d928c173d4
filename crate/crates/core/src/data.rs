//! In-memory datasets: feature tables, continuous annotations, feature
//! standardization and cross-validation folds.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Per-item feature vectors with their column names and item identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    song_ids: Vec<String>,
    columns: Vec<String>,
    values: Matrix,
}

impl FeatureMatrix {
    /// Validates and wraps a table. Rows must be finite, identifiers unique and
    /// the matrix at least 1×1.
    pub fn new(song_ids: Vec<String>, columns: Vec<String>, values: Matrix) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::DegenerateData(
                "feature table needs at least one row and one column".into(),
            ));
        }
        if song_ids.len() != values.rows() {
            return Err(Error::DimensionMismatch {
                expected: values.rows(),
                actual: song_ids.len(),
            });
        }
        if columns.len() != values.cols() {
            return Err(Error::DimensionMismatch {
                expected: values.cols(),
                actual: columns.len(),
            });
        }
        for (row, r) in values.row_iter().enumerate() {
            if let Some(column) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { row, column });
            }
        }
        let mut seen = BTreeSet::new();
        for id in &song_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DegenerateData(alloc::format!(
                    "duplicate song id {id:?}"
                )));
            }
        }
        Ok(Self {
            song_ids,
            columns,
            values,
        })
    }

    pub fn song_ids(&self) -> &[String] {
        &self.song_ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            song_ids: indices.iter().map(|&i| self.song_ids[i].clone()).collect(),
            columns: self.columns.clone(),
            values: self.values.select_rows(indices),
        }
    }

    /// Replaces the values, keeping identifiers and column names.
    pub fn with_values(&self, values: Matrix) -> Result<FeatureMatrix> {
        FeatureMatrix::new(self.song_ids.clone(), self.columns.clone(), values)
    }
}

/// Which annotation dimension a model is trained against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Target {
    Valence,
    Arousal,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Valence, Target::Arousal];

    pub fn name(self) -> &'static str {
        match self {
            Target::Valence => "valence",
            Target::Arousal => "arousal",
        }
    }
}

impl core::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valence" => Ok(Target::Valence),
            "arousal" => Ok(Target::Arousal),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown target {other:?}"
            ))),
        }
    }
}

/// Per-item valence and arousal labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationTable {
    pub song_ids: Vec<String>,
    pub valence: Vec<f64>,
    pub arousal: Vec<f64>,
    pub normalized: bool,
}

impl AnnotationTable {
    pub fn len(&self) -> usize {
        self.song_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.song_ids.is_empty()
    }

    pub fn target(&self, target: Target) -> &[f64] {
        match target {
            Target::Valence => &self.valence,
            Target::Arousal => &self.arousal,
        }
    }

    /// Reorders the table to follow `song_ids`. Every requested id must be
    /// present; ids only present in the table are dropped.
    pub fn aligned_to(&self, song_ids: &[String]) -> Result<AnnotationTable> {
        let index: alloc::collections::BTreeMap<&str, usize> = self
            .song_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let mut out = AnnotationTable {
            song_ids: Vec::with_capacity(song_ids.len()),
            valence: Vec::with_capacity(song_ids.len()),
            arousal: Vec::with_capacity(song_ids.len()),
            normalized: self.normalized,
        };
        for id in song_ids {
            let &i = index.get(id.as_str()).ok_or_else(|| {
                Error::DegenerateData(alloc::format!("no annotation for song id {id:?}"))
            })?;
            out.song_ids.push(id.clone());
            out.valence.push(self.valence[i]);
            out.arousal.push(self.arousal[i]);
        }
        Ok(out)
    }
}

/// Min-max maps one label dimension onto [-1, 1]; `name` labels the
/// `DegenerateRange` error.
pub fn normalize_values(values: &[f64], name: &'static str) -> Result<Vec<f64>> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() || hi <= lo {
        return Err(Error::DegenerateRange(name));
    }
    let span = hi - lo;
    Ok(values
        .iter()
        .map(|&v| {
            if v == lo {
                -1.0
            } else if v == hi {
                1.0
            } else {
                (2.0 * (v - lo) / span - 1.0).clamp(-1.0, 1.0)
            }
        })
        .collect())
}

/// Min-max maps each label dimension onto [-1, 1] (min → -1, max → +1).
///
/// Already-normalized tables are returned unchanged.
pub fn normalize_labels(table: &AnnotationTable) -> Result<AnnotationTable> {
    if table.normalized {
        return Ok(table.clone());
    }
    Ok(AnnotationTable {
        song_ids: table.song_ids.clone(),
        valence: normalize_values(&table.valence, "valence")?,
        arousal: normalize_values(&table.arousal, "arousal")?,
        normalized: true,
    })
}

/// Per-column z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Zero marks a constant column; it maps to all zeros.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Standardizer {
        let n = x.rows().max(1) as f64;
        let d = x.cols();
        let mut mean = alloc::vec![0.0; d];
        for row in x.row_iter() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = alloc::vec![0.0; d];
        for row in x.row_iter() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let c = v - m;
                *s += c * c;
            }
        }
        let std = var
            .into_iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = libm::sqrt(s / n);
                // columns whose spread is pure rounding noise count as constant
                if sd <= 1e-12 * m.abs().max(1.0) {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.cols(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if *s == 0.0 { 0.0 } else { (*v - m) / s };
            }
        }
        Ok(out)
    }
}

/// Z-scores `apply_to` with statistics computed on `train` only.
pub fn standardize_features(train: &FeatureMatrix, apply_to: &FeatureMatrix) -> Result<FeatureMatrix> {
    if train.columns() != apply_to.columns() {
        return Err(Error::ColumnMismatch);
    }
    let scaler = Standardizer::fit(train.values());
    apply_to.with_values(scaler.apply(apply_to.values())?)
}

/// Assignment of each sample to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn n_samples(&self) -> usize {
        self.assignment.len()
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffled k-fold split; fold sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidK { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::seeded(seed);
    rng::shuffle(&mut rng, &mut order);
    let mut assignment = alloc::vec![0; n];
    for (pos, &sample) in order.iter().enumerate() {
        assignment[sample] = pos % k;
    }
    Ok(FoldAssignment { k, assignment })
}
