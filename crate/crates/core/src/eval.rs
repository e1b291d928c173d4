//! R² scoring and k-fold evaluation of reducer + regressor pipelines.
//!
//! Every fold refits the whole pipeline (feature standardization, reducer,
//! regressor) on its training rows only, so nothing from the held-out rows
//! can reach the fitted models.

use alloc::string::String;
use alloc::vec::Vec;

use crate::data::{FoldAssignment, Standardizer};
use crate::error::{Error, Result};
use crate::matrix::{mean, population_std, Matrix};
use crate::reducers::{FittedReducer, Reducer, ReducerSpec};
use crate::regressors::{Regressor, RegressorSpec};
use crate::rng::derive_seed;

/// Coefficient of determination `1 − SSE/SST`. Can be negative.
pub fn r2_score(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::DegenerateTarget);
    }
    let m = mean(y_true);
    let sst: f64 = y_true.iter().map(|y| (y - m) * (y - m)).sum();
    if sst == 0.0 {
        return Err(Error::DegenerateTarget);
    }
    let sse: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(1.0 - sse / sst)
}

/// One grid cell: an optional reducer followed by a regressor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellSpec {
    pub reducer: Option<ReducerSpec>,
    pub regressor: RegressorSpec,
}

impl CellSpec {
    /// Row label such as `TNN-SVR (600 features)` or `GBM (all features)`.
    pub fn label(&self) -> String {
        match &self.reducer {
            Some(r) => alloc::format!("{}-{} ({} features)", r.kind().label(), self.regressor.label(), r.target_dim()),
            None => alloc::format!("{} (all features)", self.regressor.label()),
        }
    }
}

/// Seed for the models of one (cell, fold) job.
pub fn job_seed(seed: u64, cell: usize, fold: usize) -> u64 {
    derive_seed(seed, &[cell as u64, fold as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub standardizer: Standardizer,
    pub reducer: Option<FittedReducer>,
    pub regressor: Regressor,
}

impl FittedPipeline {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        let z = self.standardizer.apply(x)?;
        let z = match &self.reducer {
            Some(r) => r.transform(&z)?,
            None => z,
        };
        self.regressor.predict(&z)
    }
}

/// Fits standardizer, reducer and regressor on `x`/`y`. Learned reducers
/// and the regressor are seeded with `seed`; random projection keeps the
/// seed from its spec.
pub fn fit_pipeline(cell: &CellSpec, x: &Matrix, y: &[f64], seed: u64) -> Result<FittedPipeline> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let standardizer = Standardizer::fit(x);
    let z = standardizer.apply(x)?;
    let (reducer, z) = match &cell.reducer {
        Some(spec) => {
            let mut r = Reducer::new(spec.with_training_seed(seed));
            let fitted = r.fit(&z, Some(y))?.clone();
            let reduced = fitted.transform(&z)?;
            (Some(fitted), reduced)
        }
        None => (None, z),
    };
    let regressor = cell.regressor.fit(&z, y, seed)?;
    Ok(FittedPipeline {
        standardizer,
        reducer,
        regressor,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub test_indices: Vec<usize>,
    pub predictions: Vec<f64>,
    /// `None` when the held-out targets have fewer than two rows or no
    /// spread, which leaves R² undefined.
    pub r2: Option<f64>,
}

/// Fits on every row outside `fold` and predicts the rows inside it.
pub fn run_fold(
    cell: &CellSpec,
    x: &Matrix,
    y: &[f64],
    folds: &FoldAssignment,
    fold: usize,
    seed: u64,
) -> Result<(FittedPipeline, FoldOutcome)> {
    if folds.n_samples() != x.rows() || y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: folds.n_samples().min(y.len()),
        });
    }
    let train = folds.train_indices(fold);
    let test = folds.test_indices(fold);
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();
    let pipeline = fit_pipeline(cell, &x.select_rows(&train), &y_train, seed)?;
    let predictions = pipeline.predict(&x.select_rows(&test))?;
    let r2 = match r2_score(&y_test, &predictions) {
        Ok(v) => Some(v),
        Err(Error::DegenerateTarget) => None,
        Err(e) => return Err(e),
    };
    Ok((
        pipeline,
        FoldOutcome {
            test_indices: test,
            predictions,
            r2,
        },
    ))
}

/// The error of the first fold that failed in a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldFailure {
    pub fold: usize,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub folds: Vec<FoldOutcome>,
    /// Mean and population standard deviation of the defined fold R² values.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// R² of all out-of-fold predictions pooled together.
    pub pooled_r2: Option<f64>,
}

impl CellResult {
    pub fn from_folds(folds: Vec<FoldOutcome>, y: &[f64]) -> CellResult {
        let scores: Vec<f64> = folds.iter().filter_map(|f| f.r2).collect();
        let (mean_r2, std_r2) = if scores.is_empty() {
            (None, None)
        } else {
            (Some(mean(&scores)), Some(population_std(&scores)))
        };
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        for f in &folds {
            truth.extend(f.test_indices.iter().map(|&i| y[i]));
            pred.extend_from_slice(&f.predictions);
        }
        CellResult {
            pooled_r2: r2_score(&truth, &pred).ok(),
            folds,
            mean: mean_r2,
            std: std_r2,
        }
    }

    pub fn fold_r2(&self) -> Vec<Option<f64>> {
        self.folds.iter().map(|f| f.r2).collect()
    }
}

/// Runs every fold of one cell in order. Fold `f` uses
/// `job_seed(seed, cell_index, f)`.
pub fn cross_validate(
    cell: &CellSpec,
    x: &Matrix,
    y: &[f64],
    folds: &FoldAssignment,
    seed: u64,
    cell_index: usize,
) -> core::result::Result<CellResult, FoldFailure> {
    let mut outcomes = Vec::with_capacity(folds.k());
    for fold in 0..folds.k() {
        let (_, outcome) = run_fold(cell, x, y, folds, fold, job_seed(seed, cell_index, fold))
            .map_err(|error| FoldFailure { fold, error })?;
        outcomes.push(outcome);
    }
    Ok(CellResult::from_folds(outcomes, y))
}
