//! Downstream regressors fitted on original or reduced features.

mod gbm;
mod svr;

pub use gbm::{best_split, fit_gbm, GbmConfig, GbmModel, RegressionTree, SplitCandidate, TreeNode};
pub use svr::{fit_svr, SvrConfig, SvrModel};

use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum RegressorSpec {
    Svr(SvrConfig),
    Gbm(GbmConfig),
}

impl RegressorSpec {
    pub fn label(&self) -> &'static str {
        match self {
            RegressorSpec::Svr(_) => "SVR",
            RegressorSpec::Gbm(_) => "GBM",
        }
    }

    pub fn fit(&self, x: &Matrix, y: &[f64], seed: u64) -> Result<Regressor> {
        match self {
            RegressorSpec::Svr(cfg) => fit_svr(x, y, cfg).map(Regressor::Svr),
            RegressorSpec::Gbm(cfg) => fit_gbm(x, y, &GbmConfig { seed, ..*cfg }).map(Regressor::Gbm),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regressor {
    Svr(SvrModel),
    Gbm(GbmModel),
}

impl Regressor {
    pub fn predict(&self, x: &Matrix) -> Result<alloc::vec::Vec<f64>> {
        match self {
            Regressor::Svr(m) => m.predict(x),
            Regressor::Gbm(m) => m.predict(x),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Regressor::Svr(m) => m.support_vectors.cols(),
            Regressor::Gbm(m) => m.input_dim,
        }
    }
}
