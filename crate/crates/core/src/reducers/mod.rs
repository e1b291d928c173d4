//! Common fit/transform surface over the four dimensionality reducers.

mod pca;
mod projection;

pub use pca::{fit_pca, PcaModel};
pub use projection::{fit_random_projection, RpModel};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{train_autoencoder, train_tnn, AeTrainConfig, AutoencoderModel, EmbeddingModel, TnnTrainConfig};
use crate::triplets::MiningConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ReducerKind {
    Tnn,
    Pca,
    Rp,
    Ae,
}

impl ReducerKind {
    pub fn label(self) -> &'static str {
        match self {
            ReducerKind::Tnn => "TNN",
            ReducerKind::Pca => "PCA",
            ReducerKind::Rp => "RP",
            ReducerKind::Ae => "AE",
        }
    }
}

/// How to build a reducer; carries every hyperparameter needed by `fit`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum ReducerSpec {
    Tnn {
        mining: MiningConfig,
        train: TnnTrainConfig,
    },
    Pca {
        dims: usize,
    },
    Rp {
        dims: usize,
        seed: u64,
    },
    Ae {
        train: AeTrainConfig,
    },
}

impl ReducerSpec {
    pub fn kind(&self) -> ReducerKind {
        match self {
            ReducerSpec::Tnn { .. } => ReducerKind::Tnn,
            ReducerSpec::Pca { .. } => ReducerKind::Pca,
            ReducerSpec::Rp { .. } => ReducerKind::Rp,
            ReducerSpec::Ae { .. } => ReducerKind::Ae,
        }
    }

    pub fn target_dim(&self) -> usize {
        match self {
            ReducerSpec::Tnn { train, .. } => train.embedding_dim,
            ReducerSpec::Pca { dims } | ReducerSpec::Rp { dims, .. } => *dims,
            ReducerSpec::Ae { train } => train.embedding_dim,
        }
    }

    /// Replaces the training seed of the learned reducers. Random projection
    /// keeps its own seed.
    pub fn with_training_seed(&self, seed: u64) -> ReducerSpec {
        let mut spec = self.clone();
        match &mut spec {
            ReducerSpec::Tnn { train, .. } => train.seed = seed,
            ReducerSpec::Ae { train } => train.seed = seed,
            ReducerSpec::Pca { .. } | ReducerSpec::Rp { .. } => {}
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedReducer {
    Tnn(EmbeddingModel),
    Pca(PcaModel),
    Rp(RpModel),
    Ae(AutoencoderModel),
}

impl FittedReducer {
    pub fn kind(&self) -> ReducerKind {
        match self {
            FittedReducer::Tnn(_) => ReducerKind::Tnn,
            FittedReducer::Pca(_) => ReducerKind::Pca,
            FittedReducer::Rp(_) => ReducerKind::Rp,
            FittedReducer::Ae(_) => ReducerKind::Ae,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            FittedReducer::Tnn(m) => m.input_dim(),
            FittedReducer::Pca(m) => m.input_dim(),
            FittedReducer::Rp(m) => m.input_dim(),
            FittedReducer::Ae(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FittedReducer::Tnn(m) => m.output_dim(),
            FittedReducer::Pca(m) => m.output_dim(),
            FittedReducer::Rp(m) => m.output_dim(),
            FittedReducer::Ae(m) => m.output_dim(),
        }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        match self {
            FittedReducer::Tnn(m) => m.embed(x),
            FittedReducer::Pca(m) => m.transform(x),
            FittedReducer::Rp(m) => m.transform(x),
            FittedReducer::Ae(m) => m.encode(x),
        }
    }
}

/// A reducer spec together with its fitted state, once `fit` has run.
#[derive(Debug, Clone, PartialEq)]
pub struct Reducer {
    spec: Option<ReducerSpec>,
    fitted: Option<FittedReducer>,
}

impl Reducer {
    pub fn new(spec: ReducerSpec) -> Self {
        Self {
            spec: Some(spec),
            fitted: None,
        }
    }

    /// Wraps an already fitted model (e.g. one loaded from disk).
    pub fn from_fitted(fitted: FittedReducer) -> Self {
        Self {
            spec: None,
            fitted: Some(fitted),
        }
    }

    pub fn kind(&self) -> ReducerKind {
        match (&self.fitted, &self.spec) {
            (Some(f), _) => f.kind(),
            (None, Some(s)) => s.kind(),
            (None, None) => unreachable!("constructors set one of the two"),
        }
    }

    pub fn target_dim(&self) -> usize {
        match (&self.fitted, &self.spec) {
            (Some(f), _) => f.output_dim(),
            (None, Some(s)) => s.target_dim(),
            (None, None) => unreachable!("constructors set one of the two"),
        }
    }

    pub fn fitted(&self) -> Option<&FittedReducer> {
        self.fitted.as_ref()
    }

    /// Fits on `x`. `labels` are required by the triplet network only.
    pub fn fit(&mut self, x: &Matrix, labels: Option<&[f64]>) -> Result<&FittedReducer> {
        let spec = self
            .spec
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("reducer has no spec to fit from".into()))?;
        let k = spec.target_dim();
        if k == 0 || k > x.cols() {
            return Err(Error::InvalidDims(alloc::format!(
                "reducer output dim {k} must be in 1..={}",
                x.cols()
            )));
        }
        let fitted = match spec {
            ReducerSpec::Tnn { mining, train } => {
                let labels = labels.ok_or_else(|| {
                    Error::InvalidConfig("triplet network needs training labels".into())
                })?;
                FittedReducer::Tnn(train_tnn(x, labels, mining, train)?)
            }
            ReducerSpec::Pca { dims } => FittedReducer::Pca(fit_pca(x, *dims)?),
            ReducerSpec::Rp { dims, seed } => FittedReducer::Rp(fit_random_projection(x.cols(), *dims, *seed)?),
            ReducerSpec::Ae { train } => FittedReducer::Ae(train_autoencoder(x, train)?),
        };
        Ok(self.fitted.insert(fitted))
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.fitted.as_ref().ok_or(Error::NotFitted)?.transform(x)
    }
}
