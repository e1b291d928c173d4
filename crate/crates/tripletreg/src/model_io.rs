//! Versioned JSON model documents.
//!
//! One format covers every fitted model (reducers and regressors). Weights
//! are stored as row-major arrays; floats are written in shortest
//! round-trip form and parsed exactly, so save → load is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tripletreg_core::nn::{Activation, AutoencoderModel, DenseLayer, EmbeddingModel};
use tripletreg_core::reducers::{FittedReducer, PcaModel, RpModel};
use tripletreg_core::regressors::{GbmModel, RegressionTree, Regressor, SvrModel};
use tripletreg_core::{Matrix, Standardizer, Target};

use crate::error::{Error, Result};

pub const FORMAT: &str = "tripletreg-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&Matrix> for MatrixDoc {
    fn from(m: &Matrix) -> Self {
        MatrixDoc {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().to_vec(),
        }
    }
}

impl TryFrom<MatrixDoc> for Matrix {
    type Error = Error;

    fn try_from(doc: MatrixDoc) -> Result<Matrix> {
        Ok(Matrix::from_vec(doc.rows, doc.cols, doc.data)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationTag {
    Relu,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: ActivationTag,
    /// output_dim × input_dim, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl From<&DenseLayer> for LayerDoc {
    fn from(l: &DenseLayer) -> Self {
        LayerDoc {
            input_dim: l.input_dim(),
            output_dim: l.output_dim(),
            activation: match l.activation() {
                Activation::Relu => ActivationTag::Relu,
                Activation::Linear => ActivationTag::Linear,
            },
            weights: l.weights().as_slice().to_vec(),
            biases: l.biases().to_vec(),
        }
    }
}

impl TryFrom<LayerDoc> for DenseLayer {
    type Error = Error;

    fn try_from(doc: LayerDoc) -> Result<DenseLayer> {
        let activation = match doc.activation {
            ActivationTag::Relu => Activation::Relu,
            ActivationTag::Linear => Activation::Linear,
        };
        let weights = Matrix::from_vec(doc.output_dim, doc.input_dim, doc.weights)?;
        Ok(DenseLayer::new(weights, doc.biases, activation)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelBody {
    Tnn {
        layer: LayerDoc,
        training_log: Vec<f64>,
    },
    Ae {
        encoder: LayerDoc,
        decoder: LayerDoc,
        training_log: Vec<f64>,
    },
    Pca {
        mean: Vec<f64>,
        components: MatrixDoc,
        explained_variance: Vec<f64>,
    },
    Rp {
        projection: MatrixDoc,
        seed: u64,
    },
    Svr {
        support_vectors: MatrixDoc,
        dual_coefficients: Vec<f64>,
        bias: f64,
        gamma: f64,
        converged: bool,
        iterations: usize,
    },
    Gbm {
        base_prediction: f64,
        learning_rate: f64,
        input_dim: usize,
        trees: Vec<RegressionTree>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    /// Feature scaling fitted alongside the model; applied before it when
    /// present.
    #[serde(default)]
    pub standardizer: Option<Standardizer>,
    /// Label dimension the model was trained against, if any.
    #[serde(default)]
    pub target: Option<Target>,
    pub model: ModelBody,
}

/// A loaded model ready for use.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Reducer(FittedReducer),
    Regressor(Regressor),
}

impl ModelDocument {
    pub fn new(model: ModelBody) -> Self {
        ModelDocument {
            format: FORMAT.into(),
            version: VERSION,
            standardizer: None,
            target: None,
            model,
        }
    }

    pub fn with_standardizer(mut self, s: Standardizer) -> Self {
        self.standardizer = Some(s);
        self
    }

    pub fn with_target(mut self, t: Target) -> Self {
        self.target = Some(t);
        self
    }

    pub fn kind(&self) -> &'static str {
        match self.model {
            ModelBody::Tnn { .. } => "tnn",
            ModelBody::Ae { .. } => "ae",
            ModelBody::Pca { .. } => "pca",
            ModelBody::Rp { .. } => "rp",
            ModelBody::Svr { .. } => "svr",
            ModelBody::Gbm { .. } => "gbm",
        }
    }

    pub fn from_reducer(r: &FittedReducer) -> Self {
        Self::new(match r {
            FittedReducer::Tnn(m) => ModelBody::Tnn {
                layer: (&m.layer).into(),
                training_log: m.training_log.clone(),
            },
            FittedReducer::Ae(m) => ModelBody::Ae {
                encoder: (&m.encoder).into(),
                decoder: (&m.decoder).into(),
                training_log: m.training_log.clone(),
            },
            FittedReducer::Pca(m) => ModelBody::Pca {
                mean: m.mean.clone(),
                components: (&m.components).into(),
                explained_variance: m.explained_variance.clone(),
            },
            FittedReducer::Rp(m) => ModelBody::Rp {
                projection: (&m.projection).into(),
                seed: m.seed,
            },
        })
    }

    pub fn from_regressor(r: &Regressor) -> Self {
        Self::new(match r {
            Regressor::Svr(m) => ModelBody::Svr {
                support_vectors: (&m.support_vectors).into(),
                dual_coefficients: m.dual_coefficients.clone(),
                bias: m.bias,
                gamma: m.gamma,
                converged: m.converged,
                iterations: m.iterations,
            },
            Regressor::Gbm(m) => ModelBody::Gbm {
                base_prediction: m.base_prediction,
                learning_rate: m.learning_rate,
                input_dim: m.input_dim,
                trees: m.trees.clone(),
            },
        })
    }

    pub fn to_model(&self) -> Result<LoadedModel> {
        let bad = |what: &str| Error::Config(format!("model document: {what}"));
        Ok(match self.model.clone() {
            ModelBody::Tnn { layer, training_log } => LoadedModel::Reducer(FittedReducer::Tnn(EmbeddingModel {
                layer: layer.try_into()?,
                training_log,
            })),
            ModelBody::Ae {
                encoder,
                decoder,
                training_log,
            } => {
                let encoder: DenseLayer = encoder.try_into()?;
                let decoder: DenseLayer = decoder.try_into()?;
                if decoder.input_dim() != encoder.output_dim() || decoder.output_dim() != encoder.input_dim() {
                    return Err(bad("encoder and decoder shapes disagree"));
                }
                LoadedModel::Reducer(FittedReducer::Ae(AutoencoderModel {
                    encoder,
                    decoder,
                    training_log,
                }))
            }
            ModelBody::Pca {
                mean,
                components,
                explained_variance,
            } => {
                let components: Matrix = components.try_into()?;
                if mean.len() != components.cols() || explained_variance.len() != components.rows() {
                    return Err(bad("PCA mean/variance lengths disagree with components"));
                }
                LoadedModel::Reducer(FittedReducer::Pca(PcaModel {
                    mean,
                    components,
                    explained_variance,
                }))
            }
            ModelBody::Rp { projection, seed } => LoadedModel::Reducer(FittedReducer::Rp(RpModel {
                projection: projection.try_into()?,
                seed,
            })),
            ModelBody::Svr {
                support_vectors,
                dual_coefficients,
                bias,
                gamma,
                converged,
                iterations,
            } => {
                let support_vectors: Matrix = support_vectors.try_into()?;
                if dual_coefficients.len() != support_vectors.rows() {
                    return Err(bad("SVR coefficient count disagrees with support vectors"));
                }
                LoadedModel::Regressor(Regressor::Svr(SvrModel {
                    support_vectors,
                    dual_coefficients,
                    bias,
                    gamma,
                    converged,
                    iterations,
                }))
            }
            ModelBody::Gbm {
                base_prediction,
                learning_rate,
                input_dim,
                trees,
            } => LoadedModel::Regressor(Regressor::Gbm(GbmModel {
                base_prediction,
                learning_rate,
                trees,
                input_dim,
            })),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model documents are plain data");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if doc.format != FORMAT {
            return Err(Error::Config(format!("{}: not a {FORMAT} document", path.display())));
        }
        if doc.version != VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported model document version {}",
                path.display(),
                doc.version
            )));
        }
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_text(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&crate::io::read_text(path)?, path)
    }

    /// Input dimension the document expects (before standardization).
    pub fn input_dim(&self) -> Result<usize> {
        Ok(match self.to_model()? {
            LoadedModel::Reducer(r) => r.input_dim(),
            LoadedModel::Regressor(r) => r.input_dim(),
        })
    }

    /// Standardizes `x` with the stored scaling (if any) and applies the
    /// model: embeddings for reducers, a single prediction column for
    /// regressors.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        let z = match &self.standardizer {
            Some(s) => s.apply(x)?,
            None => x.clone(),
        };
        match self.to_model()? {
            LoadedModel::Reducer(r) => Ok(r.transform(&z)?),
            LoadedModel::Regressor(r) => {
                let p = r.predict(&z)?;
                Ok(Matrix::from_vec(p.len(), 1, p)?)
            }
        }
    }
}
