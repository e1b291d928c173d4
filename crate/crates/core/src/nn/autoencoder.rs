//! Autoencoder baseline: ReLU encoder with `k` units, linear decoder back to
//! the input dimension, trained on mean squared reconstruction error.

use alloc::vec::Vec;

use super::adam::{AdamConfig, AdamState};
use super::layer::{Activation, DenseLayer, LayerGrads};
use super::EpochReport;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AeTrainConfig {
    pub embedding_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Stop once the epoch MSE improved by less than 1e-5 (relative) over the
    /// last 10 epochs.
    pub early_stop: bool,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 600,
            epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            seed: 0,
            early_stop: true,
        }
    }
}

const EARLY_STOP_WINDOW: usize = 10;
const EARLY_STOP_REL_IMPROVEMENT: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    pub encoder: DenseLayer,
    pub decoder: DenseLayer,
    pub training_log: Vec<f64>,
}

impl AutoencoderModel {
    pub fn input_dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        self.encoder.forward_batch(x)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decoder.forward_batch(&self.encode(x)?)
    }
}

/// Mean squared reconstruction error of `x` (averaged over rows and
/// columns) and its gradients for encoder and decoder.
pub fn reconstruction_loss_and_grad(
    encoder: &DenseLayer,
    decoder: &DenseLayer,
    x: &Matrix,
) -> Result<(f64, LayerGrads, LayerGrads)> {
    if decoder.input_dim() != encoder.output_dim() || decoder.output_dim() != encoder.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: encoder.output_dim(),
            actual: decoder.input_dim(),
        });
    }
    let enc_pre = encoder.preactivations(x)?;
    let mut hidden = enc_pre.clone();
    encoder.activate_in_place(&mut hidden);
    let out = decoder.preactivations(&hidden)?;

    let count = (x.rows() * x.cols()).max(1) as f64;
    let mut grad_out = out;
    let mut sse = 0.0;
    for (o, t) in grad_out.as_mut_slice().iter_mut().zip(x.as_slice()) {
        let r = *o - t;
        sse += r * r;
        *o = 2.0 * r / count;
    }
    let (dec_grads, grad_hidden) = decoder.backward(&hidden, &hidden, grad_out, true);
    let (enc_grads, _) = encoder.backward(x, &enc_pre, grad_hidden.expect("requested"), false);
    Ok((sse / count, enc_grads, dec_grads))
}

pub fn train_autoencoder(features: &Matrix, config: &AeTrainConfig) -> Result<AutoencoderModel> {
    train_autoencoder_with_progress(features, config, &mut |_| {})
}

pub fn train_autoencoder_with_progress(
    features: &Matrix,
    config: &AeTrainConfig,
    progress: &mut dyn FnMut(EpochReport),
) -> Result<AutoencoderModel> {
    let d = features.cols();
    let k = config.embedding_dim;
    if k == 0 || k > d {
        return Err(Error::InvalidDims(alloc::format!("autoencoder needs 1 <= k <= d, got k={k}, d={d}")));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be positive".into()));
    }
    if features.rows() == 0 || !features.is_finite() {
        return Err(Error::DegenerateData("features must be finite with n >= 1".into()));
    }
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    adam.validate()?;

    let mut init_rng = rng::seeded(rng::derive_seed(config.seed, &[0]));
    let mut shuffle_rng = rng::seeded(rng::derive_seed(config.seed, &[2]));
    let mut encoder = DenseLayer::he_uniform(d, k, Activation::Relu, &mut init_rng);
    let mut decoder = DenseLayer::glorot_uniform(k, d, Activation::Linear, &mut init_rng);
    let mut opts = [
        AdamState::new(adam, d * k),
        AdamState::new(adam, k),
        AdamState::new(adam, d * k),
        AdamState::new(adam, d),
    ];

    let mut order: Vec<usize> = (0..features.rows()).collect();
    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        rng::shuffle(&mut shuffle_rng, &mut order);
        let mut sse = 0.0;
        for batch in order.chunks(config.batch_size) {
            let x = features.select_rows(batch);
            let (mse, ge, gd) = reconstruction_loss_and_grad(&encoder, &decoder, &x)?;
            sse += mse * batch.len() as f64;
            let [ow, ob, dw, db] = &mut opts;
            let (w, b) = encoder.params_mut();
            ow.step(w, ge.weights.as_slice())?;
            ob.step(b, &ge.biases)?;
            let (w, b) = decoder.params_mut();
            dw.step(w, gd.weights.as_slice())?;
            db.step(b, &gd.biases)?;
        }
        let loss = sse / features.rows() as f64;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        log.push(loss);
        progress(EpochReport {
            epoch,
            total_epochs: config.epochs,
            loss,
        });
        if config.early_stop && log.len() > EARLY_STOP_WINDOW {
            let before = log[log.len() - 1 - EARLY_STOP_WINDOW];
            if before - loss <= EARLY_STOP_REL_IMPROVEMENT * before {
                break;
            }
        }
    }
    Ok(AutoencoderModel {
        encoder,
        decoder,
        training_log: log,
    })
}
