//! Triplet network training.
//!
//! The three branches (anchor, positive, negative) of the network are one
//! [`DenseLayer`]; there is a single parameter set. Training proceeds in
//! rounds: each round mines a fresh triplet set and then runs several epochs
//! of mini-batch Adam over it.

use alloc::vec::Vec;

use super::adam::{AdamConfig, AdamState};
use super::layer::{Activation, DenseLayer, LayerGrads};
use super::EpochReport;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::triplets::{accumulate_active_grad, hinge_argument, mine_triplets, MiningConfig, Triplet};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TnnTrainConfig {
    pub embedding_dim: usize,
    pub triplets_per_round: usize,
    pub epochs_per_round: usize,
    pub rounds: usize,
    pub batch_size: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TnnTrainConfig {
    fn default() -> Self {
        Self {
            embedding_dim: 600,
            triplets_per_round: 50_000,
            epochs_per_round: 10,
            rounds: 25,
            batch_size: 128,
            margin: 0.2,
            learning_rate: 1e-5,
            seed: 0,
        }
    }
}

impl TnnTrainConfig {
    pub fn total_epochs(&self) -> usize {
        self.epochs_per_round * self.rounds
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("embedding_dim", self.embedding_dim),
            ("triplets_per_round", self.triplets_per_round),
            ("epochs_per_round", self.epochs_per_round),
            ("rounds", self.rounds),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(alloc::format!("{name} must be positive")));
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(Error::InvalidConfig("margin must be finite and positive".into()));
        }
        AdamConfig::with_learning_rate(self.learning_rate).validate()
    }
}

/// A trained embedding network and its per-epoch mean triplet loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub layer: DenseLayer,
    pub training_log: Vec<f64>,
}

impl EmbeddingModel {
    pub fn input_dim(&self) -> usize {
        self.layer.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layer.output_dim()
    }

    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        self.layer.forward_batch(x)
    }
}

/// Seed used to mine the triplets of a given round.
pub fn round_seed(seed: u64, round: usize) -> u64 {
    rng::derive_seed(seed, &[1, round as u64])
}

/// Mean triplet loss over `triplets` (indices into the rows of `features`)
/// and its gradient with respect to the layer parameters.
///
/// Each distinct sample is pushed through the layer once; branch gradients
/// of repeated samples are summed before backpropagation.
pub fn triplet_batch_loss_and_grad(
    layer: &DenseLayer,
    features: &Matrix,
    triplets: &[Triplet],
    margin: f64,
) -> Result<(f64, LayerGrads)> {
    if triplets.is_empty() {
        return Err(Error::InvalidConfig("empty triplet batch".into()));
    }
    let n = features.rows();
    let mut unique: Vec<usize> = triplets
        .iter()
        .flat_map(|t| [t.anchor, t.positive, t.negative])
        .collect();
    unique.sort_unstable();
    unique.dedup();
    if let Some(&bad) = unique.last().filter(|&&i| i >= n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad + 1,
        });
    }
    let slot = |i: usize| unique.binary_search(&i).expect("index collected above");

    let x = features.select_rows(&unique);
    let pre = layer.preactivations(&x)?;
    let mut emb = pre.clone();
    layer.activate_in_place(&mut emb);

    let k = layer.output_dim();
    let scale = 1.0 / triplets.len() as f64;
    let mut grad_emb = Matrix::zeros(unique.len(), k);
    let mut total = 0.0;
    let (mut ga, mut gp, mut gn) = (alloc::vec![0.0; k], alloc::vec![0.0; k], alloc::vec![0.0; k]);
    for t in triplets {
        let (a, p, q) = (slot(t.anchor), slot(t.positive), slot(t.negative));
        let arg = hinge_argument(emb.row(a), emb.row(p), emb.row(q), margin);
        if arg > 0.0 {
            total += arg;
            ga.fill(0.0);
            gp.fill(0.0);
            gn.fill(0.0);
            accumulate_active_grad(emb.row(a), emb.row(p), emb.row(q), scale, &mut ga, &mut gp, &mut gn);
            for (row, g) in [(a, &ga), (p, &gp), (q, &gn)] {
                for (dst, v) in grad_emb.row_mut(row).iter_mut().zip(g.iter()) {
                    *dst += v;
                }
            }
        } else if arg.is_nan() {
            total = f64::NAN;
        }
    }
    let (grads, _) = layer.backward(&x, &pre, grad_emb, false);
    Ok((total * scale, grads))
}

pub fn train_tnn(
    features: &Matrix,
    labels: &[f64],
    mining: &MiningConfig,
    config: &TnnTrainConfig,
) -> Result<EmbeddingModel> {
    train_tnn_with_progress(features, labels, mining, config, &mut |_| {})
}

pub fn train_tnn_with_progress(
    features: &Matrix,
    labels: &[f64],
    mining: &MiningConfig,
    config: &TnnTrainConfig,
    progress: &mut dyn FnMut(EpochReport),
) -> Result<EmbeddingModel> {
    config.validate()?;
    mining.validate()?;
    if features.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            actual: labels.len(),
        });
    }
    if features.cols() == 0 || !features.is_finite() {
        return Err(Error::DegenerateData("features must be finite with d >= 1".into()));
    }

    let mut init_rng = rng::seeded(rng::derive_seed(config.seed, &[0]));
    let mut shuffle_rng = rng::seeded(rng::derive_seed(config.seed, &[2]));
    let mut layer = DenseLayer::he_uniform(features.cols(), config.embedding_dim, Activation::Relu, &mut init_rng);
    let adam = AdamConfig::with_learning_rate(config.learning_rate);
    let mut opt_w = AdamState::new(adam, layer.input_dim() * layer.output_dim());
    let mut opt_b = AdamState::new(adam, layer.output_dim());

    let total_epochs = config.total_epochs();
    let mut log = Vec::with_capacity(total_epochs);
    for round in 0..config.rounds {
        let mut triplets = mine_triplets(labels, config.triplets_per_round, mining, round_seed(config.seed, round))?;
        for _ in 0..config.epochs_per_round {
            let epoch = log.len();
            rng::shuffle(&mut shuffle_rng, &mut triplets);
            let mut loss_sum = 0.0;
            for batch in triplets.chunks(config.batch_size) {
                let (loss, grads) = triplet_batch_loss_and_grad(&layer, features, batch, config.margin)?;
                loss_sum += loss * batch.len() as f64;
                let (w, b) = layer.params_mut();
                opt_w.step(w, grads.weights.as_slice())?;
                opt_b.step(b, &grads.biases)?;
            }
            let epoch_loss = loss_sum / triplets.len() as f64;
            if !epoch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            log.push(epoch_loss);
            progress(EpochReport {
                epoch,
                total_epochs,
                loss: epoch_loss,
            });
        }
    }
    Ok(EmbeddingModel {
        layer,
        training_log: log,
    })
}
