use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
    Linear,
}

/// Fully connected layer `act(W·x + b)` with `W` stored k×d row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    biases: Vec<f64>,
    activation: Activation,
}

/// Gradients with the same shapes as a layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weights: Matrix, biases: Vec<f64>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.rows() {
            return Err(Error::DimensionMismatch {
                expected: weights.rows(),
                actual: biases.len(),
            });
        }
        if !weights.is_finite() || biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidConfig("layer parameters must be finite".into()));
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    fn uniform(input_dim: usize, output_dim: usize, limit: f64, activation: Activation, rng: &mut Rng) -> Self {
        let data = (0..input_dim * output_dim)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            weights: Matrix::from_vec(output_dim, input_dim, data).expect("shape"),
            biases: alloc::vec![0.0; output_dim],
            activation,
        }
    }

    /// He-uniform weights (`±√(6/d)`), zero biases.
    pub fn he_uniform(input_dim: usize, output_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let limit = libm::sqrt(6.0 / input_dim.max(1) as f64);
        Self::uniform(input_dim, output_dim, limit, activation, rng)
    }

    /// Glorot-uniform weights (`±√(6/(d+k))`), zero biases.
    pub fn glorot_uniform(input_dim: usize, output_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let limit = libm::sqrt(6.0 / (input_dim + output_dim).max(1) as f64);
        Self::uniform(input_dim, output_dim, limit, activation, rng)
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub(crate) fn params_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (self.weights.as_mut_slice(), &mut self.biases)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .weights
            .row_iter()
            .zip(&self.biases)
            .map(|(w, b)| self.activate(crate::matrix::dot(w, x) + b))
            .collect())
    }

    #[inline]
    fn activate(&self, z: f64) -> f64 {
        match self.activation {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// `X·Wᵀ + b` for every row of `x`.
    pub(crate) fn preactivations(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        let (n, d, k) = (x.rows(), self.input_dim(), self.output_dim());
        let mut z = Matrix::zeros(n, k);
        for i in 0..n {
            z.row_mut(i).copy_from_slice(&self.biases);
        }
        gemm(
            n,
            d,
            k,
            x.as_slice(),
            (d as isize, 1),
            self.weights.as_slice(),
            (1, d as isize),
            1.0,
            z.as_mut_slice(),
            (k as isize, 1),
        );
        Ok(z)
    }

    pub(crate) fn activate_in_place(&self, z: &mut Matrix) {
        if self.activation == Activation::Relu {
            for v in z.as_mut_slice() {
                *v = v.max(0.0);
            }
        }
    }

    /// Row-wise forward pass.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = self.preactivations(x)?;
        self.activate_in_place(&mut z);
        Ok(z)
    }

    /// Backpropagates `grad_out` (dL/d output, n×k) through the layer.
    ///
    /// `pre` are the preactivations produced from `x`. Returns parameter
    /// gradients and, when asked, dL/dx.
    pub(crate) fn backward(
        &self,
        x: &Matrix,
        pre: &Matrix,
        mut grad_out: Matrix,
        want_input_grad: bool,
    ) -> (LayerGrads, Option<Matrix>) {
        if self.activation == Activation::Relu {
            for (g, z) in grad_out.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                if *z <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        let (n, d, k) = (x.rows(), self.input_dim(), self.output_dim());
        let mut dw = Matrix::zeros(k, d);
        // dW = dZᵀ · X
        gemm(
            k,
            n,
            d,
            grad_out.as_slice(),
            (1, k as isize),
            x.as_slice(),
            (d as isize, 1),
            0.0,
            dw.as_mut_slice(),
            (d as isize, 1),
        );
        let mut db = alloc::vec![0.0; k];
        for row in grad_out.row_iter() {
            for (b, g) in db.iter_mut().zip(row) {
                *b += g;
            }
        }
        let dx = want_input_grad.then(|| {
            let mut dx = Matrix::zeros(n, d);
            // dX = dZ · W
            gemm(
                n,
                k,
                d,
                grad_out.as_slice(),
                (k as isize, 1),
                self.weights.as_slice(),
                (d as isize, 1),
                0.0,
                dx.as_mut_slice(),
                (d as isize, 1),
            );
            dx
        });
        (
            LayerGrads {
                weights: dw,
                biases: db,
            },
            dx,
        )
    }
}
