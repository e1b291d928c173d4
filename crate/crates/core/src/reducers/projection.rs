//! Dense Gaussian random projection.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RpModel {
    /// k×d with i.i.d. N(0, 1/k) entries.
    pub projection: Matrix,
    pub seed: u64,
}

/// Draws a k×d projection with entries N(0, 1/k), so that squared norms are
/// preserved in expectation. Fully determined by `(d, k, seed)`.
pub fn fit_random_projection(d: usize, k: usize, seed: u64) -> Result<RpModel> {
    if k == 0 || k > d {
        return Err(Error::InvalidDims(alloc::format!(
            "random projection needs 1 <= k <= d, got k={k}, d={d}"
        )));
    }
    let mut r = rng::seeded(seed);
    let scale = 1.0 / libm::sqrt(k as f64);
    let data = (0..k * d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            z * scale
        })
        .collect();
    Ok(RpModel {
        projection: Matrix::from_vec(k, d, data)?,
        seed,
    })
}

impl RpModel {
    pub fn input_dim(&self) -> usize {
        self.projection.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.rows()
    }

    /// `X·Pᵀ`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        x.matmul_transposed(&self.projection)
    }
}
