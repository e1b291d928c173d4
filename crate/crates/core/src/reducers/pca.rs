//! Principal component analysis via SVD of the centered data.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{complete_orthonormal_rows, svd_tall};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k×d, orthonormal rows in decreasing order of explained variance.
    pub components: Matrix,
    /// Sample variance (n−1 denominator) along each component.
    pub explained_variance: Vec<f64>,
}

/// Fits the top `k` principal directions of `x`.
///
/// Each component is sign-fixed so that its largest-magnitude entry is
/// positive. When `k` exceeds the rank of the centered data the trailing
/// components carry (numerically) zero variance and complete the basis
/// orthonormally.
pub fn fit_pca(x: &Matrix, k: usize) -> Result<PcaModel> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::DegenerateData("PCA needs at least two samples".into()));
    }
    if k == 0 || k > d || k > n - 1 {
        return Err(Error::InvalidDims(alloc::format!(
            "PCA needs 1 <= k <= min(n-1, d), got k={k}, n={n}, d={d}"
        )));
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }

    let (directions, singular_values) = if n >= d {
        let svd = svd_tall(&centered, false)?;
        let dirs: Vec<Vec<f64>> = (0..k).map(|l| (0..d).map(|j| svd.v[(j, l)]).collect()).collect();
        (dirs, svd.singular_values)
    } else {
        // right singular vectors of X are the left singular vectors of Xᵀ
        let svd = svd_tall(&centered.transpose(), true)?;
        let u = svd.u.expect("requested");
        let s0 = svd.singular_values.first().copied().unwrap_or(0.0);
        let cutoff = s0 * 1e-13 * d as f64;
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(k);
        for l in 0..k {
            if svd.singular_values[l] <= cutoff {
                break;
            }
            dirs.push((0..d).map(|j| u[(j, l)]).collect());
        }
        complete_orthonormal_rows(&mut dirs, d, k);
        (dirs, svd.singular_values)
    };

    let mut components = Matrix::zeros(k, d);
    for (l, mut dir) in directions.into_iter().enumerate() {
        let pivot = dir
            .iter()
            .enumerate()
            .fold(0, |best, (j, v)| if v.abs() > dir[best].abs() { j } else { best });
        if dir[pivot] < 0.0 {
            for v in &mut dir {
                *v = -*v;
            }
        }
        components.row_mut(l).copy_from_slice(&dir);
    }
    let explained_variance = (0..k)
        .map(|l| {
            let s = singular_values.get(l).copied().unwrap_or(0.0);
            s * s / (n - 1) as f64
        })
        .collect();
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.components.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.components.rows()
    }

    fn centered(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.cols(),
            });
        }
        let mut c = x.clone();
        for i in 0..c.rows() {
            for (v, m) in c.row_mut(i).iter_mut().zip(&self.mean) {
                *v -= m;
            }
        }
        Ok(c)
    }

    /// `(X − mean)·componentsᵀ`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.centered(x)?.matmul_transposed(&self.components)
    }

    /// Maps scores back to the input space: `Z·components + mean`.
    pub fn reconstruct(&self, z: &Matrix) -> Result<Matrix> {
        let mut out = z.matmul(&self.components)?;
        for i in 0..out.rows() {
            for (v, m) in out.row_mut(i).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(out)
    }
}
