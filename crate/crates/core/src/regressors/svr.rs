//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved over 2n variables `(α, α*)` with a sequential minimal
//! optimization loop: each step picks the maximal violating variable and
//! pairs it with the partner giving the largest second-order decrease of
//! the objective, then solves the two-variable subproblem analytically.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::{squared_distance, Matrix};

const TAU: f64 = 1e-12;
/// Upper bound on memory held by cached kernel rows.
const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SvrConfig {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` means `1/d`.
    pub gamma: Option<f64>,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    /// Iteration budget, in units of 2n working-pair updates.
    pub max_passes: usize,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tolerance: 1e-3,
            max_passes: 200,
        }
    }
}

impl SvrConfig {
    fn validate(&self) -> Result<()> {
        let gamma_ok = self.gamma.is_none_or(|g| g.is_finite() && g > 0.0);
        if !(self.c.is_finite() && self.c > 0.0)
            || !(self.epsilon.is_finite() && self.epsilon >= 0.0)
            || !(self.tolerance.is_finite() && self.tolerance > 0.0)
            || !gamma_ok
            || self.max_passes == 0
        {
            return Err(Error::InvalidConfig(alloc::format!("invalid SVR settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub support_vectors: Matrix,
    /// `α_i − α*_i` for every support vector.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    /// False when the iteration budget ran out before the KKT tolerance was
    /// met; the model is then the last iterate.
    pub converged: bool,
    pub iterations: usize,
}

struct KernelRows<'a> {
    x: &'a Matrix,
    gamma: f64,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a Matrix, gamma: f64) -> Self {
        let n = x.rows();
        let capacity = (CACHE_BYTES / (8 * n.max(1))).clamp(2, n.max(2));
        Self {
            x,
            gamma,
            rows: alloc::vec![None; n],
            order: VecDeque::new(),
            capacity,
        }
    }

    fn ensure(&mut self, i: usize) {
        if self.rows[i].is_some() {
            return;
        }
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        let xi = self.x.row(i);
        let row = self
            .x
            .row_iter()
            .map(|xj| libm::exp(-self.gamma * squared_distance(xi, xj)))
            .collect();
        self.rows[i] = Some(row);
        self.order.push_back(i);
    }

    /// Rows `i` and `j`, computing them if needed.
    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i);
        self.ensure(j);
        if self.rows[i].is_none() {
            // evicted while fetching j (capacity 2 corner case)
            self.ensure(i);
        }
        (
            self.rows[i].as_deref().expect("cached"),
            self.rows[j].as_deref().expect("cached"),
        )
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.ensure(i);
        self.rows[i].as_deref().expect("cached")
    }
}

pub fn fit_svr(x: &Matrix, y: &[f64], config: &SvrConfig) -> Result<SvrModel> {
    config.validate()?;
    let n = x.rows();
    if n < 2 {
        return Err(Error::DegenerateData("SVR needs at least two samples".into()));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("SVR inputs must be finite".into()));
    }
    let gamma = config.gamma.unwrap_or(1.0 / x.cols().max(1) as f64);
    let c = config.c;
    let l = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let base = |t: usize| if t < n { t } else { t - n };

    let mut alpha = alloc::vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { config.epsilon - y[t] } else { config.epsilon + y[t - n] })
        .collect();
    let mut kernel = KernelRows::new(x, gamma);
    // RBF diagonal is 1
    let qd = 1.0;

    let max_iter = config.max_passes.saturating_mul(l);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // first variable: maximal violation over the "up" set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            if sign(t) > 0.0 {
                if alpha[t] < c && -grad[t] >= gmax {
                    gmax = -grad[t];
                    i_sel = Some(t);
                }
            } else if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                i_sel = Some(t);
            }
        }
        // second variable: best second-order decrease over the "low" set
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            let ki = kernel.row(base(i));
            for t in 0..l {
                let k_it = ki[base(t)];
                let grad_diff;
                if sign(t) > 0.0 {
                    if alpha[t] <= 0.0 {
                        continue;
                    }
                    gmax2 = gmax2.max(grad[t]);
                    grad_diff = gmax + grad[t];
                } else {
                    if alpha[t] >= c {
                        continue;
                    }
                    gmax2 = gmax2.max(-grad[t]);
                    grad_diff = gmax - grad[t];
                }
                if grad_diff > 0.0 {
                    let mut quad = 2.0 * qd - 2.0 * k_it;
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(grad_diff * grad_diff) / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gmax + gmax2 >= config.tolerance => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        iterations += 1;

        let (ki, kj) = kernel.pair(base(i), base(j));
        let k_ij = ki[base(j)];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (yi, yj) = (sign(i), sign(j));
        let mut quad = 2.0 * qd - 2.0 * k_ij;
        if quad <= 0.0 {
            quad = TAU;
        }
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            let yt = sign(t);
            let bt = base(t);
            grad[t] += yi * yt * ki[bt] * di + yj * yt * kj[bt] * dj;
        }
    }

    // offset from free variables, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if alpha[t] >= c {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };

    let mut sv_rows = Vec::new();
    let mut coefs = Vec::new();
    for i in 0..n {
        let coef = alpha[i] - alpha[i + n];
        if coef != 0.0 {
            sv_rows.push(i);
            coefs.push(coef);
        }
    }
    Ok(SvrModel {
        support_vectors: x.select_rows(&sv_rows),
        dual_coefficients: coefs,
        bias: -rho,
        gamma,
        converged,
        iterations,
    })
}

impl SvrModel {
    /// `ŷ(x) = Σ coef_i·exp(−γ‖sv_i − x‖²) + bias`.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        if self.support_vectors.rows() > 0 && x.cols() != self.support_vectors.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.support_vectors.cols(),
                actual: x.cols(),
            });
        }
        Ok(x.row_iter()
            .map(|q| {
                self.support_vectors
                    .row_iter()
                    .zip(&self.dual_coefficients)
                    .map(|(sv, a)| a * libm::exp(-self.gamma * squared_distance(sv, q)))
                    .sum::<f64>()
                    + self.bias
            })
            .collect())
    }
}
