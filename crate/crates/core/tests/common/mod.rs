//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng as _;
use tripletreg_core::nn::{reconstruction_loss_and_grad, triplet_batch_loss_and_grad, Activation, DenseLayer};
use tripletreg_core::regressors::SplitCandidate;
use tripletreg_core::triplets::{mine_triplets, triplet_loss, MiningConfig, Triplet, TripletLossConfig};
use tripletreg_core::{rng, Matrix};

pub fn random_matrix(n: usize, d: usize, seed: u64) -> Matrix {
    let mut r = rng::seeded(seed);
    Matrix::from_vec(n, d, (0..n * d).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Classical cyclic Jacobi on a symmetric matrix. Returns eigenvalues in
/// decreasing order and the matching unit eigenvectors (as rows).
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = order.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (vals, vecs)
}

/// Sample covariance (n−1) eigendecomposition: top-k variances and axes.
pub fn pca_oracle(x: &Matrix, k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let (n, d) = (x.rows(), x.cols());
    let mean: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..n {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (x[(i, a)] - mean[a]) * (x[(i, b)] - mean[b]);
            }
        }
    }
    for row in cov.iter_mut() {
        for c in row.iter_mut() {
            *c /= (n - 1) as f64;
        }
    }
    let (vals, vecs) = jacobi_eigen(cov);
    (vals[..k].to_vec(), vecs[..k].to_vec())
}

/// Frobenius norm of the part of `a`'s rows outside span(`b`'s rows); an
/// upper bound on the sine of the largest principal angle for orthonormal
/// inputs.
pub fn subspace_gap(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for ra in a {
        let mut resid = ra.clone();
        for rb in b {
            let p: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
            for (r, y) in resid.iter_mut().zip(rb) {
                *r -= p * y;
            }
        }
        total += resid.iter().map(|r| r * r).sum::<f64>();
    }
    total.sqrt()
}

fn sse(y: &[f64], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let m = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
    rows.iter().map(|&i| (y[i] - m) * (y[i] - m)).sum()
}

/// Tries every feature and every midpoint between consecutive distinct
/// values; keeps the largest SSE reduction, earliest (feature, threshold)
/// on ties.
pub fn brute_force_split(x: &Matrix, y: &[f64], rows: &[usize], min_leaf: usize) -> Option<SplitCandidate> {
    let mut rows = rows.to_vec();
    rows.sort_unstable();
    let parent = sse(y, &rows);
    let mut best: Option<SplitCandidate> = None;
    for f in 0..x.cols() {
        let mut values: Vec<f64> = rows.iter().map(|&i| x[(i, f)]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = w[0] + (w[1] - w[0]) / 2.0;
            let t = if t > w[0] && t <= w[1] { t } else { w[1] };
            let left: Vec<usize> = rows.iter().copied().filter(|&i| x[(i, f)] < t).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&i| x[(i, f)] >= t).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let red = parent - sse(y, &left) - sse(y, &right);
            if best.is_none_or(|b| red > b.sse_reduction) {
                best = Some(SplitCandidate { feature: f, threshold: t, sse_reduction: red, n_left: left.len() });
            }
        }
    }
    best
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn with_param(layer: &DenseLayer, idx: usize, delta: f64) -> DenseLayer {
    let mut w = layer.weights().clone();
    let mut b = layer.biases().to_vec();
    let nw = w.as_slice().len();
    if idx < nw {
        w.as_mut_slice()[idx] += delta;
    } else {
        b[idx - nw] += delta;
    }
    DenseLayer::new(w, b, layer.activation()).unwrap()
}

fn relu_pattern(layer: &DenseLayer, x: &Matrix) -> Vec<bool> {
    layer.forward_batch(x).unwrap().as_slice().iter().map(|v| *v > 0.0).collect()
}

/// Result of a finite-difference sweep: coordinates compared and the worst
/// relative error among them.
#[derive(Debug)]
pub struct GradCheck {
    pub checked: usize,
    pub skipped: usize,
    pub max_rel_err: f64,
}

const FD_STEP: f64 = 1e-5;

/// Triplet loss through a ReLU layer (d=20, k=5) over 200 random points.
pub fn triplet_network_grad_check(seed: u64, coords: usize) -> GradCheck {
    let (n, d, k) = (200, 20, 5);
    let x = random_matrix(n, d, seed);
    let mut r = rng::seeded(seed + 1);
    let labels: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let triplets = mine_triplets(&labels, 64, &MiningConfig::default(), seed).unwrap();
    let layer = DenseLayer::he_uniform(d, k, Activation::Relu, &mut r);
    let margin = 0.2;
    let (_, grads) = triplet_batch_loss_and_grad(&layer, &x, &triplets, margin).unwrap();
    let analytic: Vec<f64> = grads.weights.as_slice().iter().chain(&grads.biases).copied().collect();

    let cfg = TripletLossConfig::new(margin).unwrap();
    let hinge_pattern = |l: &DenseLayer| -> Vec<bool> {
        let e = l.forward_batch(&x).unwrap();
        triplets
            .iter()
            .map(|t: &Triplet| triplet_loss(e.row(t.anchor), e.row(t.positive), e.row(t.negative), &cfg).unwrap() > 0.0)
            .collect()
    };
    let loss = |l: &DenseLayer| triplet_batch_loss_and_grad(l, &x, &triplets, margin).unwrap().0;
    let base_relu = relu_pattern(&layer, &x);
    let base_hinge = hinge_pattern(&layer);

    let mut out = GradCheck { checked: 0, skipped: 0, max_rel_err: 0.0 };
    let total = analytic.len();
    let mut pick = rng::seeded(seed + 2);
    while out.checked < coords && out.checked + out.skipped < 20 * coords {
        let idx = pick.random_range(0..total);
        let (lp, lm) = (with_param(&layer, idx, FD_STEP), with_param(&layer, idx, -FD_STEP));
        // a kink between the two probes would make the difference meaningless
        if relu_pattern(&lp, &x) != base_relu
            || relu_pattern(&lm, &x) != base_relu
            || hinge_pattern(&lp) != base_hinge
            || hinge_pattern(&lm) != base_hinge
        {
            out.skipped += 1;
            continue;
        }
        let fd = (loss(&lp) - loss(&lm)) / (2.0 * FD_STEP);
        out.max_rel_err = out.max_rel_err.max(rel_err(analytic[idx], fd));
        out.checked += 1;
    }
    out
}

/// Autoencoder MSE (d=20, k=5) over 200 random points.
pub fn autoencoder_grad_check(seed: u64, coords: usize) -> GradCheck {
    let (n, d, k) = (200, 20, 5);
    let x = random_matrix(n, d, seed);
    let mut r = rng::seeded(seed + 1);
    let enc = DenseLayer::he_uniform(d, k, Activation::Relu, &mut r);
    let dec = DenseLayer::glorot_uniform(k, d, Activation::Linear, &mut r);
    let (_, ge, gd) = reconstruction_loss_and_grad(&enc, &dec, &x).unwrap();
    let enc_grad: Vec<f64> = ge.weights.as_slice().iter().chain(&ge.biases).copied().collect();
    let dec_grad: Vec<f64> = gd.weights.as_slice().iter().chain(&gd.biases).copied().collect();
    let base_relu = relu_pattern(&enc, &x);

    let mut out = GradCheck { checked: 0, skipped: 0, max_rel_err: 0.0 };
    let mut pick = rng::seeded(seed + 2);
    let total = enc_grad.len() + dec_grad.len();
    while out.checked < coords && out.checked + out.skipped < 20 * coords {
        let idx = pick.random_range(0..total);
        let (fd, analytic) = if idx < enc_grad.len() {
            let (ep, em) = (with_param(&enc, idx, FD_STEP), with_param(&enc, idx, -FD_STEP));
            if relu_pattern(&ep, &x) != base_relu || relu_pattern(&em, &x) != base_relu {
                out.skipped += 1;
                continue;
            }
            let lp = reconstruction_loss_and_grad(&ep, &dec, &x).unwrap().0;
            let lm = reconstruction_loss_and_grad(&em, &dec, &x).unwrap().0;
            ((lp - lm) / (2.0 * FD_STEP), enc_grad[idx])
        } else {
            let j = idx - enc_grad.len();
            let (dp, dm) = (with_param(&dec, j, FD_STEP), with_param(&dec, j, -FD_STEP));
            let lp = reconstruction_loss_and_grad(&enc, &dp, &x).unwrap().0;
            let lm = reconstruction_loss_and_grad(&enc, &dm, &x).unwrap().0;
            ((lp - lm) / (2.0 * FD_STEP), dec_grad[j])
        };
        out.max_rel_err = out.max_rel_err.max(rel_err(analytic, fd));
        out.checked += 1;
    }
    out
}
