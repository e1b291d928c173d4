//! Thin singular value decomposition for tall matrices.
//!
//! The matrix is first reduced to a square upper-triangular factor with
//! Householder QR, and the factor is diagonalized with one-sided (Hestenes)
//! Jacobi rotations. Jacobi keeps small singular values accurate relative
//! to their size, and the QR step shrinks the working set from m×c to c×c.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 80;

/// `A = U·diag(s)·Vᵀ` with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// m×c left singular vectors (columns). Columns belonging to zero
    /// singular values are zero. Only present when requested.
    pub u: Option<Matrix>,
    pub singular_values: Vec<f64>,
    /// c×c orthogonal matrix whose columns are the right singular vectors.
    pub v: Matrix,
}

/// Column-major working buffer.
struct Cols {
    m: usize,
    data: Vec<f64>,
}

impl Cols {
    fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let m = self.m;
        let (lo, hi) = self.data.split_at_mut(q * m);
        (&mut lo[p * m..(p + 1) * m], &mut hi[..m])
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * i + l] * b[4 * i + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn rotate(x: &mut [f64], y: &mut [f64], c: f64, s: f64) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Householder reflector stored as a unit vector acting on rows `start..`.
struct Reflector {
    start: usize,
    v: Vec<f64>,
}

impl Reflector {
    fn apply(&self, col: &mut [f64]) {
        let tail = &mut col[self.start..];
        let proj = 2.0 * dot(&self.v, tail);
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= proj * v;
        }
    }
}

fn householder_qr(a: &Matrix) -> (Vec<Reflector>, Cols) {
    let (m, c) = (a.rows(), a.cols());
    let mut work = Cols {
        m,
        data: a.transpose().into_vec(),
    };
    let mut reflectors = Vec::with_capacity(c);
    for j in 0..c {
        let x = &work.col(j)[j..];
        let norm = libm::sqrt(dot(x, x));
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = x.to_vec();
        v[0] -= alpha;
        let vnorm = libm::sqrt(dot(&v, &v));
        if vnorm == 0.0 {
            continue;
        }
        for e in &mut v {
            *e /= vnorm;
        }
        let r = Reflector { start: j, v };
        for col in j..c {
            r.apply(&mut work.data[col * m..(col + 1) * m]);
        }
        reflectors.push(r);
    }
    // keep only the c×c upper triangle
    let mut r = Cols {
        m: c,
        data: alloc::vec![0.0; c * c],
    };
    for j in 0..c {
        for i in 0..=j.min(m.saturating_sub(1)) {
            r.data[j * c + i] = work.data[j * m + i];
        }
    }
    (reflectors, r)
}

/// Thin SVD of an m×c matrix with `m >= c`.
pub fn svd_tall(a: &Matrix, want_u: bool) -> Result<ThinSvd> {
    let (m, c) = (a.rows(), a.cols());
    if m < c {
        return Err(Error::InvalidDims(alloc::format!(
            "svd_tall needs rows >= cols, got {m}x{c}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::DegenerateData("matrix has non-finite entries".into()));
    }
    let (reflectors, mut b) = householder_qr(a);
    let mut v = Cols {
        m: c,
        data: Matrix::identity(c).into_vec(),
    };

    let tol = f64::EPSILON * (c.max(1) as f64);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let (bp, bq) = (b.col(p), b.col(q));
                let alpha = dot(bp, bp);
                let beta = dot(bq, bq);
                let gamma = dot(bp, bq);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let cs = 1.0 / libm::sqrt(1.0 + t * t);
                let sn = cs * t;
                let (x, y) = b.two_cols_mut(p, q);
                rotate(x, y, cs, sn);
                let (x, y) = v.two_cols_mut(p, q);
                rotate(x, y, cs, sn);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..c).map(|j| libm::sqrt(dot(b.col(j), b.col(j)))).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut v_sorted = Matrix::zeros(c, c);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..c {
            v_sorted[(i, dst)] = v.col(src)[i];
        }
    }

    let u = want_u.then(|| {
        let mut u = Cols {
            m,
            data: alloc::vec![0.0; m * c],
        };
        for (dst, &src) in order.iter().enumerate() {
            let s = norms[src];
            if s > 0.0 {
                for i in 0..c {
                    u.data[dst * m + i] = b.col(src)[i] / s;
                }
            }
        }
        for r in reflectors.iter().rev() {
            for j in 0..c {
                r.apply(&mut u.data[j * m..(j + 1) * m]);
            }
        }
        Matrix::from_vec(c, m, u.data).expect("shape").transpose()
    });

    Ok(ThinSvd {
        u,
        singular_values,
        v: v_sorted,
    })
}

/// Extends a set of orthonormal rows (`basis`, r×d) to `target` rows using
/// Gram-Schmidt on the standard basis vectors.
pub fn complete_orthonormal_rows(basis: &mut Vec<Vec<f64>>, d: usize, target: usize) {
    let mut e = 0;
    while basis.len() < target && e < d {
        let mut cand = alloc::vec![0.0; d];
        cand[e] = 1.0;
        e += 1;
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for b in basis.iter() {
                let p = dot(&cand, b);
                for (c, bv) in cand.iter_mut().zip(b) {
                    *c -= p * bv;
                }
            }
        }
        let norm = libm::sqrt(dot(&cand, &cand));
        if norm > 1e-8 {
            for c in &mut cand {
                *c /= norm;
            }
            basis.push(cand);
        }
    }
}
