//! Independent reference computations for the test suites.
//!
//! Everything here deliberately avoids the library's Cholesky path: solves go
//! through Gauss elimination with partial pivoting, and leave-one-out errors
//! are computed the expensive way, by refitting with each point removed.
//! Hidden from docs; not part of the supported API.

#![doc(hidden)]

use crate::kernels::{euclidean, gram_matrix, Kernel};

/// Gauss elimination with partial pivoting. Returns `None` on an exactly
/// zero pivot.
pub fn gauss_solve(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col] == 0.0 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.swap(col * n + j, piv * n + j);
            }
            x.swap(col, piv);
        }
        let d = m[col * n + col];
        for r in (col + 1)..n {
            let f = m[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m[r * n + j] -= f * m[col * n + j];
            }
            x[r] -= f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Some(x)
}

/// Leave-one-out errors by brute force: for each node, solve the reduced
/// interpolation system without it and compare the prediction at the removed
/// node with its value. A single node yields `e = [f_0]` (the empty
/// interpolant predicts zero).
pub fn brute_force_loocv(
    kernel: &Kernel,
    dim: usize,
    coords: &[f64],
    values: &[f64],
) -> Option<Vec<f64>> {
    let n = values.len();
    assert_eq!(coords.len(), n * dim);
    let mut errors = Vec::with_capacity(n);
    for leave in 0..n {
        if n == 1 {
            errors.push(values[0]);
            break;
        }
        let mut sub_coords = Vec::with_capacity((n - 1) * dim);
        let mut sub_values = Vec::with_capacity(n - 1);
        for i in 0..n {
            if i != leave {
                sub_coords.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                sub_values.push(values[i]);
            }
        }
        let gram = gram_matrix(kernel, dim, &sub_coords).ok()?;
        let c = gauss_solve(n - 1, &gram.inner.a, &sub_values)?;
        let x = &coords[leave * dim..(leave + 1) * dim];
        let predicted: f64 = sub_coords
            .chunks_exact(dim)
            .zip(&c)
            .map(|(p, ck)| ck * kernel.eval(euclidean(p, x)))
            .sum();
        errors.push(values[leave] - predicted);
    }
    Some(errors)
}

/// 1-norm condition number through an explicit inverse (Gauss-Jordan); used
/// to screen out comparisons where float agreement is not meaningful.
pub fn condition_1norm(n: usize, a: &[f64]) -> f64 {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if m[r * n + col].abs() > m[piv * n + col].abs() {
                piv = r;
            }
        }
        if m[piv * n + col] == 0.0 {
            return f64::INFINITY;
        }
        for j in 0..n {
            m.swap(col * n + j, piv * n + j);
            inv.swap(col * n + j, piv * n + j);
        }
        let d = m[col * n + col];
        for j in 0..n {
            m[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                m[r * n + j] -= f * m[col * n + j];
                inv[r * n + j] -= f * inv[col * n + j];
            }
        }
    }
    let col_norm = |mat: &[f64]| {
        (0..n)
            .map(|j| (0..n).map(|i| mat[i * n + j].abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    };
    col_norm(a) * col_norm(&inv)
}
