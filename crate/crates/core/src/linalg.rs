//! Dense symmetric solves for the local interpolation systems.
//!
//! Local systems are small (tens to a few hundred unknowns), so a plain
//! row-major `Vec<f64>` Cholesky is both simpler and faster than pulling in a
//! full linear-algebra stack. Failure is a value, not a panic: a pivot that is
//! not clearly positive marks the matrix as singular to working precision and
//! the caller decides what to do with the cell.

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub(crate) struct SquareMatrix {
    pub n: usize,
    pub a: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix { n, a: vec![0.0; n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

/// Relative pivot floor: pivots at or below `n * eps * max_diag` mean the
/// matrix is singular to working precision and the factorization is rejected.
fn pivot_floor(n: usize, max_diag: f64) -> f64 {
    (n as f64) * f64::EPSILON * max_diag
}

impl Cholesky {
    /// Factorizes `m = L Lᵀ`. Returns `None` when a pivot is non-positive,
    /// below the working-precision floor, or not finite.
    pub fn factor(m: &SquareMatrix) -> Option<Cholesky> {
        let n = m.n;
        let mut l = vec![0.0; n * n];
        let mut max_diag: f64 = 0.0;
        for i in 0..n {
            max_diag = max_diag.max(m.get(i, i).abs());
        }
        let floor = pivot_floor(n, max_diag);
        for j in 0..n {
            let mut s = m.get(j, j);
            for k in 0..j {
                s -= l[j * n + k] * l[j * n + k];
            }
            if !s.is_finite() || s <= floor {
                return None;
            }
            let d = s.sqrt();
            l[j * n + j] = d;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Some(Cholesky { n, l })
    }

    /// All pivots (diagonal of `L`); strictly positive by construction.
    #[cfg(test)]
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.l[i * self.n + i]).collect()
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Diagonal of the inverse, `(A⁻¹)ᵢᵢ = ‖L⁻¹ eᵢ‖²`, reusing the single
    /// factorization for every column.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            // Forward-substitute L z = e_i; z vanishes above row i.
            z[i] = 1.0 / self.l[i * n + i];
            let mut acc = z[i] * z[i];
            for k in (i + 1)..n {
                let mut s = -self.l[k * n + i] * z[i];
                for j in (i + 1)..k {
                    s -= self.l[k * n + j] * z[j];
                }
                z[k] = s / self.l[k * n + k];
                acc += z[k] * z[k];
            }
            out[i] = acc;
        }
        out
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[f64]]) -> SquareMatrix {
        let n = rows.len();
        let mut m = SquareMatrix::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    #[test]
    fn factor_solve_spd() {
        let m = from_rows(&[&[4.0, 2.0, 0.6], &[2.0, 5.0, 1.0], &[0.6, 1.0, 3.0]]);
        let ch = Cholesky::factor(&m).expect("spd");
        let b = [1.0, -2.0, 0.5];
        let x = ch.solve(&b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| m.get(i, j) * x[j]).sum();
            assert!((r - b[i]).abs() < 1e-12, "residual row {i}");
        }
    }

    #[test]
    fn identity_inverse_diagonal() {
        let m = from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let ch = Cholesky::factor(&m).unwrap();
        assert_eq!(ch.inverse_diagonal(), vec![1.0, 1.0]);
        assert_eq!(ch.pivots(), vec![1.0, 1.0]);
    }

    #[test]
    fn inverse_diagonal_matches_explicit_inverse() {
        let m = from_rows(&[
            &[4.0, 1.0, 0.5, 0.1],
            &[1.0, 3.0, 0.2, 0.4],
            &[0.5, 0.2, 5.0, 0.7],
            &[0.1, 0.4, 0.7, 2.0],
        ]);
        let ch = Cholesky::factor(&m).unwrap();
        let diag = ch.inverse_diagonal();
        // Explicit inverse column by column through the same solves is not
        // independent, so cross-check against Gauss-Jordan.
        let inv = gauss_jordan_inverse(&m);
        for i in 0..4 {
            assert!((diag[i] - inv.get(i, i)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite_and_singular() {
        let indef = from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(Cholesky::factor(&indef).is_none());
        let sing = from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert!(Cholesky::factor(&sing).is_none());
        let nan = from_rows(&[&[f64::NAN]]);
        assert!(Cholesky::factor(&nan).is_none());
    }

    pub(crate) fn gauss_jordan_inverse(m: &SquareMatrix) -> SquareMatrix {
        let n = m.n;
        let mut a = m.clone();
        let mut inv = SquareMatrix::zeros(n);
        for i in 0..n {
            inv.set(i, i, 1.0);
        }
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if a.get(r, col).abs() > a.get(piv, col).abs() {
                    piv = r;
                }
            }
            for j in 0..n {
                let t = a.get(col, j);
                a.set(col, j, a.get(piv, j));
                a.set(piv, j, t);
                let t = inv.get(col, j);
                inv.set(col, j, inv.get(piv, j));
                inv.set(piv, j, t);
            }
            let d = a.get(col, col);
            assert!(d != 0.0, "singular matrix in test oracle");
            for j in 0..n {
                a.set(col, j, a.get(col, j) / d);
                inv.set(col, j, inv.get(col, j) / d);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.set(r, j, a.get(r, j) - f * a.get(col, j));
                    inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
                }
            }
        }
        inv
    }
}
