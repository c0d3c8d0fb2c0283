//! Radial kernels and local interpolation (Gram) matrices.
//!
//! All four families are strictly positive definite, normalized to
//! `phi(0) = 1`, and non-increasing in `r`. The Wendland kernels are
//! compactly supported: they vanish identically for `r >= 1/epsilon`.

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;

/// The kernel families used for the local approximants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// Inverse multiquadric, `(1 + (er)^2)^(-1/2)`. Globally supported,
    /// infinitely smooth.
    Imq,
    /// Matérn of C2 smoothness, `e^(-er) (1 + er)`. Globally supported.
    MaternC2,
    /// Wendland C2, `(1 - er)_+^4 (4er + 1)`. Support radius `1/e`.
    WendlandC2,
    /// Wendland C6, `(1 - er)_+^8 (32(er)^3 + 25(er)^2 + 8er + 1)`.
    WendlandC6,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::Imq,
        KernelFamily::MaternC2,
        KernelFamily::WendlandC2,
        KernelFamily::WendlandC6,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Imq => "imq",
            KernelFamily::MaternC2 => "matern-c2",
            KernelFamily::WendlandC2 => "wendland-c2",
            KernelFamily::WendlandC6 => "wendland-c6",
        }
    }

    pub fn parse_name(s: &str) -> Option<KernelFamily> {
        match s {
            "imq" => Some(KernelFamily::Imq),
            "matern-c2" => Some(KernelFamily::MaternC2),
            "wendland-c2" => Some(KernelFamily::WendlandC2),
            "wendland-c6" => Some(KernelFamily::WendlandC6),
            _ => None,
        }
    }
}

/// A radial kernel: family plus shape parameter.
///
/// The shape parameter scales distances, `u = epsilon * r`; larger values give
/// narrower (more peaked) kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub family: KernelFamily,
    pub epsilon: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, epsilon: f64) -> Result<Kernel> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "shape parameter must be positive and finite, got {epsilon}"
            )));
        }
        Ok(Kernel { family, epsilon })
    }

    /// Evaluates `phi(r)` for `r >= 0`.
    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let u = self.epsilon * r;
        match self.family {
            KernelFamily::Imq => 1.0 / (1.0 + u * u).sqrt(),
            KernelFamily::MaternC2 => (-u).exp() * (1.0 + u),
            KernelFamily::WendlandC2 => {
                // Truncate before exponentiation so the support boundary is
                // exact and odd powers cannot flip sign.
                let t = (1.0 - u).max(0.0);
                let t2 = t * t;
                t2 * t2 * (4.0 * u + 1.0)
            }
            KernelFamily::WendlandC6 => {
                let t = (1.0 - u).max(0.0);
                let t2 = t * t;
                let t4 = t2 * t2;
                t4 * t4 * (32.0 * u * u * u + 25.0 * u * u + 8.0 * u + 1.0)
            }
        }
    }
}

/// Euclidean distance between two points stored as flat coordinate slices.
#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

/// Assembles the local interpolation matrix with entries
/// `phi(||x_i - x_k||)` from `n` points of dimension `dim` stored row-major
/// in `coords`. Each off-diagonal entry is computed once and mirrored, so the
/// result is symmetric bit for bit.
pub fn gram_matrix(kernel: &Kernel, dim: usize, coords: &[f64]) -> Result<GramMatrix> {
    if dim == 0 {
        return Err(Error::InvalidInput("point dimension must be at least 1".into()));
    }
    if coords.is_empty() || coords.len() % dim != 0 {
        return Err(Error::InvalidInput(format!(
            "coordinate buffer of length {} is not a whole number of {dim}-dimensional points",
            coords.len()
        )));
    }
    let n = coords.len() / dim;
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        m.set(i, i, kernel.eval(0.0));
        let pi = &coords[i * dim..(i + 1) * dim];
        for k in (i + 1)..n {
            let pk = &coords[k * dim..(k + 1) * dim];
            let v = kernel.eval(euclidean(pi, pk));
            m.set(i, k, v);
            m.set(k, i, v);
        }
    }
    Ok(GramMatrix { inner: m })
}

/// Symmetric kernel matrix with unit diagonal.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub(crate) inner: SquareMatrix,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.inner.n
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.inner.get(i, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Cholesky;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_at_origin_for_all_families() {
        for family in KernelFamily::ALL {
            for eps in [0.1, 1.0, 7.3] {
                let k = Kernel::new(family, eps).unwrap();
                assert_eq!(k.eval(0.0), 1.0, "{family:?} eps={eps}");
            }
        }
    }

    #[test]
    fn closed_form_values() {
        let imq = Kernel::new(KernelFamily::Imq, 1.0).unwrap();
        assert!((imq.eval(1.0) - 1.0 / 2.0_f64.sqrt()).abs() < 1e-15);

        let matern = Kernel::new(KernelFamily::MaternC2, 1.0).unwrap();
        assert!((matern.eval(1.0) - 2.0 / std::f64::consts::E).abs() < 1e-15);

        // Truncation boundary: epsilon * r = 1 exactly.
        let w2 = Kernel::new(KernelFamily::WendlandC2, 2.0).unwrap();
        assert_eq!(w2.eval(0.5), 0.0);
    }

    #[test]
    fn wendland_support_is_exactly_compact() {
        for family in [KernelFamily::WendlandC2, KernelFamily::WendlandC6] {
            let k = Kernel::new(family, 4.0).unwrap();
            for r in [0.25, 0.3, 1.0, 55.5] {
                assert_eq!(k.eval(r), 0.0, "{family:?} r={r}");
            }
            assert!(k.eval(0.2499) > 0.0);
        }
    }

    #[test]
    fn monotone_decay_on_sampled_grid() {
        for family in KernelFamily::ALL {
            for eps in [0.3, 1.0, 5.0] {
                let k = Kernel::new(family, eps).unwrap();
                let mut prev = k.eval(0.0);
                for step in 1..=400 {
                    let r = step as f64 * 0.01;
                    let v = k.eval(r);
                    assert!(
                        v <= prev + 1e-15,
                        "{family:?} eps={eps} increased at r={r}: {prev} -> {v}"
                    );
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn gram_single_point_and_coincident_pair() {
        let k = Kernel::new(KernelFamily::Imq, 1.0).unwrap();
        let g = gram_matrix(&k, 2, &[0.3, 0.3]).unwrap();
        assert_eq!(g.dim(), 1);
        assert_eq!(g.get(0, 0), 1.0);

        let g = gram_matrix(&k, 2, &[0.3, 0.3, 0.3, 0.3]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.get(i, j), 1.0);
            }
        }
    }

    #[test]
    fn gram_two_points_imq() {
        let k = Kernel::new(KernelFamily::Imq, 1.0).unwrap();
        let g = gram_matrix(&k, 2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let expected = 1.0 / 2.0_f64.sqrt();
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(1, 1), 1.0);
        assert!((g.get(0, 1) - expected).abs() < 1e-15);
        assert_eq!(g.get(0, 1).to_bits(), g.get(1, 0).to_bits());
    }

    #[test]
    fn gram_rejects_ragged_input() {
        let k = Kernel::new(KernelFamily::Imq, 1.0).unwrap();
        assert!(gram_matrix(&k, 2, &[0.0, 0.0, 1.0]).is_err());
        assert!(gram_matrix(&k, 2, &[]).is_err());
    }

    #[test]
    fn gram_symmetry_and_unit_diagonal_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for family in KernelFamily::ALL {
            let k = Kernel::new(family, 1.7).unwrap();
            let coords: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
            let g = gram_matrix(&k, 2, &coords).unwrap();
            for i in 0..g.dim() {
                assert_eq!(g.get(i, i), 1.0);
                for j in 0..g.dim() {
                    assert_eq!(g.get(i, j).to_bits(), g.get(j, i).to_bits());
                }
            }
        }
    }

    #[test]
    fn positive_definite_witness_small_point_sets() {
        // Strict positive definiteness shows up as strictly positive Cholesky
        // pivots for any set of distinct points.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for family in KernelFamily::ALL {
            for trial in 0..5 {
                let n = 2 + (trial * 2) % 11; // up to 12 points
                let mut coords = Vec::with_capacity(n * 2);
                while coords.len() < n * 2 {
                    let x: f64 = rng.gen_range(0.0..1.0);
                    let y: f64 = rng.gen_range(0.0..1.0);
                    let distinct = coords
                        .chunks(2)
                        .all(|p| euclidean(p, &[x, y]) > 0.05);
                    if distinct {
                        coords.push(x);
                        coords.push(y);
                    }
                }
                let k = Kernel::new(family, 2.0).unwrap();
                let g = gram_matrix(&k, 2, &coords).unwrap();
                let ch = Cholesky::factor(&g.inner)
                    .unwrap_or_else(|| panic!("{family:?} n={n} not SPD"));
                assert!(ch.pivots().iter().all(|p| *p > 0.0));
            }
        }
    }
}
