//! Deliberately naive dense cross-checks.
//!
//! Everything here recomputes quantities the fast paths produce, by the
//! most transparent method available: build the dense symmetric matrix,
//! diagonalize it with plain cyclic Jacobi rotations, exponentiate through
//! the eigendecomposition, and expand small determinants by literal
//! cofactor recursion.  Nothing is shared with the production routines, so
//! agreement is meaningful.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
// Needed for f64 math in no_std builds; test builds link std, whose
// inherent methods shadow the trait's.
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::LadderModel;
use crate::{Error, Result};

/// Dense symmetric form of `H`: zeros everywhere except the off-diagonals
/// `sqrt(beta_n)`.
#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub mat: Vec<f64>,
}

impl DenseHamiltonian {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[i * self.dim + j]
    }
}

pub fn dense_hamiltonian(model: &LadderModel) -> DenseHamiltonian {
    let dim = model.dim();
    let mut mat = vec![0.0f64; dim * dim];
    for (n, b) in model.betas_f64().iter().enumerate().take(dim - 1) {
        let s = b.sqrt();
        mat[n * dim + n + 1] = s;
        mat[(n + 1) * dim + n] = s;
    }
    DenseHamiltonian { dim, mat }
}

/// Full eigendecomposition from the dense matrix.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[j]` is the unit eigenvector for `eigenvalues[j]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Diagonalizes `H` by cyclic Jacobi sweeps (rotate away every off-diagonal
/// pair, repeat until the off-diagonal mass is at machine zero).
pub fn dense_spectrum(model: &LadderModel) -> DenseSpectrum {
    let h = dense_hamiltonian(model);
    let n = h.dim;
    let mut a = h.mat;
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob2: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..60 {
        let off2: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum();
        if off2 <= frob2 * 1e-32 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- G^T A G on rows/columns p, q.
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[i * n + i]
            .partial_cmp(&a[j * n + j])
            .expect("eigenvalues are finite")
    });
    DenseSpectrum {
        eigenvalues: order.iter().map(|&i| a[i * n + i]).collect(),
        eigenvectors: order
            .iter()
            .map(|&j| (0..n).map(|i| v[i * n + j]).collect())
            .collect(),
    }
}

/// Dense propagator through the eigendecomposition:
/// `U = sum_j exp(-i tau lambda_j) v_j v_j^T`.
#[derive(Debug, Clone)]
pub struct DensePropagator {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub entries: Vec<Complex64>,
}

impl DensePropagator {
    pub fn entry(&self, n: usize, k: usize) -> Complex64 {
        self.entries[n * self.dim + k]
    }
}

pub fn dense_propagator(model: &LadderModel, tau: f64) -> DensePropagator {
    let spec = dense_spectrum(model);
    let dim = model.dim();
    let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
    for (lambda, vec_j) in spec.eigenvalues.iter().zip(&spec.eigenvectors) {
        let phase = Complex64::new(0.0, -tau * lambda).exp();
        for n in 0..dim {
            for k in 0..dim {
                entries[n * dim + k] += phase * vec_j[n] * vec_j[k];
            }
        }
    }
    DensePropagator { dim, entries }
}

/// `det(lambda I_n - J_n)` of the leading `n x n` block by literal cofactor
/// expansion (no memoization, exponential), exact in rationals.  Guarded to
/// `N <= 14` to keep the recursion affordable.
pub fn exact_char_det(model: &LadderModel, lambda: &BigRational, n: usize) -> Result<BigRational> {
    const MAX_N: usize = 14;
    if model.n_max() > MAX_N {
        return Err(Error::SizeGuard { n: model.n_max(), max: MAX_N });
    }
    if n > model.dim() {
        return Err(Error::IndexOutOfRange { index: n, dim: model.dim() + 1 });
    }
    fn det(betas: &[BigRational], lambda: &BigRational, n: usize) -> BigRational {
        match n {
            0 => BigRational::one(),
            1 => lambda.clone(),
            _ => {
                // Expand along the last row: the diagonal cofactor and the
                // single off-diagonal pair sqrt(beta)^2.
                lambda * det(betas, lambda, n - 1)
                    - &betas[n - 2] * det(betas, lambda, n - 2)
            }
        }
    }
    Ok(det(model.betas(), lambda, n))
}
