//! Cyclic complex Jacobi eigensolver for Hermitian matrices.
//!
//! Each rotation first rotates the phase of the pivot `a[p][q]` onto the real
//! axis with a diagonal unitary, then annihilates it with a real Givens
//! rotation. Accuracy is relative to ‖A‖_F, which is what the subspace
//! invariants (unitarity, reconstruction) are stated against.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::CMatrix;
use crate::{Error, Real, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: CMatrix<T>,
}

pub fn hermitian_eigen<T: Real>(matrix: &CMatrix<T>) -> Result<HermitianEigen<T>> {
    if !matrix.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}×{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let n = matrix.rows();
    let mut a = matrix.hermitian_part();
    let mut v = CMatrix::<T>::identity(n);

    let scale = a.frobenius_norm();
    let tol = T::epsilon() * scale;
    let mut converged = n < 2 || scale.is_zero();
    let mut off = T::zero();

    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        off = off_diagonal_norm(&a);
        converged = off <= tol;
    }
    if !converged {
        return Err(Error::Decomposition {
            sweeps: MAX_SWEEPS,
            residual: off.to_f64_lossy(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm<T: Real>(a: &CMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn rotate<T: Real>(a: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize) {
    let n = a.rows();
    let z = a[(p, q)];
    let mag = z.norm();
    if mag <= T::min_positive_value() {
        return;
    }

    // Phase step: D = diag(1, .., e^{-iφ} at q, ..) makes a[p][q] = |z|.
    let phase = z.unscale(mag);
    let phase_conj = phase.conj();
    for r in 0..n {
        a[(r, q)] *= phase_conj;
    }
    for r in 0..n {
        a[(q, r)] *= phase;
    }
    for r in 0..n {
        v[(r, q)] *= phase_conj;
    }

    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let zeta = (aqq - app) / (mag + mag);
    let t = if zeta >= T::zero() {
        T::one() / (zeta + (zeta * zeta + T::one()).sqrt())
    } else {
        -T::one() / (-zeta + (zeta * zeta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;

    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)];
        let arq = a[(r, q)];
        let new_rp = arp.scale(c) - arq.scale(s);
        let new_rq = arp.scale(s) + arq.scale(c);
        a[(r, p)] = new_rp;
        a[(r, q)] = new_rq;
        a[(p, r)] = new_rp.conj();
        a[(q, r)] = new_rq.conj();
    }
    a[(p, p)] = Complex::new(app - t * mag, T::zero());
    a[(q, q)] = Complex::new(aqq + t * mag, T::zero());
    a[(p, q)] = Complex::zero();
    a[(q, p)] = Complex::zero();

    for r in 0..n {
        let vrp = v[(r, p)];
        let vrq = v[(r, q)];
        v[(r, p)] = vrp.scale(c) - vrq.scale(s);
        v[(r, q)] = vrp.scale(s) + vrq.scale(c);
    }
}

impl<T: Real> HermitianEigen<T> {
    /// Σ λ_i v_i v_iᴴ.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let n = self.vectors.rows();
        let scaled = CMatrix::from_fn(n, self.values.len(), |i, j| self.vectors[(i, j)].scale(self.values[j]));
        scaled.matmul(&self.vectors.adjoint())
    }

    /// max |VᴴV − I|.
    pub fn unitarity_defect(&self) -> T {
        let gram = self.vectors.adjoint_mul(&self.vectors);
        let mut worst = T::zero();
        for i in 0..gram.rows() {
            for j in 0..gram.cols() {
                let target = if i == j { Complex::one() } else { Complex::zero() };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }
}
