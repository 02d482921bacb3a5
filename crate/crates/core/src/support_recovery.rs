//! Row-support recovery for `U_s = A·Θ_s` by simultaneous orthogonal
//! matching pursuit.

use num_complex::Complex;
use num_traits::Zero;

use crate::covariance_subspace::MeasurementMatrix;
use crate::linalg::CMatrix;
use crate::signal_model::SupportSet;
use crate::{Error, Real, Result};

#[derive(Debug, Clone)]
pub struct RecoveryResult<T> {
    /// Estimated support Ŝ, 1-based channel indices.
    pub support: SupportSet,
    /// Final Frobenius norm of the residual.
    pub residual_norm: T,
    /// 1-based channel indices in the order they were picked.
    pub selected_order: Vec<usize>,
    /// Residual norm before the first and after every accepted iteration.
    pub residual_history: Vec<T>,
}

/// Index of the largest score, ties to the lowest index. NaN never wins.
pub fn tie_break<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    assert!(!scores.is_empty(), "tie_break needs at least one score");
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] || (scores[best].partial_cmp(&scores[best]).is_none() && s.partial_cmp(s).is_some()) {
            best = i;
        }
    }
    best
}

/// Greedy SOMP for `k_hat` iterations.
///
/// Column scores are `‖a_jᴴ R‖₂ / ‖a_j‖₂` over all columns of the residual
/// `R`. After each pick the residual is projected onto the orthogonal
/// complement of the selected columns. Iteration stops early when a pick
/// lowers the residual by less than a relative 1e-12; that pick is dropped.
pub fn somp<T: Real>(a: &MeasurementMatrix<T>, u: &CMatrix<T>, k_hat: usize) -> Result<RecoveryResult<T>> {
    let dict = &a.entries;
    let (p, l) = (dict.rows(), dict.cols());
    if u.rows() != p {
        return Err(Error::Shape(format!("subspace has {} rows, dictionary has {p}", u.rows())));
    }
    if k_hat > p {
        return Err(Error::Parameter(format!("{k_hat} iterations exceed the {p} measurements")));
    }
    let col_norms: Vec<T> = (0..l)
        .map(|j| (0..p).map(|i| dict[(i, j)].norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt())
        .collect();
    if let Some(j) = col_norms.iter().position(|n| n.is_nan() || *n <= T::zero()) {
        return Err(Error::Parameter(format!("dictionary column {} is zero", j + 1)));
    }

    let scale = u.frobenius_norm();
    let stop_tol = T::of(1e-12).max(T::epsilon() * T::of(16.0)) * scale;
    let rank_tol = T::epsilon().sqrt();

    let mut residual = u.clone();
    let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(k_hat);
    let mut selected: Vec<usize> = Vec::with_capacity(k_hat);
    let mut chosen = vec![false; l];
    let mut history = vec![scale];

    for _ in 0..k_hat {
        let correlation = dict.adjoint_mul(&residual);
        let scores: Vec<T> = (0..l)
            .map(|j| {
                if chosen[j] {
                    T::neg_infinity()
                } else {
                    let row = correlation.row(j);
                    row.iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt() / col_norms[j]
                }
            })
            .collect();
        let j = tie_break(&scores);

        let mut w = dict.column(j);
        for _ in 0..2 {
            for q in &basis {
                let proj: Complex<T> = q.iter().zip(&w).map(|(qi, wi)| qi.conj() * wi).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= proj * qi;
                }
            }
        }
        let w_norm = w.iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt();
        if w_norm <= rank_tol * col_norms[j] {
            let partial = SupportSet::new(l, selected.iter().map(|s| s + 1))?;
            return Err(Error::RankDeficient { partial });
        }
        let q: Vec<Complex<T>> = w.iter().map(|z| z.unscale(w_norm)).collect();

        let mut next = residual.clone();
        for c in 0..next.cols() {
            let proj: Complex<T> = (0..p).map(|i| q[i].conj() * residual[(i, c)]).sum();
            for (i, qi) in q.iter().enumerate() {
                next[(i, c)] -= proj * qi;
            }
        }
        let next_norm = next.frobenius_norm();
        let previous = *history.last().expect("history starts non-empty");
        if previous - next_norm <= stop_tol {
            break;
        }
        residual = next;
        history.push(next_norm);
        basis.push(q);
        selected.push(j);
        chosen[j] = true;
    }

    Ok(RecoveryResult {
        support: SupportSet::new(l, selected.iter().map(|s| s + 1))?,
        residual_norm: *history.last().expect("history starts non-empty"),
        selected_order: selected.iter().map(|s| s + 1).collect(),
        residual_history: history,
    })
}

/// ‖A_Sᴴ·R‖_F for the selected columns of the final residual of `U`.
pub fn selected_correlation<T: Real>(a: &MeasurementMatrix<T>, u: &CMatrix<T>, result: &RecoveryResult<T>) -> T {
    let cols: Vec<usize> = result.selected_order.iter().map(|c| c - 1).collect();
    if cols.is_empty() {
        return T::zero();
    }
    let sub = a.entries.select_columns(&cols);
    // Residual = U − Q Qᴴ U with Q an orthonormal basis of the selection.
    let gram = sub.adjoint_mul(&sub);
    let rhs = sub.adjoint_mul(u);
    let coeffs = solve_hermitian(&gram, &rhs);
    let residual = u.sub(&sub.matmul(&coeffs));
    let corr = sub.adjoint_mul(&residual);
    corr.frobenius_norm()
}

/// Gaussian elimination with partial pivoting for small dense systems.
fn solve_hermitian<T: Real>(m: &CMatrix<T>, rhs: &CMatrix<T>) -> CMatrix<T> {
    let n = m.rows();
    let mut a = m.clone();
    let mut b = rhs.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[(x, col)].norm().partial_cmp(&a[(y, col)].norm()).unwrap())
            .unwrap();
        for j in 0..n {
            let t = a[(col, j)];
            a[(col, j)] = a[(pivot, j)];
            a[(pivot, j)] = t;
        }
        for j in 0..b.cols() {
            let t = b[(col, j)];
            b[(col, j)] = b[(pivot, j)];
            b[(pivot, j)] = t;
        }
        let d = a[(col, col)];
        if d.is_zero() {
            continue;
        }
        for r in (col + 1)..n {
            let f = a[(r, col)] / d;
            for j in col..n {
                let v = a[(col, j)];
                a[(r, j)] -= f * v;
            }
            for j in 0..b.cols() {
                let v = b[(col, j)];
                b[(r, j)] -= f * v;
            }
        }
    }
    let mut x = CMatrix::zeros(n, b.cols());
    for j in 0..b.cols() {
        for r in (0..n).rev() {
            let mut acc = b[(r, j)];
            for c in (r + 1)..n {
                acc -= a[(r, c)] * x[(c, j)];
            }
            x[(r, j)] = if a[(r, r)].is_zero() { Complex::zero() } else { acc / a[(r, r)] };
        }
    }
    x
}
