//! Measurement matrix, coset covariance, eigen-structure and signal subspace.
//!
//! The covariance is formed in the frequency domain: each coset row is
//! transformed with a unitary `N`-point DFT and bin `r` is phase-aligned by
//! `e^{-j2π r c_i / (N L)}`, which removes the coset delay inside the band.
//! For frames built on the frame-FFT grid this makes the noiseless covariance
//! exactly `Ā R_X Āᵀ` with rank equal to the number of occupied channels.

mod eft;

use num_complex::Complex;
use rustfft::FftPlanner;

pub use eft::{
    estimate_order_eft, noise_profile_rate, CalibrationEntry, OrderEstimator, ThresholdRule, DEFAULT_P_FALSE,
};

use crate::acquisition::{CosetPattern, CosetSamples};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::{Error, Real, Result};

/// `A[i][j] = exp(-j2π·j·c_i/L)` (0-based `j`), a row selection of the
/// `L`-point DFT matrix.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix<T> {
    pub entries: CMatrix<T>,
    pub pattern: CosetPattern,
}

impl<T: Real> MeasurementMatrix<T> {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn channels(&self) -> usize {
        self.entries.cols()
    }

    /// Entrywise conjugate. Phase-aligned coset spectra see channel `j`
    /// through column `j` of this matrix.
    pub fn conj(&self) -> Self {
        Self {
            entries: self.entries.conj(),
            pattern: self.pattern.clone(),
        }
    }
}

pub fn build_measurement_matrix<T: Real>(pattern: &CosetPattern) -> MeasurementMatrix<T> {
    let l = pattern.channels();
    let entries = CMatrix::from_fn(pattern.len(), l, |i, j| {
        // Reduce the exponent mod L first so the phase argument stays small.
        let k = (j * pattern.offsets()[i]) % l;
        let angle = -2.0 * std::f64::consts::PI * k as f64 / l as f64;
        Complex::new(T::of(angle.cos()), T::of(angle.sin()))
    });
    MeasurementMatrix {
        entries,
        pattern: pattern.clone(),
    }
}

/// How the coset sample block is turned into a `p × p` covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceDomain {
    /// Phase-aligned spectral covariance (the sensing default).
    #[default]
    Spectral,
    /// Raw time-domain snapshot covariance `(1/N) Σ_m y[:,m] y[:,m]ᴴ`. It
    /// ignores the in-band coset delay, so its noiseless rank exceeds K.
    Snapshot,
}

#[derive(Debug, Clone)]
pub struct CovarianceEstimate<T> {
    pub matrix: CMatrix<T>,
    pub num_snapshots: usize,
}

pub fn sample_covariance<T: Real>(q: &CosetSamples<T>) -> CovarianceEstimate<T> {
    sample_covariance_in(q, CovarianceDomain::Spectral)
}

pub fn sample_covariance_in<T: Real>(q: &CosetSamples<T>, domain: CovarianceDomain) -> CovarianceEstimate<T> {
    let n = q.frame_len();
    let snapshots = match domain {
        CovarianceDomain::Snapshot => q.data.clone(),
        CovarianceDomain::Spectral => aligned_spectra(q),
    };
    let gram = snapshots.matmul(&snapshots.adjoint());
    CovarianceEstimate {
        matrix: gram.scale(T::one() / T::of(n as f64)).hermitian_part(),
        num_snapshots: n,
    }
}

/// Unitary DFT of every coset row with per-bin delay compensation.
fn aligned_spectra<T: Real>(q: &CosetSamples<T>) -> CMatrix<T> {
    let n = q.frame_len();
    let l = q.pattern.channels();
    let fft = FftPlanner::<T>::new().plan_fft_forward(n);
    let norm = T::one() / T::of(n as f64).sqrt();
    let mut out = q.data.clone();
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    for (i, &offset) in q.pattern.offsets().iter().enumerate() {
        let row = out.row_mut(i);
        fft.process_with_scratch(row, &mut scratch);
        let period = (n * l) as u128;
        for (r, z) in row.iter_mut().enumerate() {
            let k = ((r as u128 * offset as u128) % period) as f64;
            let angle = -2.0 * std::f64::consts::PI * k / period as f64;
            *z *= Complex::new(T::of(angle.cos()), T::of(angle.sin())).scale(norm);
        }
    }
    out
}

/// Eigen-structure of the coset covariance, optionally with a model order.
#[derive(Debug, Clone)]
pub struct SubspaceModel<T> {
    /// Descending.
    pub eigenvalues: Vec<T>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: CMatrix<T>,
    /// Estimated number of occupied channels; 0 until an order is attached.
    pub k_hat: usize,
    /// `U_s = V_s·√Λ_s`, `p × k_hat`.
    pub signal: CMatrix<T>,
}

pub fn eigendecompose<T: Real>(r: &CovarianceEstimate<T>) -> Result<SubspaceModel<T>> {
    let eig = hermitian_eigen(&r.matrix)?;
    let p = eig.values.len();
    Ok(SubspaceModel {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        k_hat: 0,
        signal: CMatrix::zeros(p, 0),
    })
}

impl<T: Real> SubspaceModel<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn with_order(mut self, k_hat: usize) -> Result<Self> {
        self.signal = signal_subspace(&self, k_hat)?;
        self.k_hat = k_hat;
        Ok(self)
    }

    /// Σ λ_i v_i v_iᴴ over all `p` pairs.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let p = self.dim();
        let scaled = CMatrix::from_fn(p, p, |i, j| self.eigenvectors[(i, j)].scale(self.eigenvalues[j]));
        scaled.matmul(&self.eigenvectors.adjoint())
    }
}

/// First `k_hat` eigenvectors scaled by `√max(λ, 0)`. `k_hat = 0` yields a
/// `p × 0` matrix, which the sensing pipeline reports as an empty support.
pub fn signal_subspace<T: Real>(model: &SubspaceModel<T>, k_hat: usize) -> Result<CMatrix<T>> {
    let p = model.dim();
    if k_hat > p {
        return Err(Error::Parameter(format!("order {k_hat} exceeds subspace dimension {p}")));
    }
    Ok(CMatrix::from_fn(p, k_hat, |i, j| {
        model.eigenvectors[(i, j)].scale(model.eigenvalues[j].max(T::zero()).sqrt())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::{draw_pattern, multicoset_sample, quantize_1bit, Quantization};
    use crate::seed;
    use crate::signal_model::{draw_support, synthesize_frame, SpectrumConfig};
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn block(data: CMatrix<f64>, offsets: Vec<usize>, l: usize) -> CosetSamples<f64> {
        CosetSamples {
            data,
            pattern: CosetPattern::new(l, offsets).unwrap(),
            quantized: Quantization::None,
        }
    }

    #[test]
    fn measurement_matrix_rows() {
        let a = build_measurement_matrix::<f64>(&CosetPattern::new(4, [0]).unwrap());
        for j in 0..4 {
            assert!((a.entries[(0, j)] - c(1.0, 0.0)).norm() < 1e-15);
        }
        let a = build_measurement_matrix::<f64>(&CosetPattern::new(4, [2]).unwrap());
        for (j, want) in [1.0, -1.0, 1.0, -1.0].iter().enumerate() {
            assert!((a.entries[(0, j)] - c(*want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn full_pattern_is_scaled_unitary() {
        let a = build_measurement_matrix::<f64>(&CosetPattern::new(40, 0..40).unwrap());
        let gram = a.entries.adjoint_mul(&a.entries);
        let defect = gram.sub(&CMatrix::identity(40).scale(40.0)).frobenius_norm();
        assert!(defect < 1e-8, "{defect}");
    }

    #[test]
    fn rows_are_dft_rows() {
        let pattern = draw_pattern(16, 7, 3).unwrap();
        let a = build_measurement_matrix::<f64>(&pattern);
        for (i, &ci) in pattern.offsets().iter().enumerate() {
            for j in 0..16 {
                let want = Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * (ci * j) as f64 / 16.0);
                assert!((a.entries[(i, j)] - want).norm() < 1e-12);
                assert!((a.entries[(i, j)].norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_snapshot_is_outer_product() {
        let v = vec![c(1.0, 2.0), c(-0.5, 0.25), c(0.0, -1.0)];
        let y = block(CMatrix::from_row_major(3, 1, v.clone()), vec![0, 1, 3], 4);
        let r = sample_covariance(&y);
        let outer = CMatrix::from_fn(3, 3, |i, j| v[i] * v[j].conj());
        assert!(r.matrix.sub(&outer).frobenius_norm() < 1e-14);
        let e = eigendecompose(&r).unwrap();
        assert!(e.eigenvalues[1].abs() < 1e-12 * e.eigenvalues[0]);
    }

    #[test]
    fn one_bit_covariance_has_unit_diagonal() {
        let cfg = SpectrumConfig::default();
        let frame = synthesize_frame::<f64>(&cfg, &draw_support(40, 4, 2).unwrap(), 2).unwrap();
        let y = multicoset_sample(&frame.samples, &draw_pattern(40, 12, 2).unwrap(), 200).unwrap();
        let r = sample_covariance(&quantize_1bit(&y).unwrap());
        for i in 0..12 {
            assert!((r.matrix[(i, i)] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn white_noise_covariance_converges_to_scaled_identity() {
        let sigma2 = 2.0;
        let mut rng = seed::stream(5, 0);
        let s = (sigma2 / 2.0f64).sqrt();
        let data = CMatrix::from_fn(6, 10_000, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c(s * re, s * im)
        });
        let y = block(data, vec![0, 3, 5, 9, 11, 14], 16);
        let target = CMatrix::identity(6).scale(sigma2);
        for domain in [CovarianceDomain::Spectral, CovarianceDomain::Snapshot] {
            let r = sample_covariance_in(&y, domain);
            let rel = r.matrix.sub(&target).frobenius_norm() / target.frobenius_norm();
            assert!(rel < 0.05, "{domain:?}: {rel}");
        }
    }

    fn noiseless_model(k: usize, p: usize, seed: u64, domain: CovarianceDomain) -> SubspaceModel<f64> {
        let cfg = SpectrumConfig::default().noiseless();
        let frame = synthesize_frame::<f64>(&cfg, &draw_support(40, k, seed).unwrap(), seed).unwrap();
        let y = multicoset_sample(&frame.samples, &draw_pattern(40, p, seed).unwrap(), 200).unwrap();
        eigendecompose(&sample_covariance_in(&y, domain)).unwrap()
    }

    #[test]
    fn spectral_covariance_obeys_rank_law() {
        let m = noiseless_model(4, 20, 13, CovarianceDomain::Spectral);
        let top = m.eigenvalues[0];
        assert!(m.eigenvalues[3] > 1e-3 * top);
        assert!(m.eigenvalues[4..].iter().all(|&l| l.abs() < 1e-6 * top));
    }

    #[test]
    fn snapshot_covariance_breaks_rank_law() {
        let m = noiseless_model(4, 20, 13, CovarianceDomain::Snapshot);
        let top = m.eigenvalues[0];
        let above = m.eigenvalues.iter().filter(|&&l| l > 1e-6 * top).count();
        assert!(above > 4, "snapshot covariance unexpectedly rank {above}");
    }

    #[test]
    fn model_invariants() {
        let m = noiseless_model(3, 10, 4, CovarianceDomain::Spectral);
        let eig = crate::linalg::HermitianEigen {
            values: m.eigenvalues.clone(),
            vectors: m.eigenvectors.clone(),
        };
        assert!(eig.unitarity_defect() < 1e-8);
        assert!(m.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn signal_subspace_examples() {
        let r = CovarianceEstimate {
            matrix: CMatrix::from_diagonal(&[4.0f64, 0.0]),
            num_snapshots: 1,
        };
        let m = eigendecompose(&r).unwrap();
        let u = signal_subspace(&m, 1).unwrap();
        assert!((u[(0, 0)].norm() - 2.0).abs() < 1e-15 && u[(1, 0)].norm() < 1e-15);
        assert_eq!(signal_subspace(&m, 0).unwrap().cols(), 0);
        assert!(signal_subspace(&m, 3).is_err());
    }

    #[test]
    fn full_order_subspace_reconstructs_covariance() {
        let mut rng = seed::stream(8, 0);
        let data = CMatrix::from_fn(5, 40, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            c(re, im)
        });
        let r = sample_covariance(&block(data, vec![0, 1, 2, 4, 6], 8));
        let m = eigendecompose(&r).unwrap();
        let rel = m.reconstruct().sub(&r.matrix).frobenius_norm() / r.matrix.frobenius_norm();
        assert!(rel < 1e-8);
        for k in 1..=5 {
            let m = m.clone().with_order(k).unwrap();
            let uu = m.signal.matmul(&m.signal.adjoint());
            let partial = CMatrix::from_fn(5, k, |i, j| m.eigenvectors[(i, j)].scale(m.eigenvalues[j]))
                .matmul(&m.eigenvectors.select_columns(&(0..k).collect::<Vec<_>>()).adjoint());
            assert!(uu.sub(&partial).frobenius_norm() < 1e-8 * r.matrix.frobenius_norm());
            if k == 5 {
                assert!(uu.sub(&r.matrix).frobenius_norm() < 1e-8 * r.matrix.frobenius_norm());
            }
        }
    }
}
