//! Model-order estimation by the exponential fitting test (EFT).
//!
//! Under white noise the eigenvalues of a `P`-dimensional sample covariance
//! with `N` snapshots decay roughly geometrically, `λ_i ∝ r^i`, where the rate
//! `r` matches the first two moments of the complex Wishart spectrum:
//!
//! ```text
//! P·(1 + r^P)·(1 − r) / ((1 − r^P)·(1 + r)) = 1 + P/N
//! ```
//!
//! Hypothesis `P` says the `P` smallest eigenvalues are noise. The `P − 1`
//! smallest fix the profile's scale, which predicts the largest of the `P`;
//! if the observed eigenvalue exceeds the prediction by more than the
//! threshold, it is a signal eigenvalue and `K̂ = p − P + 1`. Hypotheses are
//! tried from `P = 2` upwards; none firing gives `K̂ = 0`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand_distr::{ChiSquared, Distribution};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::linalg::symmetric_tridiagonal_eigenvalues;
use crate::seed::{self, tag};
use crate::Real;

pub const DEFAULT_P_FALSE: f64 = 1e-3;

const CALIBRATION_DRAWS: usize = 4000;

/// How the per-hypothesis detection threshold `τ` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    /// White-noise Monte Carlo calibration: for each `P`, the ratio of the
    /// top eigenvalue to its prediction is simulated on a `P`-dimensional
    /// complex Wishart with `N` degrees of freedom, and the threshold is its
    /// mean plus `Φ⁻¹(1 − p_false/(p−1))` standard deviations, so that
    /// `p_false` bounds the overall noise-only false-alarm rate.
    #[default]
    Calibrated,
    /// `τ = Φ⁻¹(1 − p_false)·√(2/N)` for every hypothesis.
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderEstimator {
    pub p_false: f64,
    pub rule: ThresholdRule,
}

impl Default for OrderEstimator {
    fn default() -> Self {
        Self {
            p_false: DEFAULT_P_FALSE,
            rule: ThresholdRule::default(),
        }
    }
}

/// EFT with the calibrated threshold rule.
pub fn estimate_order_eft<T: Real>(eigenvalues: &[T], snapshots: usize, p_false: f64) -> usize {
    OrderEstimator {
        p_false,
        rule: ThresholdRule::Calibrated,
    }
    .estimate(eigenvalues, snapshots)
}

impl OrderEstimator {
    /// `K̂ ∈ {0, …, p−1}`. The input is sorted descending internally.
    pub fn estimate<T: Real>(&self, eigenvalues: &[T], snapshots: usize) -> usize {
        let p = eigenvalues.len();
        if p < 2 || snapshots == 0 {
            return 0;
        }
        let mut lam: Vec<f64> = eigenvalues.iter().map(|v| v.to_f64_lossy()).collect();
        lam.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        if lam[0].is_nan() || lam[0] <= 0.0 {
            return 0;
        }
        // Finite-precision floor: rank-deficient spectra otherwise end in
        // rounding noise whose ratios are meaningless.
        let floor = lam[0] * f64::EPSILON.sqrt();
        for v in &mut lam {
            *v = v.max(floor);
        }

        let table = match self.rule {
            ThresholdRule::Calibrated => Some(calibration_table(p, snapshots)),
            ThresholdRule::ClosedForm => None,
        };
        let closed_form_tau = upper_quantile(self.p_false) * (2.0 / snapshots as f64).sqrt();
        let calibrated_q = upper_quantile(self.p_false / (p - 1) as f64);

        let mut tail_sum = lam[p - 1];
        for k in (1..p).rev() {
            // Hypothesis P = p − k + 1: lam[k..] are the P − 1 smaller noise
            // eigenvalues, lam[k − 1] is tested.
            let dim = p - k + 1;
            let (rate, threshold) = match &table {
                Some(t) => {
                    let e = &t[dim - 2];
                    (e.rate, e.ratio_mean + calibrated_q * e.ratio_std)
                }
                None => (noise_profile_rate(dim, snapshots), 1.0 + closed_form_tau),
            };
            let predicted = predicted_top(tail_sum, dim, rate);
            if lam[k - 1] > predicted * threshold {
                return k;
            }
            tail_sum += lam[k - 1];
        }
        0
    }
}

/// Largest value of a `dim`-term geometric profile `a, a·r, …, a·r^{dim−1}`
/// whose last `dim − 1` terms sum to `tail_sum`.
fn predicted_top(tail_sum: f64, dim: usize, rate: f64) -> f64 {
    if rate >= 1.0 {
        return tail_sum / (dim - 1) as f64;
    }
    tail_sum * (1.0 - rate) / (rate * (1.0 - rate.powi(dim as i32 - 1)))
}

fn upper_quantile(alpha: f64) -> f64 {
    let alpha = alpha.clamp(1e-300, 0.5);
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - alpha)
}

/// Geometric decay rate `r ∈ (0, 1]` of the white-noise eigenvalue profile
/// for `dim` eigenvalues and `snapshots` complex snapshots.
pub fn noise_profile_rate(dim: usize, snapshots: usize) -> f64 {
    if dim < 2 {
        return 1.0;
    }
    let p = dim as f64;
    let target = 1.0 + p / snapshots as f64;
    // g(r) falls monotonically from P (r→0) to 1 (r→1).
    let g = |r: f64| p * (1.0 + r.powf(p)) * (1.0 - r) / ((1.0 - r.powf(p)) * (1.0 + r));
    if target >= p {
        return f64::MIN_POSITIVE;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 || mid >= 1.0 {
            break;
        }
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// White-noise statistics of the EFT ratio for one hypothesis dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationEntry {
    pub dim: usize,
    pub rate: f64,
    pub ratio_mean: f64,
    pub ratio_std: f64,
}

type Table = Arc<Vec<CalibrationEntry>>;

fn cache() -> &'static Mutex<HashMap<(usize, usize), Table>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Table>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Entries for `dim = 2..=p`, cached per `(p, N)`.
pub(crate) fn calibration_table(p: usize, snapshots: usize) -> Table {
    if let Some(t) = cache().lock().expect("calibration cache poisoned").get(&(p, snapshots)) {
        return t.clone();
    }
    let table: Table = Arc::new((2..=p).map(|dim| calibrate(dim, snapshots)).collect());
    cache()
        .lock()
        .expect("calibration cache poisoned")
        .entry((p, snapshots))
        .or_insert(table)
        .clone()
}

fn calibrate(dim: usize, snapshots: usize) -> CalibrationEntry {
    let rate = noise_profile_rate(dim, snapshots);
    let mut rng = seed::stream(seed::mix(dim as u64, snapshots as u64), tag::CALIBRATION);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..CALIBRATION_DRAWS {
        let lam = white_wishart_eigenvalues(dim, snapshots, &mut rng);
        let tail: f64 = lam[1..].iter().sum();
        let ratio = lam[0] / predicted_top(tail, dim, rate);
        sum += ratio;
        sum_sq += ratio * ratio;
    }
    let n = CALIBRATION_DRAWS as f64;
    let mean = sum / n;
    CalibrationEntry {
        dim,
        rate,
        ratio_mean: mean,
        ratio_std: ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0).sqrt(),
    }
}

/// Eigenvalues (descending, arbitrary common scale) of a `dim × dim` complex
/// white Wishart matrix with `snapshots` degrees of freedom, from the β = 2
/// Laguerre bidiagonal model: `B` lower bidiagonal with diagonal
/// `χ_{2N}, χ_{2N−2}, …` and sub-diagonal `χ_{2(dim−1)}, …, χ_2`; the
/// eigenvalues of `B·Bᵀ` are those of `Z·Zᴴ`. Falls back to the rank-deficient
/// direct construction when `N < dim`.
pub(crate) fn white_wishart_eigenvalues(dim: usize, snapshots: usize, rng: &mut seed::Rng) -> Vec<f64> {
    if snapshots < dim {
        return direct_wishart_eigenvalues(dim, snapshots, rng);
    }
    let chi = |dof: usize, rng: &mut seed::Rng| -> f64 {
        ChiSquared::new(dof as f64).expect("positive dof").sample(rng).sqrt()
    };
    let d: Vec<f64> = (0..dim).map(|i| chi(2 * (snapshots - i), rng)).collect();
    let e: Vec<f64> = (0..dim - 1).map(|i| chi(2 * (dim - 1 - i), rng)).collect();
    let diag: Vec<f64> = (0..dim)
        .map(|i| d[i] * d[i] + if i > 0 { e[i - 1] * e[i - 1] } else { 0.0 })
        .collect();
    let off: Vec<f64> = (0..dim - 1).map(|i| d[i] * e[i]).collect();
    symmetric_tridiagonal_eigenvalues(&diag, &off)
}

fn direct_wishart_eigenvalues(dim: usize, snapshots: usize, rng: &mut seed::Rng) -> Vec<f64> {
    use crate::linalg::{hermitian_eigen, CMatrix};
    use num_complex::Complex;
    use rand_distr::StandardNormal;
    let z = CMatrix::<f64>::from_fn(dim, snapshots, |_, _| {
        Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    hermitian_eigen(&z.matmul(&z.adjoint()))
        .expect("Jacobi converges on Gram matrices")
        .values
}
