//! Multiband Nyquist-rate test signals: K OFDM/BPSK primary users in distinct
//! channels plus circularly symmetric complex Gaussian noise.

use std::collections::BTreeSet;

use num_complex::Complex;
use num_traits::Zero;
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::seed::{self, tag};
use crate::{Error, Real, Result};

/// Static scenario parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Number of channels `L`.
    pub channels: usize,
    /// Total monitored bandwidth `W` in Hz.
    pub bandwidth_hz: f64,
    /// Samples per coset per frame, `N`.
    pub frame_len: usize,
    /// OFDM subcarriers per primary user, `C`.
    pub subcarriers: usize,
    /// Total PU power over noise power. `+inf` gives a noiseless frame.
    pub snr_db: f64,
    /// Per-sample noise variance σ_n².
    pub noise_variance: f64,
    /// Relative PU power weights `E_i`, applied in support order. Empty means
    /// equal powers; otherwise it must cover every active PU.
    pub pu_powers: Vec<f64>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            channels: 40,
            bandwidth_hz: 320e6,
            frame_len: 200,
            subcarriers: 200,
            snr_db: 5.0,
            noise_variance: 1.0,
            pu_powers: Vec::new(),
        }
    }
}

impl SpectrumConfig {
    /// Channel bandwidth `B = W/L`.
    pub fn channel_bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz / self.channels as f64
    }

    /// Nyquist interval `T = 1/W`.
    pub fn nyquist_interval_s(&self) -> f64 {
        1.0 / self.bandwidth_hz
    }

    /// Coset rate `f_s = B`.
    pub fn coset_rate_hz(&self) -> f64 {
        self.channel_bandwidth_hz()
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_len as f64 / self.coset_rate_hz()
    }

    /// Nyquist samples per frame, `L·N`.
    pub fn nyquist_len(&self) -> usize {
        self.channels * self.frame_len
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Total power of all primary users combined.
    pub fn total_pu_power(&self) -> f64 {
        if self.is_noiseless() {
            self.noise_variance
        } else {
            self.noise_variance * 10f64.powf(self.snr_db / 10.0)
        }
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }

    pub fn noiseless(self) -> Self {
        self.with_snr_db(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 {
            return Err(Error::Parameter(format!("need at least 2 channels, got {}", self.channels)));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::Parameter(format!("bandwidth must be positive, got {}", self.bandwidth_hz)));
        }
        if self.frame_len == 0 || self.subcarriers == 0 {
            return Err(Error::Parameter("frame length and subcarrier count must be at least 1".into()));
        }
        if self.subcarriers > self.frame_len {
            return Err(Error::Parameter(format!(
                "{} subcarriers do not fit on the {} frequency bins of one channel",
                self.subcarriers, self.frame_len
            )));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Parameter(format!("invalid SNR {}", self.snr_db)));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance > 0.0) {
            return Err(Error::Parameter("noise variance must be positive".into()));
        }
        if let Some(bad) = self.pu_powers.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::Parameter(format!("PU power coefficient {bad} is not a non-negative real")));
        }
        Ok(())
    }

    /// Absolute mean power of each active PU, in support order.
    pub fn pu_power_split(&self, k: usize) -> Result<Vec<f64>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let weights: Vec<f64> = if self.pu_powers.is_empty() {
            vec![1.0; k]
        } else if self.pu_powers.len() >= k {
            self.pu_powers[..k].to_vec()
        } else {
            return Err(Error::Parameter(format!(
                "{} PU power coefficients given for {k} active PUs",
                self.pu_powers.len()
            )));
        };
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::Parameter("PU power coefficients sum to zero".into()));
        }
        let total = self.total_pu_power();
        Ok(weights.iter().map(|w| total * w / sum).collect())
    }
}

/// Set of occupied channels, 1-based, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SupportSet {
    channels: usize,
    indices: BTreeSet<usize>,
}

impl SupportSet {
    pub fn new(channels: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let indices: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(bad) = indices.iter().find(|&&i| i == 0 || i > channels) {
            return Err(Error::Parameter(format!("channel index {bad} outside 1..={channels}")));
        }
        Ok(Self { channels, indices })
    }

    pub fn empty(channels: usize) -> Self {
        Self {
            channels,
            indices: BTreeSet::new(),
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, channel: usize) -> bool {
        self.indices.contains(&channel)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn intersection_len(&self, other: &Self) -> usize {
        self.indices.intersection(&other.indices).count()
    }

    /// |self ∖ other|
    pub fn difference_len(&self, other: &Self) -> usize {
        self.indices.difference(&other.indices).count()
    }
}

impl std::fmt::Display for SupportSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.indices.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// One sensing frame at the Nyquist rate `W`.
#[derive(Debug, Clone)]
pub struct NyquistSignal<T> {
    pub samples: Vec<Complex<T>>,
    pub truth: SupportSet,
}

/// Uniformly random size-`k` subset of the `l` channels.
pub fn draw_support(l: usize, k: usize, seed: u64) -> Result<SupportSet> {
    if k > l {
        return Err(Error::Parameter(format!("sparsity {k} exceeds channel count {l}")));
    }
    let mut rng = seed::stream(seed, tag::SUPPORT);
    let picked = index::sample(&mut rng, l, k);
    SupportSet::new(l, picked.into_iter().map(|i| i + 1))
}

/// One PU's OFDM/BPSK waveform in `channel` (1-based), `L·N` samples long,
/// with empirical mean power exactly `power`.
///
/// The `C` subcarriers sit on equispaced bins of the channel's `N` frame-FFT
/// bins; no cyclic prefix, so the frame is exactly periodic and all energy
/// stays inside the channel.
pub fn synthesize_pu<T: Real>(channel: usize, power: f64, cfg: &SpectrumConfig, seed: u64) -> Result<Vec<Complex<T>>> {
    cfg.validate()?;
    if channel == 0 || channel > cfg.channels {
        return Err(Error::Parameter(format!("channel {channel} outside 1..={}", cfg.channels)));
    }
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::Parameter(format!("PU power must be non-negative, got {power}")));
    }
    let len = cfg.nyquist_len();
    let mut spectrum = vec![Complex::<T>::zero(); len];
    if power == 0.0 {
        return Ok(spectrum);
    }

    let mut rng = seed::stream(seed, tag::SIGNAL);
    let first_bin = (channel - 1) * cfg.frame_len;
    for sc in 0..cfg.subcarriers {
        let bin = first_bin + sc * cfg.frame_len / cfg.subcarriers;
        let symbol = if rng.random::<bool>() { T::one() } else { -T::one() };
        spectrum[bin] = Complex::new(symbol, T::zero());
    }
    FftPlanner::<T>::new().plan_fft_inverse(len).process(&mut spectrum);

    let mean_power = spectrum.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b) / T::of(len as f64);
    let gain = (T::of(power) / mean_power).sqrt();
    for z in &mut spectrum {
        *z = z.scale(gain);
    }
    Ok(spectrum)
}

/// Sum of the PUs in `support` plus complex Gaussian noise of variance σ_n².
pub fn synthesize_frame<T: Real>(cfg: &SpectrumConfig, support: &SupportSet, seed: u64) -> Result<NyquistSignal<T>> {
    cfg.validate()?;
    if support.channels() != cfg.channels {
        return Err(Error::Parameter(format!(
            "support drawn for {} channels, scenario has {}",
            support.channels(),
            cfg.channels
        )));
    }
    let powers = cfg.pu_power_split(support.len())?;
    let mut samples = vec![Complex::<T>::zero(); cfg.nyquist_len()];
    for (channel, power) in support.iter().zip(powers) {
        let pu = synthesize_pu::<T>(channel, power, cfg, seed::mix(seed, channel as u64))?;
        for (acc, s) in samples.iter_mut().zip(pu) {
            *acc += s;
        }
    }
    if !cfg.is_noiseless() {
        add_complex_noise(&mut samples, cfg.noise_variance, seed);
    }
    Ok(NyquistSignal {
        samples,
        truth: support.clone(),
    })
}

/// Adds CN(0, variance) noise: real and imaginary parts each N(0, variance/2).
pub fn add_complex_noise<T: Real>(samples: &mut [Complex<T>], variance: f64, seed: u64) {
    let mut rng = seed::stream(seed, tag::NOISE);
    let sigma = (variance / 2.0).sqrt();
    for z in samples {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex::new(T::of(sigma * re), T::of(sigma * im));
    }
}

/// Fraction of `samples`' energy per channel band, from the frame FFT.
pub fn channel_energy_fractions<T: Real>(samples: &[Complex<T>], channels: usize) -> Vec<f64> {
    let mut spectrum = samples.to_vec();
    FftPlanner::<T>::new().plan_fft_forward(spectrum.len()).process(&mut spectrum);
    let per_channel = spectrum.len() / channels;
    let band: Vec<f64> = spectrum
        .chunks(per_channel)
        .map(|c| c.iter().map(|z| z.norm_sqr().to_f64_lossy()).sum())
        .collect();
    let total: f64 = band.iter().sum();
    band.iter().map(|b| b / total).collect()
}
