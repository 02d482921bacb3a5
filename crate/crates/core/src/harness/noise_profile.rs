//! How the 1-bit distortion `ψ = q − B̂·x` distributes its power over the
//! channels, next to white noise of the same total power.

use num_complex::Complex;
use num_traits::Zero;
use rustfft::FftPlanner;

use crate::acquisition::{bussgang_split_slices, quantize_1bit_slice};
use crate::seed;
use crate::signal_model::{add_complex_noise, draw_support, synthesize_frame, SpectrumConfig, SupportSet};
use crate::Result;

const WHITE_TAG: u64 = 0x5748_4954;

#[derive(Debug, Clone)]
pub struct NoiseProfile {
    pub occupied: SupportSet,
    /// Distortion power per channel; sums to `distortion_power`.
    pub quantization: Vec<f64>,
    /// Same integral for complex white Gaussian noise of that power.
    pub white: Vec<f64>,
    pub gain: f64,
    /// Mean per-sample distortion power `P_ψ`.
    pub distortion_power: f64,
}

impl NoiseProfile {
    pub fn mean_over(&self, occupied: bool) -> f64 {
        let v: Vec<f64> = self.channel_values(occupied).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Coefficient of variation of the distortion power over vacant channels.
    pub fn vacant_cv(&self) -> f64 {
        let v: Vec<f64> = self.channel_values(false).collect();
        if v.len() < 2 {
            return 0.0;
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64;
        var.sqrt() / mean
    }

    fn channel_values(&self, occupied: bool) -> impl Iterator<Item = f64> + '_ {
        self.quantization
            .iter()
            .enumerate()
            .filter(move |(i, _)| self.occupied.contains(i + 1) == occupied)
            .map(|(_, v)| *v)
    }
}

/// Per-channel power of `x`, normalised so the channels sum to the mean
/// per-sample power of `x`.
pub fn channel_powers(x: &[Complex<f64>], channels: usize) -> Vec<f64> {
    let n = x.len();
    let mut spectrum = x.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut spectrum);
    let scale = (n as f64).powi(2);
    spectrum
        .chunks(n / channels)
        .map(|band| band.iter().map(|z| z.norm_sqr()).sum::<f64>() / scale)
        .collect()
}

/// Quantizes a full-rate frame with `k` active PUs at `cfg.snr_db` to 1 bit
/// and integrates the Bussgang distortion spectrum over each channel.
pub fn noise_profile(cfg: &SpectrumConfig, k: usize, trial_seed: u64) -> Result<NoiseProfile> {
    let occupied = draw_support(cfg.channels, k, trial_seed)?;
    let frame = synthesize_frame::<f64>(cfg, &occupied, trial_seed)?;
    let q = quantize_1bit_slice(&frame.samples);
    let split = bussgang_split_slices(&frame.samples, &q)?;
    let psi: Vec<Complex<f64>> = frame
        .samples
        .iter()
        .zip(&q)
        .map(|(x, q)| q - x.scale(split.gain))
        .collect();

    let mut white = vec![Complex::zero(); psi.len()];
    add_complex_noise(&mut white, split.distortion_power, seed::mix(trial_seed, WHITE_TAG));

    Ok(NoiseProfile {
        occupied,
        quantization: channel_powers(&psi, cfg.channels),
        white: channel_powers(&white, cfg.channels),
        gain: split.gain,
        distortion_power: split.distortion_power,
    })
}
