//! Raw IQ files: little-endian interleaved `f32` I/Q pairs with no header,
//! plus a `<file>.meta` TOML sidecar describing the frame.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::signal_model::SpectrumConfig;
use crate::{Error, Real, Result};

pub const FORMAT: &str = "cf32le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqMeta {
    /// Nyquist sample rate `W`.
    pub sample_rate_hz: f64,
    pub channels: usize,
    /// Samples per coset per frame; the file holds `channels·frame_len` samples.
    pub frame_len: usize,
    pub format: String,
}

impl IqMeta {
    pub fn for_config(cfg: &SpectrumConfig) -> Self {
        Self {
            sample_rate_hz: cfg.bandwidth_hz,
            channels: cfg.channels,
            frame_len: cfg.frame_len,
            format: FORMAT.into(),
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// `x` rounded to the `f32` precision of an IQ file.
pub fn storage_precision<T: Real>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    let round = |v: T| T::of(v.to_f64_lossy() as f32 as f64);
    x.iter().map(|z| Complex::new(round(z.re), round(z.im))).collect()
}

pub fn write_iq<T: Real>(path: impl AsRef<Path>, samples: &[Complex<T>], meta: &IqMeta) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(samples.len() * 8);
    for z in samples {
        bytes.extend_from_slice(&(z.re.to_f64_lossy() as f32).to_le_bytes());
        bytes.extend_from_slice(&(z.im.to_f64_lossy() as f32).to_le_bytes());
    }
    fs::write(path, bytes)?;
    let text = toml::to_string(meta).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_iq<T: Real>(path: impl AsRef<Path>) -> Result<(Vec<Complex<T>>, IqMeta)> {
    let path = path.as_ref();
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", meta_path.display())))?;
    let meta: IqMeta = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", meta_path.display())))?;
    if meta.format != FORMAT {
        return Err(Error::Config(format!("unsupported sample format '{}'", meta.format)));
    }
    let bytes = fs::read(path)?;
    let expected = meta.channels * meta.frame_len * 8;
    if bytes.len() != expected {
        return Err(Error::Shape(format!(
            "{} holds {} bytes, metadata implies {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[0..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..8].try_into().expect("4 bytes"));
            Complex::new(T::of(re as f64), T::of(im as f64))
        })
        .collect();
    Ok((samples, meta))
}
