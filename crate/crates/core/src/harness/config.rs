//! Sweep configuration, read from a flat TOML document.
//!
//! Scenario keys (`channels`, `bandwidth_hz`, `frame_len`, `subcarriers`,
//! `noise_variance`, `pu_powers`) sit next to the list-valued sweep axes
//! `p`, `snr_db`, `bits` and `k` and the run settings. Unknown keys are an
//! error.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::BitDepth;
use crate::covariance_subspace::{CovarianceDomain, OrderEstimator, ThresholdRule, DEFAULT_P_FALSE};
use crate::pipeline::SensingPipeline;
use crate::signal_model::SpectrumConfig;
use crate::{Error, Result};

pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Scenario shared by every cell; its `snr_db` is overridden per cell.
    pub base: SpectrumConfig,
    pub p: Vec<usize>,
    pub snr_db: Vec<f64>,
    pub bits: Vec<BitDepth>,
    pub k: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub pipeline: SensingPipeline,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    /// Fill the `wall_time_s` column. Off by default so that output depends
    /// only on the seed.
    pub record_timing: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    channels: usize,
    bandwidth_hz: f64,
    frame_len: usize,
    subcarriers: usize,
    noise_variance: f64,
    pu_powers: Vec<f64>,
    p: Vec<usize>,
    snr_db: Vec<f64>,
    bits: Vec<BitDepth>,
    k: Vec<usize>,
    trials: usize,
    master_seed: u64,
    p_false: f64,
    threshold: String,
    covariance: String,
    threads: Option<usize>,
    record_timing: bool,
    out: Option<PathBuf>,
}

impl Default for RawConfig {
    fn default() -> Self {
        let base = SpectrumConfig::default();
        Self {
            channels: base.channels,
            bandwidth_hz: base.bandwidth_hz,
            frame_len: base.frame_len,
            subcarriers: base.subcarriers,
            noise_variance: base.noise_variance,
            pu_powers: base.pu_powers,
            p: vec![20],
            snr_db: vec![base.snr_db],
            bits: vec![BitDepth::ONE_BIT],
            k: vec![4],
            trials: DEFAULT_TRIALS,
            master_seed: 0,
            p_false: DEFAULT_P_FALSE,
            threshold: "calibrated".into(),
            covariance: "spectral".into(),
            threads: None,
            record_timing: false,
            out: None,
        }
    }
}

fn parse_rule(s: &str) -> Result<ThresholdRule> {
    match s {
        "calibrated" => Ok(ThresholdRule::Calibrated),
        "closed-form" => Ok(ThresholdRule::ClosedForm),
        other => Err(Error::Config(format!("threshold must be 'calibrated' or 'closed-form', got '{other}'"))),
    }
}

fn parse_domain(s: &str) -> Result<CovarianceDomain> {
    match s {
        "spectral" => Ok(CovarianceDomain::Spectral),
        "snapshot" => Ok(CovarianceDomain::Snapshot),
        other => Err(Error::Config(format!("covariance must be 'spectral' or 'snapshot', got '{other}'"))),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let cfg = Self {
            base: SpectrumConfig {
                channels: raw.channels,
                bandwidth_hz: raw.bandwidth_hz,
                frame_len: raw.frame_len,
                subcarriers: raw.subcarriers,
                snr_db: raw.snr_db.first().copied().unwrap_or(f64::INFINITY),
                noise_variance: raw.noise_variance,
                pu_powers: raw.pu_powers,
            },
            p: raw.p,
            snr_db: raw.snr_db,
            bits: raw.bits,
            k: raw.k,
            trials: raw.trials,
            master_seed: raw.master_seed,
            pipeline: SensingPipeline {
                order: OrderEstimator {
                    p_false: raw.p_false,
                    rule: parse_rule(&raw.threshold)?,
                },
                domain: parse_domain(&raw.covariance)?,
            },
            threads: raw.threads,
            record_timing: raw.record_timing,
            out: raw.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate().map_err(|e| Error::Config(e.to_string()))?;
        let l = self.base.channels;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.p.is_empty() || self.snr_db.is_empty() || self.bits.is_empty() || self.k.is_empty() {
            return Err(Error::Config("every sweep axis (p, snr_db, bits, k) needs at least one value".into()));
        }
        if let Some(p) = self.p.iter().find(|&&p| p == 0 || p > l) {
            return Err(Error::Config(format!("coset count {p} outside 1..={l}")));
        }
        if let Some(k) = self.k.iter().find(|&&k| k > l) {
            return Err(Error::Config(format!("sparsity {k} exceeds the {l} channels")));
        }
        if let Some(s) = self.snr_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return Err(Error::Config(format!("invalid SNR {s}")));
        }
        let pf = self.pipeline.order.p_false;
        if !(pf > 0.0 && pf < 1.0) {
            return Err(Error::Config(format!("p_false must lie in (0, 1), got {pf}")));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of cells in the Cartesian product of the sweep axes.
    pub fn cells(&self) -> usize {
        self.p.len() * self.snr_db.len() * self.bits.len() * self.k.len()
    }
}
