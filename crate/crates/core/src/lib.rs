//! Compressive wideband spectrum sensing from 1-bit multicoset samples.
//!
//! A frame of `L` channels is sampled by `p` cosets of rate `1/(L·T)`, each
//! sample is reduced to the sign of its real and imaginary parts, and the
//! occupied channels are recovered from the dominant eigenvectors of the
//! coset covariance.
//!
//! ```
//! use onebit_wss::prelude::*;
//!
//! let cfg = SpectrumConfig { channels: 16, frame_len: 64, subcarriers: 64, snr_db: 20.0, ..Default::default() };
//! let support = draw_support(cfg.channels, 2, 7).unwrap();
//! let frame = synthesize_frame::<f64>(&cfg, &support, 7).unwrap();
//! let pattern = draw_pattern(cfg.channels, 8, 7).unwrap();
//! let coset = multicoset_sample(&frame.samples, &pattern, cfg.frame_len).unwrap();
//! let detection = SensingPipeline::default().sense(&quantize_1bit(&coset).unwrap()).unwrap();
//! assert_eq!(detection.support, support);
//! ```

pub mod acquisition;
pub mod covariance_subspace;
mod error;
pub mod harness;
pub mod iq;
pub mod linalg;
pub mod pipeline;
mod scalar;
pub mod seed;
pub mod signal_model;
pub mod support_recovery;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CMatrixF64 = linalg::CMatrix<f64>;
pub type CMatrixF32 = linalg::CMatrix<f32>;
pub type NyquistSignalF64 = signal_model::NyquistSignal<f64>;
pub type NyquistSignalF32 = signal_model::NyquistSignal<f32>;
pub type CosetSamplesF64 = acquisition::CosetSamples<f64>;
pub type CosetSamplesF32 = acquisition::CosetSamples<f32>;
pub type SubspaceModelF64 = covariance_subspace::SubspaceModel<f64>;
pub type SubspaceModelF32 = covariance_subspace::SubspaceModel<f32>;
pub type MeasurementMatrixF64 = covariance_subspace::MeasurementMatrix<f64>;
pub type RecoveryResultF64 = support_recovery::RecoveryResult<f64>;
pub type DetectionF64 = pipeline::Detection<f64>;
pub type DetectionF32 = pipeline::Detection<f32>;

pub mod prelude {
    pub use crate::acquisition::{
        draw_pattern, multicoset_sample, quantize_1bit, quantize_bbit, BitDepth, CosetPattern, CosetSamples, QuantizerSpec,
    };
    pub use crate::covariance_subspace::{
        build_measurement_matrix, eigendecompose, sample_covariance, signal_subspace, OrderEstimator, ThresholdRule,
    };
    pub use crate::harness::{run_sweep, run_trial, ExperimentConfig, MetricsRow};
    pub use crate::pipeline::{Detection, SensingPipeline};
    pub use crate::signal_model::{draw_support, synthesize_frame, SpectrumConfig, SupportSet};
    pub use crate::support_recovery::somp;
    pub use crate::{Error, Real, Result};
}
