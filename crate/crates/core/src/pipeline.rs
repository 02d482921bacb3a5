//! Coset samples → covariance → eigen-structure → order → support.

use crate::acquisition::CosetSamples;
use crate::covariance_subspace::{
    build_measurement_matrix, eigendecompose, sample_covariance_in, CovarianceDomain, OrderEstimator, SubspaceModel,
};
use crate::signal_model::SupportSet;
use crate::support_recovery::somp;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SensingPipeline {
    pub order: OrderEstimator,
    pub domain: CovarianceDomain,
}

#[derive(Debug, Clone)]
pub struct Detection<T> {
    pub support: SupportSet,
    pub model: SubspaceModel<T>,
    /// Recovery hit a rank-deficient selection and returned a partial support.
    pub partial: bool,
}

impl Detection<f64> {
    pub fn k_hat(&self) -> usize {
        self.model.k_hat
    }
}

impl SensingPipeline {
    pub fn sense<T: Real>(&self, samples: &CosetSamples<T>) -> Result<Detection<T>> {
        let covariance = sample_covariance_in(samples, self.domain);
        let model = eigendecompose(&covariance)?;
        let k_hat = self.order.estimate(&model.eigenvalues, covariance.num_snapshots);
        let model = model.with_order(k_hat)?;
        let channels = samples.pattern.channels();
        if k_hat == 0 {
            return Ok(Detection {
                support: SupportSet::empty(channels),
                model,
                partial: false,
            });
        }
        // Channel j enters the covariance along the conjugate of column j of A.
        let dictionary = build_measurement_matrix::<T>(&samples.pattern).conj();
        match somp(&dictionary, &model.signal, k_hat) {
            Ok(r) => Ok(Detection {
                support: r.support,
                model,
                partial: false,
            }),
            Err(Error::RankDeficient { partial }) => Ok(Detection {
                support: partial,
                model,
                partial: true,
            }),
            Err(e) => Err(e),
        }
    }
}
