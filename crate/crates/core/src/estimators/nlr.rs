//! Gaussian mutual-information baseline and the NLR indices.
//!
//! `NLR_Δ = MI_KSG − MI_Gauss(ρ)` in nats, where ρ is either the Pearson
//! correlation or (as a rank-based sensitivity baseline) Spearman's ρ_s.
//! `NLR_ρ = MI_KSG / MI_Gauss` is descriptive only and absent when the
//! baseline is zero.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::correlation::{CorrMethod, Correlation};
use super::knn::{NeighborSearch, SearchMethod};
use super::ksg::ksg_mi;
use super::EstimatorError;
use crate::sample::PairedSample;

/// Largest |ρ| fed to the baseline when round-off reaches ±1 on data that is
/// not exactly collinear.
pub const RHO_CLAMP: f64 = 1.0 - 1e-12;

/// MI of a bivariate Gaussian with correlation `rho`: −½ ln(1 − ρ²).
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn gaussian_mi(rho: f64) -> Result<f64, EstimatorError> {
    // negated so NaN is rejected too
    if !(rho.abs() < 1.0) {
        return Err(EstimatorError::SingularBaseline { rho: rho.abs() });
    }
    // ln_1p keeps precision for small ρ; max(0) removes a −0.0
    Ok((-0.5 * (-rho * rho).ln_1p()).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub mi_ksg: f64,
    pub mi_gauss: f64,
    pub rho: f64,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlrValue {
    pub delta: f64,
    pub ratio: Option<f64>,
}

impl MiEstimate {
    pub fn nlr(&self) -> NlrValue {
        NlrValue {
            delta: self.mi_ksg - self.mi_gauss,
            ratio: (self.mi_gauss > 0.0).then(|| self.mi_ksg / self.mi_gauss),
        }
    }
}

/// True iff every point lies exactly on the line through the first two
/// distinct points (exact floating-point cross products).
fn exactly_collinear(pairs: &[(f64, f64)]) -> bool {
    let Some(&p0) = pairs.first() else {
        return true;
    };
    let Some(&p1) = pairs.iter().find(|&&p| p != p0) else {
        return true;
    };
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    pairs.iter().all(|&(a, b)| (a - p0.0) * dy == (b - p0.1) * dx)
}

/// Correlation used by the baseline, with round-off clamping.
///
/// |ρ| = 1 from exactly collinear (transformed) data is a genuine singular
/// baseline and errors; |ρ| = 1 produced by round-off on non-collinear data
/// is pulled back to [`RHO_CLAMP`].
pub fn baseline_rho(sample: &PairedSample, correlation: &dyn Correlation) -> Result<f64, EstimatorError> {
    let transformed = correlation.transform(sample);
    let rho = correlation.correlate(sample)?;
    if rho.abs() < 1.0 {
        return Ok(rho);
    }
    if exactly_collinear(transformed.pairs()) {
        return Err(EstimatorError::SingularBaseline { rho: rho.abs() });
    }
    Ok(rho.signum() * RHO_CLAMP)
}

/// KSG + baseline estimator for one (k, correlation, search backend) setting.
#[derive(Clone)]
pub struct NlrEstimator {
    pub k: usize,
    pub correlation: Arc<dyn Correlation>,
    pub search: Arc<dyn NeighborSearch>,
}

impl std::fmt::Debug for NlrEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NlrEstimator")
            .field("k", &self.k)
            .field("correlation", &self.correlation.name())
            .field("search", &self.search.name())
            .finish()
    }
}

impl NlrEstimator {
    pub fn new(k: usize, corr: CorrMethod, search: SearchMethod) -> Self {
        Self {
            k,
            correlation: corr.strategy(),
            search: search.strategy(),
        }
    }

    pub fn estimate(&self, sample: &PairedSample) -> Result<MiEstimate, EstimatorError> {
        let mi_ksg = ksg_mi(sample, self.k, self.search.as_ref())?;
        let rho = baseline_rho(sample, self.correlation.as_ref())?;
        let mi_gauss = gaussian_mi(rho)?;
        Ok(MiEstimate {
            mi_ksg,
            mi_gauss,
            rho,
            k: self.k,
            n: sample.n(),
        })
    }

    /// NLR_Δ alone; the statistic resampled by the bootstrap.
    pub fn delta(&self, sample: &PairedSample) -> Result<f64, EstimatorError> {
        self.estimate(sample).map(|e| e.nlr().delta)
    }
}

/// NLR indices with the default neighbour-search backend.
pub fn nlr(sample: &PairedSample, k: usize, corr: CorrMethod) -> Result<NlrValue, EstimatorError> {
    NlrEstimator::new(k, corr, SearchMethod::default())
        .estimate(sample)
        .map(|e| e.nlr())
}
