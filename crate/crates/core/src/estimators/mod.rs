//! Reliability estimators on a [`PairedSample`](crate::sample::PairedSample):
//! correlations, the Gaussian MI baseline, the KSG mutual-information
//! estimate, the NLR indices and ICC.

pub mod correlation;
pub mod icc;
pub mod knn;
pub mod ksg;
pub mod nlr;
pub mod special;

use thiserror::Error;

use crate::strategy::StrategyError;

pub use correlation::{pearson, spearman, CorrMethod, Correlation};
pub use icc::{icc, IccEstimate, IccVariant};
pub use knn::{NeighborSearch, SearchMethod};
pub use ksg::ksg_mi;
pub use nlr::{gaussian_mi, nlr, MiEstimate, NlrEstimator, NlrValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),
    #[error("insufficient sample: n = {n}, need {required}")]
    InsufficientSample { n: usize, required: usize },
    #[error("singular Gaussian baseline: |rho| = {rho} >= 1")]
    SingularBaseline { rho: f64 },
    #[error("invalid neighbour count k = {0}")]
    InvalidK(usize),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
}
