//! Product-moment and rank correlation, registered as named strategies.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock};

use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::sample::PairedSample;
use crate::strategy::{Named, StrategyError, StrategyRegistry};

/// A test/retest correlation used for the Gaussian baseline.
pub trait Correlation: Named + Send + Sync {
    /// The sample the product-moment formula is applied to (identity for
    /// Pearson, midranks for Spearman).
    fn transform(&self, sample: &PairedSample) -> PairedSample;

    fn correlate(&self, sample: &PairedSample) -> Result<f64, EstimatorError> {
        pearson(&self.transform(sample))
    }
}

pub struct Pearson;

impl Named for Pearson {
    fn name(&self) -> &'static str {
        "pearson"
    }
}

impl Correlation for Pearson {
    fn transform(&self, sample: &PairedSample) -> PairedSample {
        sample.clone()
    }

    fn correlate(&self, sample: &PairedSample) -> Result<f64, EstimatorError> {
        pearson(sample)
    }
}

pub struct Spearman;

impl Named for Spearman {
    fn name(&self) -> &'static str {
        "spearman"
    }
}

impl Correlation for Spearman {
    fn transform(&self, sample: &PairedSample) -> PairedSample {
        midranked(sample)
    }
}

static CORRELATIONS: LazyLock<StrategyRegistry<dyn Correlation>> = LazyLock::new(|| {
    StrategyRegistry::<dyn Correlation>::new("correlation")
        .with(Arc::new(Pearson) as Arc<dyn Correlation>)
        .with(Arc::new(Spearman) as Arc<dyn Correlation>)
});

/// The built-in correlation strategies, keyed by name.
pub fn correlation_registry() -> &'static StrategyRegistry<dyn Correlation> {
    &CORRELATIONS
}

/// Configuration-level name of a correlation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrMethod {
    Pearson,
    Spearman,
}

impl CorrMethod {
    pub const ALL: [CorrMethod; 2] = [CorrMethod::Pearson, CorrMethod::Spearman];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrMethod::Pearson => "pearson",
            CorrMethod::Spearman => "spearman",
        }
    }

    pub fn strategy(self) -> Arc<dyn Correlation> {
        correlation_registry()
            .get(self.as_str())
            .expect("built-in correlation registered")
    }
}

impl fmt::Display for CorrMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrMethod {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pearson" => Ok(CorrMethod::Pearson),
            "spearman" => Ok(CorrMethod::Spearman),
            other => Err(StrategyError::Unknown {
                kind: "correlation",
                name: other.to_string(),
                available: correlation_registry().names().join(", "),
            }),
        }
    }
}

/// Pearson product-moment correlation, clamped to [−1, 1].
pub fn pearson(sample: &PairedSample) -> Result<f64, EstimatorError> {
    let n = sample.n();
    if n < 2 {
        return Err(EstimatorError::InsufficientSample { n, required: 2 });
    }
    let pairs = sample.pairs();
    let nf = n as f64;
    let mean1 = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean2 = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        let da = a - mean1;
        let db = b - mean2;
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EstimatorError::Degenerate("zero variance in a margin"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson on midranks.
pub fn spearman(sample: &PairedSample) -> Result<f64, EstimatorError> {
    Spearman.correlate(sample)
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn midranked(sample: &PairedSample) -> PairedSample {
    let r1 = midranks(&sample.x1());
    let r2 = midranks(&sample.x2());
    PairedSample::from_columns(sample.measure_id(), &r1, &r2).expect("ranks are finite")
}
