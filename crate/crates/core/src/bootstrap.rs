//! Subject-level bootstrap: deterministic resampling, BCa intervals with a
//! percentile fallback, and one-sided p-values.
//!
//! Replicate `r` draws its resample from a ChaCha8 stream selected by `r`
//! under a key derived from `(base_seed, measure_id, spec_id)`. Replicates are
//! computed in parallel but merged by index, so results never depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::estimators::special::{normal_cdf, normal_quantile};
use crate::sample::PairedSample;
use crate::stats::quantile_sorted;

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BootstrapError {
    #[error("bootstrap needs at least one replicate")]
    ZeroReplicates,
    #[error("bootstrap needs n >= 2 subjects, got {0}")]
    TooFewSubjects(usize),
    #[error("all {requested} bootstrap replicates were degenerate")]
    AllDegenerate { requested: usize },
    #[error("no replicates to summarise")]
    EmptyReplicates,
}

/// 256-bit key for one (measure, specification) bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedKey([u8; 32]);

impl SeedKey {
    pub fn derive(base_seed: u64, measure_id: &str, spec_id: &str) -> Self {
        let mut h = Sha256::new();
        h.update(base_seed.to_le_bytes());
        for part in [measure_id, spec_id] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        SeedKey(h.finalize().into())
    }

    /// The independent stream for replicate `index`.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.0);
        rng.set_stream(index);
        rng
    }
}

/// Subject indices of replicate `index`, drawn with replacement.
pub fn resample_indices(key: &SeedKey, index: u64, n: usize) -> Vec<usize> {
    let mut rng = key.stream(index);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replicates {
    /// Successful replicate values, in replicate-index order.
    pub values: Vec<f64>,
    pub requested: usize,
}

impl Replicates {
    pub fn b_effective(&self) -> usize {
        self.values.len()
    }
}

/// Applies `statistic` to `b` subject-level resamples. Replicates where the
/// statistic errors or is non-finite are dropped.
pub fn resample_statistic<F, E>(
    sample: &PairedSample,
    statistic: &F,
    b: usize,
    key: &SeedKey,
) -> Result<Replicates, BootstrapError>
where
    F: Fn(&PairedSample) -> Result<f64, E> + Sync,
{
    if b == 0 {
        return Err(BootstrapError::ZeroReplicates);
    }
    let n = sample.n();
    if n < 2 {
        return Err(BootstrapError::TooFewSubjects(n));
    }
    let values: Vec<f64> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let resample = sample.select(&resample_indices(key, r, n));
            statistic(&resample).ok().filter(|v| v.is_finite())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    if values.is_empty() {
        return Err(BootstrapError::AllDegenerate { requested: b });
    }
    Ok(Replicates { values, requested: b })
}

/// Leave-one-subject-out values of `statistic`; failing deletions are dropped.
pub fn jackknife<F, E>(sample: &PairedSample, statistic: &F) -> Vec<f64>
where
    F: Fn(&PairedSample) -> Result<f64, E> + Sync,
{
    (0..sample.n())
        .into_par_iter()
        .map(|i| statistic(&sample.without(i)).ok().filter(|v| v.is_finite()))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    Bca,
    PercentileFallback,
}

impl IntervalMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            IntervalMethod::Bca => "bca",
            IntervalMethod::PercentileFallback => "percentile_fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcaParams {
    pub z0: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub method: IntervalMethod,
    /// Present iff `method == Bca`.
    pub params: Option<BcaParams>,
}

/// Standard BCa acceleration; `None` when the jackknife has no dispersion.
pub fn acceleration(jackknife_values: &[f64]) -> Option<f64> {
    if jackknife_values.len() < 2 {
        return None;
    }
    let m = jackknife_values.iter().sum::<f64>() / jackknife_values.len() as f64;
    let (s2, s3) = jackknife_values.iter().fold((0.0, 0.0), |(s2, s3), v| {
        let d = m - v;
        (s2 + d * d, s3 + d * d * d)
    });
    if s2 <= 0.0 {
        return None;
    }
    let a = s3 / (6.0 * s2.powf(1.5));
    a.is_finite().then_some(a)
}

/// Two-sided `1 - alpha` BCa interval, falling back to the percentile interval
/// when the acceleration is undefined or the bias correction is infinite.
pub fn bca_interval(
    replicates: &[f64],
    point: f64,
    jackknife_values: &[f64],
    alpha: f64,
) -> Result<Interval, BootstrapError> {
    if replicates.is_empty() {
        return Err(BootstrapError::EmptyReplicates);
    }
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    let level = 1.0 - alpha;
    let (lo_p, hi_p) = (alpha / 2.0, 1.0 - alpha / 2.0);
    let at = |p: f64| quantile_sorted(&sorted, p).expect("non-empty, p in [0,1]");
    let fallback = Interval {
        ci_low: at(lo_p),
        ci_high: at(hi_p),
        level,
        method: IntervalMethod::PercentileFallback,
        params: None,
    };

    let below = sorted.partition_point(|&v| v < point);
    let z0 = normal_quantile(below as f64 / sorted.len() as f64);
    let Some(a) = acceleration(jackknife_values) else {
        return Ok(fallback);
    };
    if !z0.is_finite() {
        return Ok(fallback);
    }
    let adjust = |p: f64| {
        if z0 == 0.0 && a == 0.0 {
            return Some(p);
        }
        let z = z0 + normal_quantile(p);
        let denom = 1.0 - a * z;
        let q = normal_cdf(z0 + z / denom);
        (denom > 0.0 && (0.0..=1.0).contains(&q)).then_some(q)
    };
    let (Some(p1), Some(p2)) = (adjust(lo_p), adjust(hi_p)) else {
        return Ok(fallback);
    };
    Ok(Interval {
        ci_low: at(p1),
        ci_high: at(p2),
        level,
        method: IntervalMethod::Bca,
        params: Some(BcaParams { z0, a }),
    })
}

/// `(1 + #{replicate <= 0}) / (B_eff + 1)` for H0: statistic <= 0.
pub fn one_sided_p(replicates: &[f64]) -> Result<f64, BootstrapError> {
    if replicates.is_empty() {
        return Err(BootstrapError::EmptyReplicates);
    }
    let at_or_below = replicates.iter().filter(|&&v| v <= 0.0).count();
    Ok((1 + at_or_below) as f64 / (replicates.len() + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    pub method: IntervalMethod,
    pub b_effective: usize,
    pub p_one_sided: f64,
    pub params: Option<BcaParams>,
}

/// Full bootstrap of `statistic` at its sample value `point`.
pub fn bootstrap<F, E>(
    sample: &PairedSample,
    statistic: &F,
    point: f64,
    b: usize,
    key: &SeedKey,
    alpha: f64,
) -> Result<BootstrapResult, BootstrapError>
where
    F: Fn(&PairedSample) -> Result<f64, E> + Sync,
{
    let reps = resample_statistic(sample, statistic, b, key)?;
    let jack = jackknife(sample, statistic);
    let interval = bca_interval(&reps.values, point, &jack, alpha)?;
    Ok(BootstrapResult {
        point,
        ci_low: interval.ci_low,
        ci_high: interval.ci_high,
        level: interval.level,
        method: interval.method,
        b_effective: reps.b_effective(),
        p_one_sided: one_sided_p(&reps.values)?,
        params: interval.params,
    })
}
