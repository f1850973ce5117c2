//! Intraclass correlation for two sessions: ICC(2,1) (absolute agreement,
//! two-way random effects) and ICC(3,1) (consistency, two-way mixed), with
//! F-based 95% intervals in the McGraw–Wong form.

use serde::{Deserialize, Serialize};

use super::special::f_quantile;
use super::EstimatorError;
use crate::sample::PairedSample;

pub const ICC_LEVEL: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IccVariant {
    #[serde(rename = "icc_2_1")]
    Icc21,
    #[serde(rename = "icc_3_1")]
    Icc31,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IccEstimate {
    pub variant: IccVariant,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub level: f64,
    /// Zero between-subject variance: value is reported as 0 with a [0, 0] interval.
    pub degenerate: bool,
}

/// Mean squares of the subjects × sessions two-way layout without replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSquares {
    pub n: usize,
    /// between subjects (rows)
    pub msr: f64,
    /// between sessions (columns)
    pub msc: f64,
    /// residual
    pub mse: f64,
}

const SESSIONS: f64 = 2.0;

pub fn mean_squares(sample: &PairedSample) -> MeanSquares {
    let n = sample.n();
    let nf = n as f64;
    let pairs = sample.pairs();
    let grand = pairs.iter().map(|&(a, b)| a + b).sum::<f64>() / (SESSIONS * nf);
    // session effect: mean test−retest difference
    let mean_diff = pairs.iter().map(|&(a, b)| a - b).sum::<f64>() / nf;

    let mut ss_rows = 0.0;
    let mut ss_err = 0.0;
    for &(a, b) in pairs {
        ss_rows += (0.5 * (a + b) - grand).powi(2);
        // residuals are ±((a − b) − mean_diff) / 2 in the two cells
        ss_err += ((a - b) - mean_diff).powi(2);
    }
    ss_rows *= SESSIONS;
    ss_err *= 0.5;
    let ss_cols = 0.5 * nf * mean_diff * mean_diff;

    MeanSquares {
        n,
        msr: ss_rows / (nf - 1.0),
        msc: ss_cols / (SESSIONS - 1.0),
        mse: ss_err / ((nf - 1.0) * (SESSIONS - 1.0)),
    }
}

pub fn icc(sample: &PairedSample, variant: IccVariant) -> Result<IccEstimate, EstimatorError> {
    let n = sample.n();
    if n < 3 {
        return Err(EstimatorError::InsufficientSample { n, required: 3 });
    }
    let ms = mean_squares(sample);
    let estimate = |value, ci_low, ci_high, degenerate| IccEstimate {
        variant,
        value,
        ci_low,
        ci_high,
        level: ICC_LEVEL,
        degenerate,
    };
    if ms.msr == 0.0 {
        return Ok(estimate(0.0, 0.0, 0.0, true));
    }
    let (value, lo, hi) = match variant {
        IccVariant::Icc31 => consistency(&ms),
        IccVariant::Icc21 => agreement(&ms),
    };
    Ok(estimate(value, lo, hi, false))
}

fn consistency(ms: &MeanSquares) -> (f64, f64, f64) {
    let k = SESSIONS;
    let value = (ms.msr - ms.mse) / (ms.msr + (k - 1.0) * ms.mse);
    if ms.mse == 0.0 {
        return (1.0, 1.0, 1.0);
    }
    let alpha = 1.0 - ICC_LEVEL;
    let df_rows = ms.n as f64 - 1.0;
    let df_err = df_rows * (k - 1.0);
    let f_obs = ms.msr / ms.mse;
    let f_low = f_obs / f_quantile(1.0 - alpha / 2.0, df_rows, df_err);
    let f_high = f_obs * f_quantile(1.0 - alpha / 2.0, df_err, df_rows);
    (
        value,
        (f_low - 1.0) / (f_low + k - 1.0),
        (f_high - 1.0) / (f_high + k - 1.0),
    )
}

fn agreement(ms: &MeanSquares) -> (f64, f64, f64) {
    let k = SESSIONS;
    let nf = ms.n as f64;
    let value = (ms.msr - ms.mse) / (ms.msr + (k - 1.0) * ms.mse + k * (ms.msc - ms.mse) / nf);
    if ms.mse == 0.0 && ms.msc == 0.0 {
        return (1.0, 1.0, 1.0);
    }
    let alpha = 1.0 - ICC_LEVEL;
    let df_rows = nf - 1.0;
    let a = k * value / (nf * (1.0 - value));
    let b = 1.0 + k * value * (nf - 1.0) / (nf * (1.0 - value));
    let v = (a * ms.msc + b * ms.mse).powi(2)
        / ((a * ms.msc).powi(2) / (k - 1.0) + (b * ms.mse).powi(2) / (df_rows * (k - 1.0)));
    if !(v.is_finite() && v > 0.0) {
        return (value, f64::NAN, f64::NAN);
    }
    let f_s = f_quantile(1.0 - alpha / 2.0, df_rows, v);
    let f_t = f_quantile(1.0 - alpha / 2.0, v, df_rows);
    let shared = k * ms.msc + (k * nf - k - nf) * ms.mse;
    let lo = nf * (ms.msr - f_s * ms.mse) / (f_s * shared + nf * ms.msr);
    let hi = nf * (f_t * ms.msr - ms.mse) / (shared + nf * f_t * ms.msr);
    (value, lo, hi)
}
