//! The headline rule and Benjamini–Hochberg adjustment over the primary tier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bootstrap::IntervalMethod;
use crate::registry::{Contract, RegistryError};
use crate::stats::{iqr, median};

pub const DEFAULT_Q_STAR: f64 = 0.05;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("p-value {value} at position {index} is outside [0, 1]")]
    InvalidP { index: usize, value: f64 },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InsufficientN,
    Degenerate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::InsufficientN => "insufficient_n",
            Status::Degenerate => "degenerate",
        }
    }
}

/// One measure under one specification. Inferential fields are `None` unless
/// `status == Ok`; `q` is filled in by [`apply_primary_inference`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityEstimate {
    pub measure_id: String,
    pub spec_id: String,
    pub n: usize,
    pub rho: Option<f64>,
    pub mi_ksg: Option<f64>,
    pub mi_gauss: Option<f64>,
    pub nlr_delta: Option<f64>,
    pub nlr_ratio: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub method: Option<IntervalMethod>,
    pub b_effective: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub icc_2_1: Option<f64>,
    pub icc_2_1_low: Option<f64>,
    pub icc_2_1_high: Option<f64>,
    pub icc_3_1: Option<f64>,
    pub status: Status,
    pub headline_pass: bool,
}

impl ReliabilityEstimate {
    /// An estimate carrying only identity, size and a non-ok status.
    pub fn unestimated(measure_id: &str, spec_id: &str, n: usize, status: Status) -> Self {
        Self {
            measure_id: measure_id.to_string(),
            spec_id: spec_id.to_string(),
            n,
            rho: None,
            mi_ksg: None,
            mi_gauss: None,
            nlr_delta: None,
            nlr_ratio: None,
            ci_low: None,
            ci_high: None,
            method: None,
            b_effective: None,
            p: None,
            q: None,
            icc_2_1: None,
            icc_2_1_low: None,
            icc_2_1_high: None,
            icc_3_1: None,
            status,
            headline_pass: false,
        }
    }
}

/// Pass iff the lower CI bound is strictly positive.
pub fn headline_pass(ci_low: f64) -> bool {
    ci_low > 0.0
}

/// Benjamini–Hochberg step-up q-values, returned in input order.
pub fn bh_adjust(p_values: &[f64]) -> Result<Vec<f64>, InferenceError> {
    if let Some((index, &value)) = p_values.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(InferenceError::InvalidP { index, value });
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]).then(a.cmp(&b)));
    let mut q = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        running = running.min(p_values[i] * (m as f64 / (rank + 1) as f64));
        q[i] = running;
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceSummary {
    pub n_measures: usize,
    pub n_estimable: usize,
    pub n_insufficient: usize,
    pub n_degenerate: usize,
    pub pass_count: usize,
    pub q_star: f64,
    pub fdr_discoveries: usize,
    pub min_q: Option<f64>,
    pub median_nlr_delta: Option<f64>,
    pub iqr_nlr_delta: Option<[f64; 2]>,
    pub median_icc_2_1: Option<f64>,
    pub iqr_icc_2_1: Option<[f64; 2]>,
    pub median_ci_width: Option<f64>,
    /// Median CI half-width.
    pub median_mde: Option<f64>,
}

/// Checks eligibility, sets `q` and `headline_pass`, and summarises the pool.
///
/// Only `Ok` estimates enter the BH pool; others get neither p nor q.
pub fn apply_primary_inference(
    estimates: &mut [ReliabilityEstimate],
    contract: &Contract,
    q_star: f64,
) -> Result<InferenceSummary, InferenceError> {
    for e in estimates.iter() {
        contract.assert_headline_eligible(&e.measure_id)?;
    }
    let pool: Vec<usize> = estimates
        .iter()
        .enumerate()
        .filter(|(_, e)| e.status == Status::Ok && e.p.is_some())
        .map(|(i, _)| i)
        .collect();
    let p: Vec<f64> = pool.iter().map(|&i| estimates[i].p.expect("filtered")).collect();
    let q = bh_adjust(&p)?;
    for e in estimates.iter_mut() {
        if e.status != Status::Ok {
            e.p = None;
            e.q = None;
        }
        e.headline_pass = e.status == Status::Ok && e.ci_low.is_some_and(headline_pass);
    }
    for (&i, &qi) in pool.iter().zip(&q) {
        estimates[i].q = Some(qi);
    }

    let ok: Vec<&ReliabilityEstimate> = estimates.iter().filter(|e| e.status == Status::Ok).collect();
    let collect = |f: fn(&ReliabilityEstimate) -> Option<f64>| ok.iter().filter_map(|e| f(e)).collect::<Vec<_>>();
    let deltas = collect(|e| e.nlr_delta);
    let iccs = collect(|e| e.icc_2_1);
    let widths = collect(|e| Some(e.ci_high? - e.ci_low?));
    let halves: Vec<f64> = widths.iter().map(|w| w / 2.0).collect();
    let count = |s: Status| estimates.iter().filter(|e| e.status == s).count();
    Ok(InferenceSummary {
        n_measures: estimates.len(),
        n_estimable: ok.len(),
        n_insufficient: count(Status::InsufficientN),
        n_degenerate: count(Status::Degenerate),
        pass_count: estimates.iter().filter(|e| e.headline_pass).count(),
        q_star,
        fdr_discoveries: q.iter().filter(|&&v| v <= q_star).count(),
        min_q: q.iter().copied().reduce(f64::min),
        median_nlr_delta: median(&deltas),
        iqr_nlr_delta: iqr(&deltas),
        median_icc_2_1: median(&iccs),
        iqr_icc_2_1: iqr(&iccs),
        median_ci_width: median(&widths),
        median_mde: median(&halves),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force step-up: q_i = min over j with p_j >= p_i of p_j * m / rank_j.
    fn bh_oracle(p: &[f64]) -> Vec<f64> {
        let m = p.len() as f64;
        p.iter()
            .map(|&pi| {
                p.iter()
                    .filter(|&&pj| pj >= pi)
                    .map(|&pj| {
                        let rank = p.iter().filter(|&&x| x <= pj).count() as f64;
                        (pj * m / rank).min(1.0)
                    })
                    .fold(1.0, f64::min)
            })
            .collect()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn bh_examples() {
        assert!(close(&bh_adjust(&[0.005, 0.04, 0.03]).unwrap(), &[0.015, 0.04, 0.04]));
        assert_eq!(bh_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(bh_adjust(&[1.0; 4]).unwrap(), vec![1.0; 4]);
        assert!(bh_adjust(&[]).unwrap().is_empty());
        assert!(matches!(
            bh_adjust(&[0.1, 1.5]),
            Err(InferenceError::InvalidP { index: 1, .. })
        ));
        assert!(bh_adjust(&[f64::NAN]).is_err());
    }

    #[test]
    fn headline_rule_is_strict() {
        assert!(headline_pass(0.01));
        assert!(!headline_pass(0.0));
        assert!(!headline_pass(-0.1));
    }

    fn contract(ids: &[&str]) -> Contract {
        let entries: Vec<String> = ids
            .iter()
            .map(|id| {
                format!(
                    r#"{{"measure_id":"{id}","dataset_id":"d","tier":"primary","description":"",
                       "aggregation":{{"task":"t","outcome":"mean_rt","condition_a":"c","unit":"ms"}}}}"#
                )
            })
            .collect();
        let json = format!(
            r#"{{"version":"1","declared_counts":{{"primary":{}}},"entries":[{}]}}"#,
            ids.len(),
            entries.join(",")
        );
        Contract::from_json(json.as_bytes()).unwrap()
    }

    fn ok_estimate(id: &str, ci_low: f64, p: f64) -> ReliabilityEstimate {
        ReliabilityEstimate {
            nlr_delta: Some(ci_low + 0.1),
            ci_low: Some(ci_low),
            ci_high: Some(ci_low + 0.2),
            p: Some(p),
            icc_2_1: Some(0.6),
            ..ReliabilityEstimate::unestimated(id, "k4_pearson_nmin10", 50, Status::Ok)
        }
    }

    #[test]
    fn all_negative_bounds_pass_nothing() {
        let ids: Vec<String> = (0..50).map(|i| format!("m{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let mut est: Vec<_> = refs.iter().map(|id| ok_estimate(id, -0.2, 0.9)).collect();
        let s = apply_primary_inference(&mut est, &contract(&refs), DEFAULT_Q_STAR).unwrap();
        assert_eq!(s.pass_count, 0);
        assert_eq!(s.n_estimable, 50);
        assert!((s.median_ci_width.unwrap() - 0.2).abs() < 1e-12);
        assert!((s.median_mde.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn single_passing_estimate() {
        let mut est = vec![ok_estimate("a", 0.05, 0.01)];
        let s = apply_primary_inference(&mut est, &contract(&["a"]), DEFAULT_Q_STAR).unwrap();
        assert_eq!(s.pass_count, 1);
        assert_eq!(est[0].q, Some(0.01));
        assert_eq!(s.min_q, Some(0.01));
        assert_eq!(s.fdr_discoveries, 1);
    }

    #[test]
    fn non_ok_estimates_stay_out_of_pool() {
        let mut est = vec![
            ok_estimate("a", -0.1, 0.4),
            ReliabilityEstimate {
                p: Some(0.001),
                ..ReliabilityEstimate::unestimated("b", "s", 8, Status::InsufficientN)
            },
        ];
        let s = apply_primary_inference(&mut est, &contract(&["a", "b"]), DEFAULT_Q_STAR).unwrap();
        assert_eq!(est[0].q, Some(0.4));
        assert_eq!((est[1].p, est[1].q), (None, None));
        assert_eq!((s.n_estimable, s.n_insufficient), (1, 1));
    }

    #[test]
    fn empty_pool() {
        let mut est = vec![ReliabilityEstimate::unestimated("a", "s", 3, Status::Degenerate)];
        let s = apply_primary_inference(&mut est, &contract(&["a"]), DEFAULT_Q_STAR).unwrap();
        assert_eq!(s.pass_count, 0);
        assert_eq!(s.min_q, None);
        assert_eq!(s.median_nlr_delta, None);
    }

    #[test]
    fn ineligible_measure_aborts() {
        let mut est = vec![ok_estimate("ghost", 0.1, 0.01)];
        assert!(matches!(
            apply_primary_inference(&mut est, &contract(&["a"]), DEFAULT_Q_STAR),
            Err(InferenceError::Registry(RegistryError::UnknownMeasure(_)))
        ));
    }

    proptest! {
        #[test]
        fn bh_matches_oracle_and_bounds_p(p in prop::collection::vec(0.0f64..=1.0, 1..40)) {
            let q = bh_adjust(&p).unwrap();
            prop_assert!(close(&q, &bh_oracle(&p)));
            for (pi, qi) in p.iter().zip(&q) {
                prop_assert!(qi >= pi && *qi <= 1.0);
            }
        }

        #[test]
        fn headline_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(!headline_pass(lo) || headline_pass(hi));
        }
    }
}
