//! The 24-cell specification grid and the per-cell estimation engine.
//!
//! [`run_cell`] is the only place a measure is estimated, so the primary
//! pipeline (the default specification) and the multiverse agree bitwise.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap, SeedKey, DEFAULT_ALPHA};
use crate::estimators::{icc, CorrMethod, IccVariant, NlrEstimator, SearchMethod};
use crate::inference::{headline_pass, ReliabilityEstimate, Status};
use crate::sample::PairedSample;
use crate::stats::{iqr, median};

pub const K_LEVELS: [usize; 4] = [3, 4, 5, 6];
pub const N_MIN_LEVELS: [usize; 3] = [10, 15, 20];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Specification {
    pub k: usize,
    pub corr_method: CorrMethod,
    pub n_min: usize,
    pub spec_id: String,
}

impl Specification {
    pub fn new(k: usize, corr_method: CorrMethod, n_min: usize) -> Self {
        Self {
            k,
            corr_method,
            n_min,
            spec_id: format!("k{k}_{}_nmin{n_min}", corr_method.as_str()),
        }
    }

    /// `(k = 4, pearson, n_min = 10)`.
    pub fn default_spec() -> Self {
        Self::new(4, CorrMethod::Pearson, 10)
    }
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_id)
    }
}

/// All specifications, ordered by (k, corr_method, n_min).
pub fn build_grid() -> Vec<Specification> {
    let mut grid = Vec::with_capacity(24);
    for k in K_LEVELS {
        for corr in CorrMethod::ALL {
            for n_min in N_MIN_LEVELS {
                grid.push(Specification::new(k, corr, n_min));
            }
        }
    }
    grid
}

/// Run-wide settings shared by every cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSettings {
    pub base_seed: u64,
    /// Bootstrap replicates; 0 yields point estimates only.
    pub bootstrap_b: usize,
    pub search: SearchMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiverseCell {
    pub spec: Specification,
    pub estimate: ReliabilityEstimate,
}

/// Estimates one measure under one specification. Estimator or bootstrap
/// failures demote the cell to `degenerate`; they never abort.
pub fn run_cell(spec: &Specification, sample: &PairedSample, settings: &CellSettings) -> MultiverseCell {
    let measure_id = sample.measure_id();
    let n = sample.n();
    let cell = |estimate| MultiverseCell {
        spec: spec.clone(),
        estimate,
    };
    if n < spec.n_min {
        return cell(ReliabilityEstimate::unestimated(
            measure_id,
            &spec.spec_id,
            n,
            Status::InsufficientN,
        ));
    }
    let degenerate = || ReliabilityEstimate::unestimated(measure_id, &spec.spec_id, n, Status::Degenerate);

    let estimator = NlrEstimator::new(spec.k, spec.corr_method, settings.search);
    let Ok(mi) = estimator.estimate(sample) else {
        return cell(degenerate());
    };
    let nlr = mi.nlr();
    let icc21 = icc(sample, IccVariant::Icc21).ok();
    let icc31 = icc(sample, IccVariant::Icc31).ok();
    let mut est = ReliabilityEstimate {
        rho: Some(mi.rho),
        mi_ksg: Some(mi.mi_ksg),
        mi_gauss: Some(mi.mi_gauss),
        nlr_delta: Some(nlr.delta),
        nlr_ratio: nlr.ratio,
        icc_2_1: icc21.map(|e| e.value),
        icc_2_1_low: icc21.map(|e| e.ci_low),
        icc_2_1_high: icc21.map(|e| e.ci_high),
        icc_3_1: icc31.map(|e| e.value),
        ..ReliabilityEstimate::unestimated(measure_id, &spec.spec_id, n, Status::Ok)
    };
    if settings.bootstrap_b > 0 {
        let key = SeedKey::derive(settings.base_seed, measure_id, &spec.spec_id);
        let statistic = |s: &PairedSample| estimator.delta(s);
        match bootstrap(sample, &statistic, nlr.delta, settings.bootstrap_b, &key, DEFAULT_ALPHA) {
            Ok(b) => {
                est.ci_low = Some(b.ci_low);
                est.ci_high = Some(b.ci_high);
                est.method = Some(b.method);
                est.b_effective = Some(b.b_effective);
                est.p = Some(b.p_one_sided);
                est.headline_pass = headline_pass(b.ci_low);
            }
            Err(_) => return cell(degenerate()),
        }
    }
    cell(est)
}

/// Every (specification, measure) cell, ordered by grid position then sample order.
pub fn run_grid(grid: &[Specification], samples: &[PairedSample], settings: &CellSettings) -> Vec<MultiverseCell> {
    let jobs: Vec<(&Specification, &PairedSample)> = grid
        .iter()
        .flat_map(|spec| samples.iter().map(move |s| (spec, s)))
        .collect();
    jobs.into_par_iter()
        .map(|(spec, sample)| run_cell(spec, sample, settings))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub axis: String,
    pub level: String,
    pub cells: usize,
    pub estimable: usize,
    pub pass_count: usize,
    /// `"<passes> / <estimable>"`.
    pub pass_label: String,
    pub median_nlr_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiverseSummary {
    pub total_cells: usize,
    pub estimable: usize,
    pub insufficient_n: usize,
    pub degenerate: usize,
    pub pass_count: usize,
    pub grand_median_nlr_delta: Option<f64>,
    pub grand_iqr_nlr_delta: Option<[f64; 2]>,
    pub marginals: Vec<Marginal>,
}

fn marginal<'a>(axis: &str, level: String, cells: impl Iterator<Item = &'a MultiverseCell>) -> Marginal {
    let cells: Vec<_> = cells.collect();
    let ok: Vec<_> = cells.iter().filter(|c| c.estimate.status == Status::Ok).collect();
    let deltas: Vec<f64> = ok.iter().filter_map(|c| c.estimate.nlr_delta).collect();
    let pass_count = cells.iter().filter(|c| c.estimate.headline_pass).count();
    Marginal {
        axis: axis.to_string(),
        pass_label: format!("{pass_count} / {}", ok.len()),
        level,
        cells: cells.len(),
        estimable: ok.len(),
        pass_count,
        median_nlr_delta: median(&deltas),
    }
}

/// Per-axis-level marginals plus grand median and IQR over estimable cells.
pub fn summarize(cells: &[MultiverseCell]) -> MultiverseSummary {
    let mut marginals = Vec::new();
    for k in K_LEVELS {
        marginals.push(marginal("k", k.to_string(), cells.iter().filter(|c| c.spec.k == k)));
    }
    for corr in CorrMethod::ALL {
        marginals.push(marginal(
            "corr_method",
            corr.as_str().to_string(),
            cells.iter().filter(|c| c.spec.corr_method == corr),
        ));
    }
    for n_min in N_MIN_LEVELS {
        marginals.push(marginal(
            "n_min",
            n_min.to_string(),
            cells.iter().filter(|c| c.spec.n_min == n_min),
        ));
    }
    let count = |s: Status| cells.iter().filter(|c| c.estimate.status == s).count();
    let deltas: Vec<f64> = cells
        .iter()
        .filter(|c| c.estimate.status == Status::Ok)
        .filter_map(|c| c.estimate.nlr_delta)
        .collect();
    MultiverseSummary {
        total_cells: cells.len(),
        estimable: count(Status::Ok),
        insufficient_n: count(Status::InsufficientN),
        degenerate: count(Status::Degenerate),
        pass_count: cells.iter().filter(|c| c.estimate.headline_pass).count(),
        grand_median_nlr_delta: median(&deltas),
        grand_iqr_nlr_delta: iqr(&deltas),
        marginals,
    }
}
