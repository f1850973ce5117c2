//! Trial-level ingestion: digest checks, RT filtering, per-session
//! aggregation and test/retest pairing.

pub mod digest;
pub mod long_csv;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::{AggregationRecipe, Contract, MeasureContract, Outcome};
use crate::sample::PairedSample;

pub use digest::{sha256_file, sha256_hex, verify_archive, ArchiveEvidence};
pub use long_csv::{read_long_csv, read_long_csv_file, write_long_csv, ArchiveAdapter, LongData};

pub const DEFAULT_MIN_RT_MS: f64 = 200.0;
pub const DEFAULT_MAX_RT_MS: f64 = 5000.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("hash mismatch for {path}: expected {expected}, observed {observed}")]
    HashMismatch {
        path: String,
        expected: String,
        observed: String,
    },
    #[error("no raw archives are listed in {0}")]
    NoArchives(String),
    #[error("input schema error: {0}")]
    Schema(String),
    #[error("measure '{0}' needs an accuracy column, but the data has none")]
    MissingAccuracy(String),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Session {
    First,
    Second,
}

impl Session {
    pub fn as_str(self) -> &'static str {
        match self {
            Session::First => "1",
            Session::Second => "2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub subject_id: String,
    pub task: String,
    pub session: Session,
    pub condition: String,
    /// Finite and > 0.
    pub rt_ms: f64,
    pub accuracy: Option<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub below_min: usize,
    pub above_max: usize,
    pub kept: usize,
}

impl FilterCounts {
    pub fn total(&self) -> usize {
        self.below_min + self.above_max + self.kept
    }
}

/// Keeps trials with `min_ms <= rt_ms <= max_ms`; the bounds themselves survive.
pub fn filter_trials(rows: &[TrialRow], min_ms: f64, max_ms: f64) -> (Vec<TrialRow>, FilterCounts) {
    let mut counts = FilterCounts::default();
    let kept = rows
        .iter()
        .filter(|r| {
            if r.rt_ms < min_ms {
                counts.below_min += 1;
                false
            } else if r.rt_ms > max_ms {
                counts.above_max += 1;
                false
            } else {
                counts.kept += 1;
                true
            }
        })
        .cloned()
        .collect();
    (kept, counts)
}

pub type ScoreKey = (String, Session);

/// Per-(subject, session) scores for one recipe plus what was left out.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Aggregation {
    pub scores: BTreeMap<ScoreKey, f64>,
    /// `subject/session/condition` cells with no usable trials.
    pub empty_cells: Vec<String>,
    /// `subject/session` keys whose score came out non-finite.
    pub non_finite: Vec<String>,
}

/// Order-independent mean: values are sorted before summation.
fn exact_mean(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values.iter().sum::<f64>() / values.len() as f64)
}

/// Aggregates filtered rows of `recipe.task` into one score per subject-session.
pub fn aggregate_scores(rows: &[TrialRow], recipe: &AggregationRecipe) -> Aggregation {
    type Cell = (String, Session, String);
    let use_accuracy = recipe.needs_accuracy();

    let mut keys: BTreeSet<ScoreKey> = BTreeSet::new();
    let mut cells: BTreeMap<Cell, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.task == recipe.task) {
        keys.insert((r.subject_id.clone(), r.session));
        let value = if use_accuracy {
            match r.accuracy {
                Some(hit) => f64::from(u8::from(hit)),
                None => continue,
            }
        } else {
            r.rt_ms
        };
        cells
            .entry((r.subject_id.clone(), r.session, r.condition.clone()))
            .or_default()
            .push(value);
    }

    let mut out = Aggregation::default();
    for (subject, session) in keys {
        let cell_mean = |condition: &str, out: &mut Aggregation| {
            let key = (subject.clone(), session, condition.to_string());
            let mean = cells.get(&key).cloned().and_then(exact_mean);
            if mean.is_none() {
                out.empty_cells
                    .push(format!("{subject}/{}/{condition}", session.as_str()));
            }
            mean
        };
        let score = match recipe.outcome {
            Outcome::MeanRt | Outcome::AccuracyProportion => cell_mean(&recipe.condition_a, &mut out),
            Outcome::ConditionContrast => {
                let b = recipe.condition_b.as_deref().expect("validated recipe");
                let a = cell_mean(&recipe.condition_a, &mut out);
                let b = cell_mean(b, &mut out);
                a.zip(b).map(|(a, b)| a - b)
            }
        };
        match score {
            Some(s) if s.is_finite() => {
                out.scores.insert((subject, session), s);
            }
            Some(_) => out.non_finite.push(format!("{subject}/{}", session.as_str())),
            None => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub sample: PairedSample,
    /// Subjects with a score in only one session, sorted.
    pub dropped_subjects: Vec<String>,
}

/// One (session 1, session 2) pair per subject having both, ordered by subject id.
pub fn pair_sessions(measure_id: &str, scores: &BTreeMap<ScoreKey, f64>) -> Pairing {
    let subjects: BTreeSet<&str> = scores.keys().map(|(s, _)| s.as_str()).collect();
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    for subject in subjects {
        let first = scores.get(&(subject.to_string(), Session::First));
        let second = scores.get(&(subject.to_string(), Session::Second));
        match (first, second) {
            (Some(&a), Some(&b)) => pairs.push((a, b)),
            _ => dropped.push(subject.to_string()),
        }
    }
    Pairing {
        sample: PairedSample::new(measure_id, pairs).expect("aggregated scores are finite"),
        dropped_subjects: dropped,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureEvidence {
    pub task: String,
    pub n_pairs: usize,
    pub dropped_missing_session: Vec<String>,
    pub empty_cells: Vec<String>,
    pub non_finite_scores: Vec<String>,
}

/// Everything recorded about how the analysed samples were derived.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestEvidence {
    pub archives: Vec<ArchiveEvidence>,
    pub source_path: String,
    pub source_digest: String,
    pub synthetic: bool,
    pub row_count: usize,
    pub rejected_non_finite: usize,
    pub min_rt_ms: f64,
    pub max_rt_ms: f64,
    pub filter_counts: BTreeMap<String, FilterCounts>,
    pub measures: BTreeMap<String, MeasureEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtBounds {
    pub min_ms: f64,
    pub max_ms: f64,
}

impl Default for RtBounds {
    fn default() -> Self {
        Self {
            min_ms: DEFAULT_MIN_RT_MS,
            max_ms: DEFAULT_MAX_RT_MS,
        }
    }
}

/// Builds one paired sample per contract entry, in contract order.
///
/// Filtering is applied per task; every entry's task is aggregated from the
/// same filtered rows.
pub fn prepare_samples(
    data: &LongData,
    contract: &Contract,
    bounds: &RtBounds,
    evidence: &mut IngestEvidence,
) -> Result<Vec<(MeasureContract, PairedSample)>, IngestError> {
    evidence.row_count = data.rows.len();
    evidence.rejected_non_finite = data.rejected_non_finite;
    evidence.min_rt_ms = bounds.min_ms;
    evidence.max_rt_ms = bounds.max_ms;

    let mut by_task: BTreeMap<&str, Vec<TrialRow>> = BTreeMap::new();
    for r in &data.rows {
        by_task.entry(r.task.as_str()).or_default().push(r.clone());
    }
    let mut filtered: BTreeMap<String, Vec<TrialRow>> = BTreeMap::new();
    for (task, rows) in by_task {
        let (kept, counts) = filter_trials(&rows, bounds.min_ms, bounds.max_ms);
        evidence.filter_counts.insert(task.to_string(), counts);
        filtered.insert(task.to_string(), kept);
    }

    let empty = Vec::new();
    let mut out = Vec::with_capacity(contract.entries().len());
    for entry in contract.entries() {
        let recipe = &entry.aggregation;
        if recipe.needs_accuracy() && !data.has_accuracy {
            return Err(IngestError::MissingAccuracy(entry.measure_id.clone()));
        }
        let rows = filtered.get(&recipe.task).unwrap_or(&empty);
        let agg = aggregate_scores(rows, recipe);
        let pairing = pair_sessions(&entry.measure_id, &agg.scores);
        evidence.measures.insert(
            entry.measure_id.clone(),
            MeasureEvidence {
                task: recipe.task.clone(),
                n_pairs: pairing.sample.n(),
                dropped_missing_session: pairing.dropped_subjects,
                empty_cells: agg.empty_cells,
                non_finite_scores: agg.non_finite,
            },
        );
        out.push((entry.clone(), pairing.sample));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::Unit;
    use proptest::prelude::*;

    fn row(subject: &str, session: Session, condition: &str, rt: f64, acc: Option<bool>) -> TrialRow {
        TrialRow {
            subject_id: subject.into(),
            task: "flanker".into(),
            session,
            condition: condition.into(),
            rt_ms: rt,
            accuracy: acc,
        }
    }

    fn recipe(outcome: Outcome, a: &str, b: Option<&str>, unit: Unit) -> AggregationRecipe {
        AggregationRecipe {
            task: "flanker".into(),
            outcome,
            condition_a: a.into(),
            condition_b: b.map(Into::into),
            unit,
        }
    }

    #[test]
    fn filter_boundaries() {
        let rows: Vec<_> = [150.0, 200.0, 5000.0, 5001.0, 800.0]
            .iter()
            .map(|&rt| row("a", Session::First, "c", rt, None))
            .collect();
        let (kept, counts) = filter_trials(&rows, 200.0, 5000.0);
        assert_eq!(
            kept.iter().map(|r| r.rt_ms).collect::<Vec<_>>(),
            vec![200.0, 5000.0, 800.0]
        );
        assert_eq!(
            counts,
            FilterCounts {
                below_min: 1,
                above_max: 1,
                kept: 3
            }
        );
        let (none, zero) = filter_trials(&[], 200.0, 5000.0);
        assert!(none.is_empty());
        assert_eq!(zero.total(), 0);
    }

    #[test]
    fn mean_rt_accuracy_and_contrast() {
        let rows = vec![
            row("a", Session::First, "congruent", 400.0, Some(true)),
            row("a", Session::First, "congruent", 600.0, Some(true)),
            row("a", Session::First, "congruent", 500.0, Some(false)),
            row("a", Session::First, "congruent", 500.0, Some(true)),
            row("a", Session::First, "incongruent", 550.0, Some(true)),
        ];
        let rt = aggregate_scores(&rows[..2], &recipe(Outcome::MeanRt, "congruent", None, Unit::Ms));
        assert_eq!(rt.scores[&("a".into(), Session::First)], 500.0);

        let acc = aggregate_scores(
            &rows[..4],
            &recipe(Outcome::AccuracyProportion, "congruent", None, Unit::Proportion),
        );
        assert_eq!(acc.scores[&("a".into(), Session::First)], 0.75);

        let contrast = aggregate_scores(
            &rows,
            &recipe(Outcome::ConditionContrast, "incongruent", Some("congruent"), Unit::Ms),
        );
        assert_eq!(contrast.scores[&("a".into(), Session::First)], 50.0);
    }

    #[test]
    fn empty_cell_yields_no_score() {
        let rows = vec![row("a", Session::First, "congruent", 400.0, None)];
        let agg = aggregate_scores(
            &rows,
            &recipe(Outcome::ConditionContrast, "incongruent", Some("congruent"), Unit::Ms),
        );
        assert!(agg.scores.is_empty());
        assert_eq!(agg.empty_cells, vec!["a/1/incongruent".to_string()]);
    }

    #[test]
    fn pairing_drops_incomplete_subjects() {
        let mut scores = BTreeMap::new();
        scores.insert(("A".to_string(), Session::First), 10.0);
        scores.insert(("A".to_string(), Session::Second), 12.0);
        scores.insert(("B".to_string(), Session::First), 9.0);
        let p = pair_sessions("m", &scores);
        assert_eq!(p.sample.pairs(), &[(10.0, 12.0)]);
        assert_eq!(p.dropped_subjects, vec!["B".to_string()]);

        let empty = pair_sessions("m", &BTreeMap::new());
        assert_eq!(empty.sample.n(), 0);

        let mut full = BTreeMap::new();
        for s in 0..47 {
            full.insert((format!("s{s:02}"), Session::First), s as f64);
            full.insert((format!("s{s:02}"), Session::Second), s as f64 + 1.0);
        }
        assert_eq!(pair_sessions("m", &full).sample.n(), 47);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<TrialRow>> {
        prop::collection::vec((0u8..6, any::<bool>(), 0u8..2, 1.0f64..8000.0, any::<bool>()), 0..200).prop_map(|v| {
            v.into_iter()
                .map(|(s, sess, c, rt, acc)| {
                    row(
                        &format!("s{s}"),
                        if sess { Session::First } else { Session::Second },
                        if c == 0 { "congruent" } else { "incongruent" },
                        rt,
                        Some(acc),
                    )
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn filter_counts_partition_input(rows in arb_rows()) {
            let (kept, counts) = filter_trials(&rows, DEFAULT_MIN_RT_MS, DEFAULT_MAX_RT_MS);
            prop_assert_eq!(counts.total(), rows.len());
            prop_assert_eq!(kept.len(), counts.kept);
        }

        #[test]
        fn aggregation_ignores_trial_order(rows in arb_rows(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            for r in [
                recipe(Outcome::MeanRt, "congruent", None, Unit::Ms),
                recipe(Outcome::ConditionContrast, "incongruent", Some("congruent"), Unit::Proportion),
            ] {
                prop_assert_eq!(aggregate_scores(&rows, &r), aggregate_scores(&shuffled, &r));
            }
        }

        #[test]
        fn pairs_never_exceed_subjects(rows in arb_rows()) {
            let agg = aggregate_scores(&rows, &recipe(Outcome::MeanRt, "congruent", None, Unit::Ms));
            let subjects: BTreeSet<_> = rows.iter().map(|r| r.subject_id.clone()).collect();
            prop_assert!(pair_sessions("m", &agg.scores).sample.n() <= subjects.len());
        }
    }
}
