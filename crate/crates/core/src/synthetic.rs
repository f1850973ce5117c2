//! Deterministic synthetic long-format trial data for smoke runs and tests.
//!
//! Each subject carries a stable speed factor shared by every condition and a
//! per-session trait whose test/retest correlation is the task's
//! `reliability`. Condition means load on the trait with different weights,
//! so condition contrasts isolate it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ingest::{Session, TrialRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCondition {
    pub name: String,
    pub offset_ms: f64,
    /// Milliseconds per unit of the session trait.
    pub loading_ms: f64,
    pub base_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub task: String,
    /// Subjects with both sessions.
    pub n_subjects: usize,
    /// Extra subjects observed in session 1 only.
    pub n_dropouts: usize,
    pub reliability: f64,
    pub conditions: Vec<SyntheticCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDesign {
    pub seed: u64,
    pub trials_per_condition: usize,
    pub trial_sd_ms: f64,
    /// Probability that a trial RT is replaced by an out-of-range value.
    pub outlier_rate: f64,
    pub tasks: Vec<SyntheticTask>,
}

fn condition(name: &str, offset_ms: f64, loading_ms: f64, base_accuracy: f64) -> SyntheticCondition {
    SyntheticCondition {
        name: name.into(),
        offset_ms,
        loading_ms,
        base_accuracy,
    }
}

fn task(task: &str, n_subjects: usize, reliability: f64, conditions: Vec<SyntheticCondition>) -> SyntheticTask {
    SyntheticTask {
        task: task.into(),
        n_subjects,
        n_dropouts: 2,
        reliability,
        conditions,
    }
}

/// The design behind `fixtures/synthetic_long.csv` and `contracts/measures.json`.
pub fn smoke_design() -> SyntheticDesign {
    SyntheticDesign {
        seed: 20240611,
        trials_per_condition: 16,
        trial_sd_ms: 60.0,
        outlier_rate: 0.02,
        tasks: vec![
            task(
                "flanker",
                40,
                0.7,
                vec![
                    condition("congruent", 0.0, 20.0, 0.97),
                    condition("incongruent", 60.0, 50.0, 0.90),
                ],
            ),
            task(
                "stroop",
                40,
                0.0,
                vec![
                    condition("congruent", 0.0, 10.0, 0.97),
                    condition("incongruent", 80.0, 40.0, 0.92),
                    condition("neutral", 20.0, 10.0, 0.96),
                ],
            ),
            task(
                "posner",
                12,
                0.6,
                vec![
                    condition("valid", 0.0, 10.0, 0.98),
                    condition("invalid", 40.0, 40.0, 0.95),
                ],
            ),
            task("navon", 8, 0.5, vec![condition("global", 0.0, 30.0, 0.95)]),
            task("gonogo", 40, 0.6, vec![condition("go", 0.0, 30.0, 0.85)]),
        ],
    }
}

/// `n` tasks named `task_00..` with one `a`/`b` condition pair each and
/// reliabilities cycling through `reliabilities`.
pub fn many_task_design(seed: u64, n: usize, n_subjects: usize, reliabilities: &[f64]) -> SyntheticDesign {
    SyntheticDesign {
        seed,
        trials_per_condition: 8,
        trial_sd_ms: 60.0,
        outlier_rate: 0.01,
        tasks: (0..n)
            .map(|i| {
                task(
                    &format!("task_{i:02}"),
                    n_subjects,
                    reliabilities[i % reliabilities.len()],
                    vec![condition("a", 0.0, 20.0, 0.95), condition("b", 50.0, 40.0, 0.9)],
                )
            })
            .collect(),
    }
}

fn outlier(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        rng.random_range(50.0..199.0)
    } else {
        rng.random_range(5001.0..9000.0)
    }
}

/// Generates trial rows, ordered by task, subject, session, condition, trial.
pub fn generate(design: &SyntheticDesign) -> Vec<TrialRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    let noise = Normal::new(0.0, design.trial_sd_ms).expect("finite sd");
    let mut rows = Vec::new();
    for t in &design.tasks {
        let r = t.reliability.clamp(-1.0, 1.0);
        for s in 0..t.n_subjects + t.n_dropouts {
            let subject = format!("sub{s:03}");
            let speed: f64 = StandardNormal.sample(&mut rng);
            let a: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            let traits = [a, r * a + (1.0 - r * r).sqrt() * e];
            let sessions: &[Session] = if s < t.n_subjects {
                &[Session::First, Session::Second]
            } else {
                &[Session::First]
            };
            for &session in sessions {
                let z = traits[session as usize];
                for c in &t.conditions {
                    let mean = 500.0 + c.offset_ms + 60.0 * speed + c.loading_ms * z;
                    let p_correct = (c.base_accuracy + 0.03 * z).clamp(0.5, 0.999);
                    let acc = Bernoulli::new(p_correct).expect("probability in range");
                    for _ in 0..design.trials_per_condition {
                        let rt = if rng.random_bool(design.outlier_rate) {
                            outlier(&mut rng)
                        } else {
                            (mean + noise.sample(&mut rng)).max(1.0)
                        };
                        rows.push(TrialRow {
                            subject_id: subject.clone(),
                            task: t.task.clone(),
                            session,
                            condition: c.name.clone(),
                            rt_ms: (rt * 10.0).round().max(1.0) / 10.0,
                            accuracy: Some(acc.sample(&mut rng)),
                        });
                    }
                }
            }
        }
    }
    rows
}
