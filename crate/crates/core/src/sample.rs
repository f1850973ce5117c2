//! The paired test/retest sample every estimator consumes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("pair {index} of measure '{measure_id}' is not finite ({x1}, {x2})")]
pub struct NonFinitePair {
    pub measure_id: String,
    pub index: usize,
    pub x1: f64,
    pub x2: f64,
}

/// One measure's per-subject (session 1, session 2) scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    measure_id: String,
    pairs: Vec<(f64, f64)>,
}

impl PairedSample {
    pub fn new(measure_id: impl Into<String>, pairs: Vec<(f64, f64)>) -> Result<Self, NonFinitePair> {
        let measure_id = measure_id.into();
        if let Some((index, &(x1, x2))) = pairs
            .iter()
            .enumerate()
            .find(|(_, (a, b))| !a.is_finite() || !b.is_finite())
        {
            return Err(NonFinitePair {
                measure_id,
                index,
                x1,
                x2,
            });
        }
        Ok(Self { measure_id, pairs })
    }

    /// Convenience for tests and generators: builds from two equal-length columns.
    pub fn from_columns(measure_id: impl Into<String>, x1: &[f64], x2: &[f64]) -> Result<Self, NonFinitePair> {
        assert_eq!(x1.len(), x2.len(), "column lengths differ");
        Self::new(measure_id, x1.iter().copied().zip(x2.iter().copied()).collect())
    }

    pub fn measure_id(&self) -> &str {
        &self.measure_id
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn x1(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn x2(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }

    /// Sample made of the pairs at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            measure_id: self.measure_id.clone(),
            pairs: indices.iter().map(|&i| self.pairs[i]).collect(),
        }
    }

    /// Sample with pair `skip` removed.
    pub fn without(&self, skip: usize) -> Self {
        Self {
            measure_id: self.measure_id.clone(),
            pairs: self
                .pairs
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &p)| p)
                .collect(),
        }
    }

    /// Applies a transform to each margin, keeping the pairing.
    pub fn map_margins(&self, f1: impl Fn(f64) -> f64, f2: impl Fn(f64) -> f64) -> Self {
        Self {
            measure_id: self.measure_id.clone(),
            pairs: self.pairs.iter().map(|&(a, b)| (f1(a), f2(b))).collect(),
        }
    }
}
