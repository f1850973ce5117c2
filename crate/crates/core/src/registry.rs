//! Measure-tier contracts.
//!
//! A contract is a JSON document fixing, before any analysis, which measures
//! exist, how each is aggregated from trials and which tier it belongs to.
//! Only `primary` measures may back a headline claim.
//!
//! ```json
//! {
//!   "version": "1.0.0",
//!   "declared_counts": {"canonical": 0, "primary": 1, "sensitivity": 0, "descriptive": 0, "excluded": 0},
//!   "entries": [
//!     {
//!       "measure_id": "flanker_rt_cost",
//!       "dataset_id": "example",
//!       "tier": "primary",
//!       "aggregation": {"task": "flanker", "outcome": "condition_contrast",
//!                       "condition_a": "incongruent", "condition_b": "congruent", "unit": "ms"},
//!       "description": "Flanker RT interference cost"
//!     }
//!   ]
//! }
//! ```
//!
//! Tiers missing from `declared_counts` are declared as zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Canonical,
    Primary,
    Sensitivity,
    Descriptive,
    Excluded,
}

impl Tier {
    pub const ALL: [Tier; 5] = [
        Tier::Canonical,
        Tier::Primary,
        Tier::Sensitivity,
        Tier::Descriptive,
        Tier::Excluded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Canonical => "canonical",
            Tier::Primary => "primary",
            Tier::Sensitivity => "sensitivity",
            Tier::Descriptive => "descriptive",
            Tier::Excluded => "excluded",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    MeanRt,
    AccuracyProportion,
    ConditionContrast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Ms,
    Proportion,
}

/// How trial rows of one task become a per-subject, per-session score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationRecipe {
    pub task: String,
    pub outcome: Outcome,
    pub condition_a: String,
    #[serde(default)]
    pub condition_b: Option<String>,
    pub unit: Unit,
}

impl AggregationRecipe {
    pub fn validate(&self) -> Result<(), String> {
        match (self.outcome, &self.condition_b) {
            (Outcome::ConditionContrast, None) => return Err("condition_contrast requires condition_b".into()),
            (Outcome::MeanRt | Outcome::AccuracyProportion, Some(_)) => {
                return Err("only condition_contrast takes condition_b".into())
            }
            _ => {}
        }
        match (self.outcome, self.unit) {
            (Outcome::MeanRt, Unit::Proportion) => Err("mean_rt is measured in ms".into()),
            (Outcome::AccuracyProportion, Unit::Ms) => Err("accuracy_proportion is measured as a proportion".into()),
            _ => Ok(()),
        }
    }

    /// Whether the recipe reads the accuracy column.
    pub fn needs_accuracy(&self) -> bool {
        matches!(
            (self.outcome, self.unit),
            (Outcome::AccuracyProportion, _) | (Outcome::ConditionContrast, Unit::Proportion)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureContract {
    pub measure_id: String,
    pub dataset_id: String,
    pub tier: Tier,
    pub aggregation: AggregationRecipe,
    pub description: String,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("cannot read contract {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("contract does not match the schema: {0}")]
    Parse(String),
    #[error("measure '{measure_id}' has an invalid aggregation recipe: {reason}")]
    InvalidRecipe { measure_id: String, reason: String },
    #[error("measure id '{0}' appears more than once")]
    DuplicateMeasure(String),
    #[error("contract immutability violated: tier '{tier}' declares {declared} entries but contains {found}")]
    Immutability { tier: Tier, declared: usize, found: usize },
    #[error("measure '{0}' is not registered in the contract")]
    UnknownMeasure(String),
    #[error("claim-tier violation: measure '{measure_id}' is '{tier}', only primary measures support headline claims")]
    ClaimTierViolation { measure_id: String, tier: Tier },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContract {
    version: String,
    declared_counts: BTreeMap<Tier, usize>,
    entries: Vec<MeasureContract>,
}

/// A loaded, verified contract. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract {
    pub version: String,
    declared_counts: BTreeMap<Tier, usize>,
    entries: Vec<MeasureContract>,
}

impl Contract {
    pub fn from_json(bytes: &[u8]) -> Result<Self, RegistryError> {
        let raw: RawContract = serde_json::from_slice(bytes).map_err(|e| RegistryError::Parse(e.to_string()))?;

        let mut seen = BTreeSet::new();
        for entry in &raw.entries {
            if !seen.insert(entry.measure_id.as_str()) {
                return Err(RegistryError::DuplicateMeasure(entry.measure_id.clone()));
            }
            entry
                .aggregation
                .validate()
                .map_err(|reason| RegistryError::InvalidRecipe {
                    measure_id: entry.measure_id.clone(),
                    reason,
                })?;
        }

        let declared: BTreeMap<Tier, usize> = Tier::ALL
            .iter()
            .map(|&t| (t, raw.declared_counts.get(&t).copied().unwrap_or(0)))
            .collect();
        let contract = Contract {
            version: raw.version,
            declared_counts: declared,
            entries: raw.entries,
        };
        let found = contract.tier_counts();
        for tier in Tier::ALL {
            if found[&tier] != contract.declared_counts[&tier] {
                return Err(RegistryError::Immutability {
                    tier,
                    declared: contract.declared_counts[&tier],
                    found: found[&tier],
                });
            }
        }
        Ok(contract)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let bytes = std::fs::read(path).map_err(|source| RegistryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&bytes)
    }

    pub fn entries(&self) -> &[MeasureContract] {
        &self.entries
    }

    pub fn declared_counts(&self) -> &BTreeMap<Tier, usize> {
        &self.declared_counts
    }

    /// Counts computed from the entries, one key per tier.
    pub fn tier_counts(&self) -> BTreeMap<Tier, usize> {
        let mut counts: BTreeMap<Tier, usize> = Tier::ALL.iter().map(|&t| (t, 0)).collect();
        for e in &self.entries {
            *counts.get_mut(&e.tier).expect("all tiers present") += 1;
        }
        counts
    }

    pub fn get(&self, measure_id: &str) -> Option<&MeasureContract> {
        self.entries.iter().find(|e| e.measure_id == measure_id)
    }

    pub fn primary(&self) -> impl Iterator<Item = &MeasureContract> {
        self.entries.iter().filter(|e| e.tier == Tier::Primary)
    }

    pub fn assert_headline_eligible(&self, measure_id: &str) -> Result<(), RegistryError> {
        let entry = self
            .get(measure_id)
            .ok_or_else(|| RegistryError::UnknownMeasure(measure_id.to_string()))?;
        if entry.tier != Tier::Primary {
            return Err(RegistryError::ClaimTierViolation {
                measure_id: measure_id.to_string(),
                tier: entry.tier,
            });
        }
        Ok(())
    }
}

/// Loads and verifies a contract file.
pub fn load_contract(path: &Path) -> Result<Contract, RegistryError> {
    Contract::load(path)
}

pub fn assert_headline_eligible(measure_id: &str, contract: &Contract) -> Result<(), RegistryError> {
    contract.assert_headline_eligible(measure_id)
}
