//! Name-keyed registries of interchangeable algorithm strategies.
//!
//! Correlation methods and neighbour-search backends are trait objects
//! registered under a stable name, so the multiverse grid, the pipeline
//! configuration and the CLI can all select them from plain strings.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Anything that can live in a [`StrategyRegistry`].
pub trait Named {
    fn name(&self) -> &'static str;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("unknown {kind} strategy '{name}' (available: {available})")]
    Unknown {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error("{kind} strategy '{name}' registered twice")]
    Duplicate { kind: &'static str, name: String },
}

/// A set of strategies of one kind, looked up by name.
pub struct StrategyRegistry<S: ?Sized + Named> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Arc<S>>,
}

impl<S: ?Sized + Named> StrategyRegistry<S> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, strategy: Arc<S>) -> Result<(), StrategyError> {
        let name = strategy.name();
        if self.entries.contains_key(name) {
            return Err(StrategyError::Duplicate {
                kind: self.kind,
                name: name.to_string(),
            });
        }
        self.entries.insert(name, strategy);
        Ok(())
    }

    /// Builder-style registration for static tables; panics on duplicates.
    pub fn with(mut self, strategy: Arc<S>) -> Self {
        if let Err(e) = self.register(strategy) {
            panic!("{e}");
        }
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<S>, StrategyError> {
        self.entries.get(name).cloned().ok_or_else(|| StrategyError::Unknown {
            kind: self.kind,
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<S: ?Sized + Named> fmt::Debug for StrategyRegistry<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrategyRegistry")
            .field("kind", &self.kind)
            .field("names", &self.names())
            .finish()
    }
}
