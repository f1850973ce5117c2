pub mod bootstrap;
pub mod estimators;
pub mod inference;
pub mod ingest;
pub mod multiverse;
pub mod pipeline;
pub mod provenance;
pub mod registry;
pub mod sample;
pub mod stats;
pub mod strategy;
pub mod synthetic;
