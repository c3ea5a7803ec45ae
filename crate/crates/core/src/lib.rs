//! Relationship-aware sequential pattern mining.
//!
//! Sequences are made of typed events grouped into transactions. Events carry
//! concepts from per-type taxonomies, and every pair of events carries
//! relationship concepts from per-type-pair taxonomies. Mining runs in two
//! stages: [`typeminer`] finds frequent patterns of event types together with
//! every occurrence of them, then [`hierminer`] specializes each type-pattern
//! down the taxonomies by maximal itemset mining over its occurrences.

pub mod datagen;
pub mod error;
pub mod hierminer;
pub mod matcher;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod taxonomy;
pub mod typeminer;

#[cfg(test)]
mod testutil;

pub use error::{ModelError, ParseError, TaxonomyError};
