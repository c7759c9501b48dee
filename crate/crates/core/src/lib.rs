//! Moral sentiment inference from diachronic word embeddings.
//!
//! Concepts are scored at three tiers: moral relevance, moral polarity and
//! the ten fine-grained Moral Foundations categories. Each tier is a
//! lexicon-seeded classifier (centroid, naive Bayes, kNN or KDE) fitted per
//! decade, and the per-decade scores feed time courses, change retrieval and
//! a regression of change rates on psycholinguistic factors.

pub mod classifier;
pub mod cli;
pub mod diachronic;
pub mod embedding_store;
pub mod error;
pub mod evaluation;
pub mod fixtures;
pub mod format;
pub mod lexicon;
pub mod stats;

pub use error::{Error, Result};
