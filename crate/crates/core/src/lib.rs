//! Core of a three-tier secure search system.
//!
//! The cloud tier only ever handles keyed term tokens and document
//! ciphertext. The trusted edge tier keeps plaintext *abstracts* (small
//! per-cluster samples of terms) and uses them to prune each search down to
//! the few encrypted clusters worth scanning. Abstracts are refined offline
//! from the users' search history with a per-cluster Markov chain and a
//! semantic-radius add/replace rule.

pub mod analytics;
pub mod cloud;
pub mod corpus;
pub mod edge;
pub mod error;
pub mod semantics;

pub use error::{Error, Result};

/// Identifier of a cluster on the cloud tier; always in `0..k`.
pub type ClusterId = u32;

/// Opaque document identifier.
pub type DocId = String;
